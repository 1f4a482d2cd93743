//! Graph currents over simplicial surfaces.
//!
//! For a piecewise-constant field `u` on a mesh `S`, the generalized graph
//! `T_{u,S}` consists of horizontal sheets (copies of each triangle lifted to
//! height `u_T`) and vertical walls over the interior edges where `u` jumps.
//! Its mass is the sheet area plus the wall area, so for a binary field with
//! values `{0, b}` the excess `M(T) − M(S)` is exactly `b` times the length of
//! the jump set. For piecewise-linear fields the graph is a tilted sheet with
//! mass `Σ_T area_T · sqrt(1 + |∇u|²)`.
//!
//! The strictness and measure-function pair reports compare a family of
//! surfaces (and fields) with a limit through their total areas and the
//! integrals `∫ φ(x, u(x)) dμ` of ambient test functions.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{input, Result};
use crate::surface::{
    check_triangle_field, check_vertex_field, per_triangle, triangle_gradient, Point, SurfaceMeasure, TriMesh,
};

/// Relative level shift applied to vertices sitting exactly on the level.
pub const LEVEL_TIE_SHIFT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphCurrent {
    /// Mass of the horizontal stratum (lifted sheets).
    pub horizontal_mass: f64,
    /// Mass of the vertical stratum (walls over jump edges) for P0 fields; the
    /// tilt excess `total − area` for P1 fields.
    pub vertical_mass: f64,
    pub total_mass: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JumpCurve {
    pub segments: Vec<[Point; 2]>,
    pub length: f64,
}

impl JumpCurve {
    fn from_segments(segments: Vec<[Point; 2]>) -> Self {
        let length = segments.iter().fold(0.0, |s, [a, b]| s + (b - a).norm());
        Self { segments, length }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Writes the curve as OBJ `v` and `l` records, one line element per segment.
    pub fn write_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# {} segments, length {:.17e}", self.segments.len(), self.length)?;
        for [a, b] in &self.segments {
            writeln!(w, "v {:.16e} {:.16e} {:.16e}", a.x, a.y, a.z)?;
            writeln!(w, "v {:.16e} {:.16e} {:.16e}", b.x, b.y, b.z)?;
        }
        for i in 0..self.segments.len() {
            writeln!(w, "l {} {}", 2 * i + 1, 2 * i + 2)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sheets plus walls of the graph of a piecewise-constant field.
pub fn graph_mass_p0(mesh: &TriMesh, measure: &SurfaceMeasure, field: &[f64]) -> Result<GraphCurrent> {
    check_triangle_field(mesh, field)?;
    check_measure(mesh, measure)?;
    let horizontal_mass = measure.total_area;
    let vertical_mass: f64 = mesh
        .edges()
        .iter()
        .filter_map(|e| e.pair().map(|(s, t)| (field[s] - field[t]).abs() * mesh.edge_length(e)))
        .sum();
    Ok(GraphCurrent {
        horizontal_mass,
        vertical_mass,
        total_mass: horizontal_mass + vertical_mass,
    })
}

/// Mass of the graph of the linear interpolant of a vertex field.
pub fn graph_mass_p1(mesh: &TriMesh, measure: &SurfaceMeasure, field: &[f64]) -> Result<GraphCurrent> {
    check_vertex_field(mesh, field)?;
    check_measure(mesh, measure)?;
    let per_tri = per_triangle(mesh, |t| {
        let g = triangle_gradient(mesh, t, field);
        measure.triangle_areas[t] * (1.0 + g.norm_squared()).sqrt()
    });
    let total_mass: f64 = per_tri.iter().sum();
    Ok(GraphCurrent {
        horizontal_mass: measure.total_area,
        vertical_mass: total_mass - measure.total_area,
        total_mass,
    })
}

/// Interior edges whose two triangles carry different values.
pub fn jump_curve_p0(mesh: &TriMesh, field: &[f64]) -> Result<JumpCurve> {
    check_triangle_field(mesh, field)?;
    let v = mesh.vertices();
    let segments = mesh
        .edges()
        .iter()
        .filter(|e| e.pair().is_some_and(|(s, t)| field[s] != field[t]))
        .map(|e| [v[e.vertices[0]], v[e.vertices[1]]])
        .collect();
    Ok(JumpCurve::from_segments(segments))
}

/// Marching-triangles isocontour of the linear interpolant at `level`.
///
/// Vertices exactly on the level are treated as lying `η = 1e-12 · range`
/// above it, so every crossed triangle yields one segment of positive length.
pub fn level_curve_p1(mesh: &TriMesh, field: &[f64], level: f64) -> Result<JumpCurve> {
    check_vertex_field(mesh, field)?;
    if !level.is_finite() {
        return input(format!("level {level} is not finite"));
    }
    let (lo, hi) = field
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let eta = LEVEL_TIE_SHIFT * (hi - lo);
    let shifted = |x: f64| if x == level { level + eta } else { x };
    let v = mesh.vertices();

    // canonical edge orientation so both triangles of an edge produce the same point
    let crossing = |a: usize, b: usize| -> Point {
        let (a, b) = (a.min(b), a.max(b));
        let (ua, ub) = (shifted(field[a]), shifted(field[b]));
        let s = (level - ua) / (ub - ua);
        v[a] + (v[b] - v[a]) * s
    };

    let mut segments = Vec::new();
    for tri in mesh.triangles() {
        let above = tri.map(|i| shifted(field[i]) > level);
        let count = above.iter().filter(|&&x| x).count();
        if count == 0 || count == 3 {
            continue;
        }
        // the corner alone on its side of the level
        let lone = (0..3)
            .find(|&k| above[k] == (count == 1))
            .expect("a mixed triangle has a lone corner");
        let (i, j, k) = (tri[lone], tri[(lone + 1) % 3], tri[(lone + 2) % 3]);
        segments.push([crossing(i, j), crossing(i, k)]);
    }
    Ok(JumpCurve::from_segments(segments))
}

fn check_measure(mesh: &TriMesh, measure: &SurfaceMeasure) -> Result<()> {
    if measure.triangle_areas.len() != mesh.num_triangles() || measure.vertex_masses.len() != mesh.num_vertices() {
        return input("measure does not belong to this mesh");
    }
    Ok(())
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrictnessReport {
    pub areas: Vec<f64>,
    pub limit_area: f64,
    pub gaps: Vec<f64>,
    pub monotone_convergent: bool,
}

/// Total-mass diagnostic of strict convergence for a family of surfaces.
///
/// `monotone_convergent` is set when the gaps `|area_j − area_limit|` strictly
/// decrease (or the family has a single member with zero gap).
pub fn strictness_report(family: &[(&TriMesh, &SurfaceMeasure)], limit: (&TriMesh, &SurfaceMeasure)) -> Result<StrictnessReport> {
    if family.is_empty() {
        return input("strictness report needs a nonempty family");
    }
    let limit_area = limit.1.total_area;
    let areas: Vec<f64> = family.iter().map(|(_, m)| m.total_area).collect();
    let gaps: Vec<f64> = areas.iter().map(|a| (a - limit_area).abs()).collect();
    let monotone_convergent = if gaps.len() == 1 { gaps[0] == 0.0 } else { strictly_decreasing(&gaps) };
    Ok(StrictnessReport {
        areas,
        limit_area,
        gaps,
        monotone_convergent,
    })
}

type AmbientFn = dyn Fn(&Point, f64) -> f64 + Send + Sync;

/// Continuous function `φ(x, y)` of a surface point `x` and a field value `y`.
pub struct TestFunction {
    pub name: String,
    func: Box<AmbientFn>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).finish_non_exhaustive()
    }
}

impl TestFunction {
    pub fn new(name: impl Into<String>, func: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            func: Box::new(func),
        }
    }

    pub fn one() -> Self {
        Self::new("one", |_, _| 1.0)
    }

    pub fn value() -> Self {
        Self::new("y", |_, y| y)
    }

    pub fn value_squared() -> Self {
        Self::new("y^2", |_, y| y * y)
    }

    /// Gaussian bump `exp(−|x − center|² / width²)` in the ambient position.
    pub fn bump(center: Point, width: f64) -> Self {
        Self::new("bump_x", move |x, _| (-(x - center).norm_squared() / (width * width)).exp())
    }

    /// The default test set `{1, y, y², bump in x}`.
    pub fn standard_set() -> Vec<Self> {
        vec![
            Self::one(),
            Self::value(),
            Self::value_squared(),
            Self::bump(Point::new(0.3, 0.2, 0.5), 0.5),
        ]
    }

    pub fn eval(&self, x: &Point, y: f64) -> f64 {
        (self.func)(x, y)
    }
}

/// A surface with its measure and a vertex field.
pub type MeasureFunctionPair<'a> = (&'a TriMesh, &'a SurfaceMeasure, &'a [f64]);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfpRow {
    pub test_function: String,
    pub integrals: Vec<f64>,
    pub limit_integral: f64,
    pub gaps: Vec<f64>,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MfpReport {
    pub rows: Vec<MfpRow>,
    /// `∫|u_j| dμ_j` per member, the mass of the field part of each graph.
    pub field_l1: Vec<f64>,
    pub limit_field_l1: f64,
}

/// Lumped `∫ φ(x, u(x)) dμ`.
pub fn pair_integral(pair: MeasureFunctionPair<'_>, phi: &TestFunction) -> Result<f64> {
    let (mesh, measure, field) = pair;
    check_vertex_field(mesh, field)?;
    check_measure(mesh, measure)?;
    Ok(mesh
        .vertices()
        .iter()
        .zip(field)
        .zip(&measure.vertex_masses)
        .map(|((x, &y), m)| m * phi.eval(x, y))
        .sum())
}

/// Measure-function pair diagnostic: per test function, the family integrals
/// and their gaps to the limit integral.
pub fn mfp_test(
    family: &[MeasureFunctionPair<'_>],
    limit: MeasureFunctionPair<'_>,
    testset: &[TestFunction],
) -> Result<MfpReport> {
    if family.is_empty() {
        return input("measure-function pair test needs a nonempty family");
    }
    let mut rows = Vec::with_capacity(testset.len());
    for phi in testset {
        let limit_integral = pair_integral(limit, phi)?;
        let integrals = family.iter().map(|&p| pair_integral(p, phi)).collect::<Result<Vec<_>>>()?;
        let gaps: Vec<f64> = integrals.iter().map(|i| (i - limit_integral).abs()).collect();
        let decreasing = if gaps.len() == 1 { gaps[0] == 0.0 } else { strictly_decreasing(&gaps) };
        rows.push(MfpRow {
            test_function: phi.name.clone(),
            integrals,
            limit_integral,
            gaps,
            decreasing,
        });
    }
    let abs = TestFunction::new("|y|", |_, y| y.abs());
    let field_l1 = family.iter().map(|&p| pair_integral(p, &abs)).collect::<Result<Vec<_>>>()?;
    Ok(MfpReport {
        rows,
        field_l1,
        limit_field_l1: pair_integral(limit, &abs)?,
    })
}
