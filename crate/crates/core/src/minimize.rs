//! Mass-constrained minimization of the discrete Modica–Mortola energy.
//!
//! The constraint set is `{u : Σ_v m_v u_v = m}`. Descent runs in the lumped
//! `L²(μ)` metric: the search direction is `M⁻¹∇I_ε` with its `μ`-mean removed,
//! so a step stays on the constraint and [`project_mass`] only cleans up
//! round-off. Steps come from a Barzilai–Borwein proposal followed by Armijo
//! backtracking.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{modica_mortola, EnergyBreakdown, RESOLUTION_FACTOR};
use crate::error::{input, Error, Result};
use crate::potential::DoubleWell;
use crate::surface::{
    check_triangle_field, check_vertex_field, half_cotangents, per_triangle, stiffness_apply_unchecked, Point,
    SurfaceMeasure, TriMesh,
};

/// Backtracking reductions before a line search is declared stagnant.
pub const MAX_BACKTRACKS: usize = 60;
const ARMIJO: f64 = 1e-4;
const BB_MIN: f64 = 1e-6;
const BB_MAX: f64 = 1e2;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub mass_target: f64,
    pub max_iterations: usize,
    /// Threshold on the `L²(μ)` norm of the projected gradient.
    pub grad_tolerance: f64,
    pub step_init: f64,
    pub backtrack_factor: f64,
    pub seed: u64,
    /// Convergence trace written as CSV when set.
    pub trace: Option<PathBuf>,
}

impl MinimizeOptions {
    pub fn new(mass_target: f64) -> Self {
        Self {
            mass_target,
            max_iterations: 20_000,
            grad_tolerance: 1e-6,
            step_init: 1e-2,
            backtrack_factor: 0.5,
            seed: 0,
            trace: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mass_target.is_finite() {
            return input("mass target must be finite");
        }
        if self.max_iterations < 1 {
            return input("max_iterations must be at least 1");
        }
        if !(self.grad_tolerance > 0.0) || !(self.step_init > 0.0) {
            return input("grad_tolerance and step_init must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return input(format!("backtrack_factor must lie in (0, 1), got {}", self.backtrack_factor));
        }
        Ok(())
    }
}

/// Shifts `field` by a constant so that `∫u dμ = m`; this is the `L²(μ)`
/// projection onto the constraint.
pub fn project_mass(field: &[f64], measure: &SurfaceMeasure, mass: f64) -> Result<Vec<f64>> {
    if field.len() != measure.vertex_masses.len() {
        return input(format!(
            "field has {} values, measure has {} vertices",
            field.len(),
            measure.vertex_masses.len()
        ));
    }
    if !(measure.total_area > 0.0) {
        return input("measure has no area");
    }
    Ok(project_unchecked(field, measure, mass))
}

fn project_unchecked(field: &[f64], measure: &SurfaceMeasure, mass: f64) -> Vec<f64> {
    let shift = (mass - measure.integrate(field)) / measure.total_area;
    field.iter().map(|u| u + shift).collect()
}

/// Discrete energy with cached cotangents; the line search runs on this.
struct Problem<'a> {
    mesh: &'a TriMesh,
    measure: &'a SurfaceMeasure,
    eps: f64,
    w: &'a DoubleWell,
    cot: Vec<[f64; 3]>,
}

impl<'a> Problem<'a> {
    fn new(mesh: &'a TriMesh, measure: &'a SurfaceMeasure, eps: f64, w: &'a DoubleWell) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return input(format!("epsilon must be positive and finite, got {eps}"));
        }
        if !w.supports_minimization() {
            return Err(Error::Capability(
                "gradient-based minimization needs a potential with a derivative (tabulated potentials are evaluation-only)"
                    .into(),
            ));
        }
        Ok(Self {
            mesh,
            measure,
            eps,
            w,
            cot: per_triangle(mesh, |t| half_cotangents(mesh, t)),
        })
    }

    fn energy(&self, u: &[f64]) -> Result<f64> {
        let tris = self.mesh.triangles();
        let per_tri = per_triangle(self.mesh, |t| {
            let tri = tris[t];
            let w = self.cot[t];
            (0..3)
                .map(|k| {
                    let d = u[tri[(k + 1) % 3]] - u[tri[(k + 2) % 3]];
                    w[k] * d * d
                })
                .sum::<f64>()
        });
        let mut potential = 0.0;
        for (x, m) in u.iter().zip(&self.measure.vertex_masses) {
            potential += m * self.w.value(*x)?;
        }
        Ok(self.eps * per_tri.iter().sum::<f64>() + potential / self.eps)
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let ku = stiffness_apply_unchecked(self.mesh, u);
        ku.iter()
            .zip(u)
            .zip(&self.measure.vertex_masses)
            .map(|((k, x), m)| Ok(2.0 * self.eps * k + m * self.w.derivative(*x)? / self.eps))
            .collect()
    }

    /// `M⁻¹g` minus its `μ`-mean, and its `L²(μ)` norm.
    fn direction(&self, g: &[f64]) -> (Vec<f64>, f64) {
        let masses = &self.measure.vertex_masses;
        let mean = g.iter().sum::<f64>() / self.measure.total_area;
        let d: Vec<f64> = g.iter().zip(masses).map(|(gv, m)| gv / m - mean).collect();
        let norm = d.iter().zip(masses).map(|(x, m)| m * x * x).sum::<f64>().sqrt();
        (d, norm)
    }
}

/// Exact gradient of the discrete `mm_value` with respect to the vertex values:
/// `2ε·K u + M W′(u)/ε`.
pub fn mm_gradient(
    mesh: &TriMesh,
    measure: &SurfaceMeasure,
    field: &[f64],
    eps: f64,
    w: &DoubleWell,
) -> Result<Vec<f64>> {
    check_vertex_field(mesh, field)?;
    Problem::new(mesh, measure, eps, w)?.gradient(field)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOutcome {
    pub field: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

/// Default start: seeded values in `[0.45, 0.55]`.
pub fn default_init(num_vertices: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_vertices).map(|_| rng.random_range(0.45..=0.55)).collect()
}

/// Projected gradient descent for `I_ε` under `∫u dμ = m`.
///
/// Accepted steps never increase the energy. A line search that fails after
/// [`MAX_BACKTRACKS`] reductions yields [`Error::Stagnation`] with the last
/// accepted iterate. Hitting `max_iterations` is not an error; the outcome
/// then has `converged == false`.
pub fn minimize_mm(
    mesh: &TriMesh,
    measure: &SurfaceMeasure,
    eps: f64,
    w: &DoubleWell,
    opts: &MinimizeOptions,
    init: Option<&[f64]>,
) -> Result<MinimizeOutcome> {
    opts.validate()?;
    let problem = Problem::new(mesh, measure, eps, w)?;
    let h = mesh.mean_edge_length();
    if eps < RESOLUTION_FACTOR * h {
        warn!("epsilon {eps} is below {RESOLUTION_FACTOR} x mean edge length {h:.4}; the interface is under-resolved");
    }
    let start = match init {
        Some(u) => {
            check_vertex_field(mesh, u)?;
            if u.iter().any(|x| !x.is_finite()) {
                return input("initial field has non-finite values");
            }
            u.to_vec()
        }
        None => default_init(mesh.num_vertices(), opts.seed),
    };
    let mass = opts.mass_target;
    let mut u = project_mass(&start, measure, mass)?;
    let mut energy = problem.energy(&u)?;
    let mut grad = problem.gradient(&u)?;
    let (mut dir, mut norm) = problem.direction(&grad);

    let mut trace = match &opts.trace {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(w, "iteration,energy,grad_norm,step")?;
            writeln!(w, "0,{energy:.17e},{norm:.17e},0")?;
            Some(w)
        }
        None => None,
    };

    let masses = &measure.vertex_masses;
    let mut step = opts.step_init;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = norm <= opts.grad_tolerance;

    while !converged && iterations < opts.max_iterations {
        if let Some((u_old, d_old)) = &prev {
            // BB1 in the μ-metric
            let (mut ss, mut sy) = (0.0, 0.0);
            for v in 0..u.len() {
                let s = u[v] - u_old[v];
                ss += masses[v] * s * s;
                sy += masses[v] * s * (dir[v] - d_old[v]);
            }
            step = if sy > 0.0 { ss / sy } else { opts.step_init };
            step = step.clamp(BB_MIN * opts.step_init, BB_MAX * opts.step_init);
        }

        // exact energy change along the ray, free of cancellation between large terms
        let kd = stiffness_apply_unchecked(mesh, &dir);
        let curvature: f64 = kd.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() * eps;
        let slope = grad.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let mut higher = 0.0;
            for v in 0..u.len() {
                higher += masses[v] * w.higher_order_increment(u[v], -step * dir[v])?;
            }
            let delta = -step * slope + step * step * curvature + higher / eps;
            if delta <= -ARMIJO * step * slope {
                let trial: Vec<f64> = u.iter().zip(&dir).map(|(x, d)| x - step * d).collect();
                accepted = Some((project_unchecked(&trial, measure, mass), energy + delta));
                break;
            }
            step *= opts.backtrack_factor;
        }
        let Some((next, e)) = accepted else {
            return Err(Error::Stagnation {
                iterations,
                energy,
                iterate: u,
            });
        };
        debug_assert!(e <= energy);
        let g = problem.gradient(&next)?;
        let (d, n) = problem.direction(&g);
        prev = Some((std::mem::replace(&mut u, next), std::mem::replace(&mut dir, d)));
        energy = e;
        grad = g;
        norm = n;
        iterations += 1;
        converged = norm <= opts.grad_tolerance;
        if let Some(w) = trace.as_mut() {
            writeln!(w, "{iterations},{energy:.17e},{norm:.17e},{step:.17e}")?;
        }
    }
    if let Some(mut w) = trace {
        w.flush()?;
    }
    debug!("minimize_mm: eps {eps}, {iterations} iterations, energy {energy}, |grad| {norm:e}, converged {converged}");
    let breakdown = modica_mortola(mesh, measure, &u, eps, w)?;
    Ok(MinimizeOutcome {
        field: u,
        energy: breakdown,
        iterations,
        converged,
        grad_norm: norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Per-vertex phase of a binary P0 field: 1 where the incident triangles of
/// phase 1 hold at least half of the vertex's area.
pub fn vertex_phase(mesh: &TriMesh, measure: &SurfaceMeasure, phase: &[f64]) -> Result<Vec<bool>> {
    check_triangle_field(mesh, phase)?;
    if let Some(t) = phase.iter().position(|&u| u != 0.0 && u != 1.0) {
        return input(format!("phase field must be binary; triangle {t} has {}", phase[t]));
    }
    let mut weight = vec![0.0; mesh.num_vertices()];
    for (tri, (a, u)) in mesh.triangles().iter().zip(measure.triangle_areas.iter().zip(phase)) {
        for &v in tri {
            weight[v] += a / 3.0 * u;
        }
    }
    Ok(weight
        .iter()
        .zip(&measure.vertex_masses)
        .map(|(w, m)| w / m >= 0.5)
        .collect())
}

/// Signed edge-graph distance from each vertex to the interface between the
/// vertex phases, positive on the phase-1 side. The interface crosses each
/// mixed edge at its midpoint. `None` when all vertices share one phase.
pub fn signed_distance(mesh: &TriMesh, vertex_phase: &[bool]) -> Option<Vec<f64>> {
    let adj = mesh.adjacency();
    let mut dist = vec![f64::INFINITY; mesh.num_vertices()];
    let mut heap = BinaryHeap::new();
    for e in mesh.edges() {
        let [a, b] = e.vertices;
        if vertex_phase[a] != vertex_phase[b] {
            let half = 0.5 * mesh.edge_length(e);
            for v in [a, b] {
                if half < dist[v] {
                    dist[v] = half;
                    heap.push(Reverse((Dist(half), v)));
                }
            }
        }
    }
    if heap.is_empty() {
        return None;
    }
    while let Some(Reverse((Dist(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(n, len) in &adj[v] {
            // distances propagate only within a phase
            if vertex_phase[n] == vertex_phase[v] && d + len < dist[n] {
                dist[n] = d + len;
                heap.push(Reverse((Dist(d + len), n)));
            }
        }
    }
    Some(
        dist.iter()
            .zip(vertex_phase)
            .map(|(&d, &p)| if p { d } else { -d })
            .collect(),
    )
}

/// Recovery field `u_v = σ(d_v/ε)` built from a binary P0 phase field, with
/// `d` the signed graph distance to the phase interface and `σ` the optimal
/// one-dimensional profile of `w`.
pub fn recovery_field(
    mesh: &TriMesh,
    measure: &SurfaceMeasure,
    phase: &[f64],
    eps: f64,
    w: &DoubleWell,
) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return input(format!("epsilon must be positive and finite, got {eps}"));
    }
    let vp = vertex_phase(mesh, measure, phase)?;
    let Some(dist) = signed_distance(mesh, &vp) else {
        let value = if vp.first().copied().unwrap_or(false) { 1.0 } else { 0.0 };
        return Ok(vec![value; mesh.num_vertices()]);
    };
    dist.iter()
        .map(|d| {
            // components without an interface sit at infinite distance
            let t = (d / eps).clamp(-1e3, 1e3);
            Ok(w.optimal_profile(t)?.clamp(0.0, 1.0))
        })
        .collect()
}

/// Binary P0 field that sets to 1 the triangles furthest along `axis`, until
/// their area first reaches `target_area`.
pub fn halfspace_phase(mesh: &TriMesh, measure: &SurfaceMeasure, axis: Point, target_area: f64) -> Result<Vec<f64>> {
    if !(axis.norm() > 0.0) {
        return input("halfspace axis must be nonzero");
    }
    let mut order: Vec<usize> = (0..mesh.num_triangles()).collect();
    let key = |t: usize| mesh.barycenter(t).dot(&axis);
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    let mut phase = vec![0.0; mesh.num_triangles()];
    let mut acc = 0.0;
    for t in order {
        if acc >= target_area {
            break;
        }
        // stop where the running area is closest to the target
        let a = measure.triangle_areas[t];
        if acc + a - target_area > target_area - acc {
            break;
        }
        phase[t] = 1.0;
        acc += a;
    }
    Ok(phase)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start<'a> {
    /// Use this vertex field for the first ε.
    Field(&'a [f64]),
    /// Build the recovery field of this binary P0 phase at the first ε.
    Phase(&'a [f64]),
    /// Seeded noise around 1/2, as in [`minimize_mm`] without an init.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationStep {
    pub eps: f64,
    #[serde(skip)]
    pub field: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug)]
pub struct ContinuationOutcome {
    pub steps: Vec<ContinuationStep>,
    /// First solver failure with the ε it occurred at; later ε values are skipped.
    pub failure: Option<(f64, Error)>,
}

/// Solves a strictly decreasing sequence of ε values, warm-starting each from
/// the previous minimizer.
pub fn epsilon_continuation(
    mesh: &TriMesh,
    measure: &SurfaceMeasure,
    eps_list: &[f64],
    w: &DoubleWell,
    opts: &MinimizeOptions,
    start: Start<'_>,
) -> Result<ContinuationOutcome> {
    if eps_list.is_empty() {
        return input("epsilon list is empty");
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return input("epsilon values must be positive and finite");
    }
    if eps_list.windows(2).any(|p| p[1] >= p[0]) {
        return input("epsilon list must be strictly decreasing");
    }
    opts.validate()?;
    let mut current: Option<Vec<f64>> = match start {
        Start::Field(u) => Some(u.to_vec()),
        Start::Phase(p) => Some(recovery_field(mesh, measure, p, eps_list[0], w)?),
        Start::Random => None,
    };
    let mut steps = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        match minimize_mm(mesh, measure, eps, w, opts, current.as_deref()) {
            Ok(out) => {
                current = Some(out.field.clone());
                steps.push(ContinuationStep {
                    eps,
                    field: out.field,
                    energy: out.energy,
                    iterations: out.iterations,
                    converged: out.converged,
                });
            }
            Err(e) => {
                return Ok(ContinuationOutcome {
                    steps,
                    failure: Some((eps, e)),
                });
            }
        }
    }
    Ok(ContinuationOutcome { steps, failure: None })
}
