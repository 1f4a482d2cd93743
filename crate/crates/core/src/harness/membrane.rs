//! Two-phase membrane study on a fixed closed surface: diffuse energy
//! `W + I_ε` of a field against the sharp energy of its thresholded phases.

use std::f64::consts::PI;
use std::path::Path;

use log::{info, warn};
use serde::Serialize;

use super::config::Config;
use super::mesh_io::{write_field, write_mesh};
use super::report::write_json_file;
use super::setup::{axis_from_config, potential_from_config, solver_from_config, MassSpec, MeshConfig};
use super::RunOptions;
use crate::energy::{
    density_bound, sharp_energy, total_energy, willmore_hypothesis_holds, DensityReport, EnergyBreakdown, EnergyMode,
    Interpolant, SharpEnergy,
};
use crate::error::{Error, Result};
use crate::minimize::{halfspace_phase, minimize_mm, recovery_field, MinimizeOptions};
use crate::potential::DoubleWell;
use crate::surface::{measures, Point, TriMesh};

/// Relative slack of the diffuse-over-sharp lower bound.
pub const LOWER_BOUND_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MembraneField {
    Constant { value: f64 },
    /// Recovery field of the halfspace phase along `axis`.
    Recovery { axis: Point },
    /// Minimizer of `I_ε` started from the recovery field.
    Minimize { axis: Point },
}

#[derive(Debug, Clone)]
pub struct MembraneConfig {
    pub mesh: MeshConfig,
    pub potential: DoubleWell,
    pub interpolant: Interpolant,
    pub delta: f64,
    pub eps: f64,
    pub field: MembraneField,
    pub mass: Option<MassSpec>,
    pub solver: MinimizeOptions,
    pub probe_radii: Vec<f64>,
}

impl MembraneConfig {
    /// Reads `[mesh]`, `[potential]`, `[solver]` and `[membrane]`:
    ///
    /// ```text
    /// [membrane]
    /// a1 = 1
    /// a2 = 1
    /// delta = 0.5
    /// eps = 0.05
    /// field = minimize           # minimize | recovery | constant
    /// value = 1                  # for field = constant
    /// axis = z
    /// mass_fraction = 0.5
    /// probe_radii = 0.25, 0.5, 1
    /// ```
    pub fn from_config(cfg: &Config) -> Result<Self> {
        const S: &str = "membrane";
        let mesh = MeshConfig::from_config(cfg)?;
        let potential = potential_from_config(cfg)?;
        let interpolant = match Interpolant::new(cfg.require(S, "a1")?, cfg.require(S, "a2")?) {
            Ok(ip) => ip,
            Err(e) => return cfg.invalid(S, "a1", e),
        };
        let delta: f64 = cfg.get_or(S, "delta", 0.0)?;
        if !(delta >= 0.0 && delta.is_finite()) {
            return cfg.invalid(S, "delta", "must be finite and nonnegative");
        }
        let eps: f64 = cfg.get_or(S, "eps", 0.05)?;
        if !(eps > 0.0 && eps.is_finite()) {
            return cfg.invalid(S, "eps", "must be positive");
        }
        let field = match cfg.get_str(S, "field").unwrap_or("minimize") {
            "constant" => MembraneField::Constant {
                value: cfg.require(S, "value")?,
            },
            "recovery" => MembraneField::Recovery {
                axis: axis_from_config(cfg, S, Point::z())?,
            },
            "minimize" => MembraneField::Minimize {
                axis: axis_from_config(cfg, S, Point::z())?,
            },
            other => return cfg.invalid(S, "field", format!("unknown field `{other}` (minimize, recovery, constant)")),
        };
        let mass = MassSpec::from_config(cfg, S)?;
        let probe_radii = cfg.get_list(S, "probe_radii")?.unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
        let solver = solver_from_config(cfg, 0.0)?;
        cfg.ensure_all_used()?;
        Ok(Self {
            mesh,
            potential,
            interpolant,
            delta,
            eps,
            field,
            mass,
            solver,
            probe_radii,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config(&Config::load(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembraneReport {
    pub interpolant: Interpolant,
    pub delta: f64,
    pub eps: f64,
    pub field: MembraneField,
    pub iterations: usize,
    pub converged: bool,
    pub diffuse: EnergyBreakdown,
    pub sharp: SharpEnergy,
    /// `diffuse.total ≥ (1 − LOWER_BOUND_SLACK)·sharp.total`.
    pub lower_bound_holds: bool,
    /// `8π·min(a1, a2) − δ`.
    pub hypothesis_threshold: f64,
    pub hypothesis_holds: bool,
    pub density: DensityReport,
    #[serde(skip)]
    pub vertex_field: Vec<f64>,
    #[serde(skip)]
    pub phase: Vec<f64>,
}

/// Binary P0 field: 1 on triangles with at least two corners at `u ≥ 1/2`.
pub fn threshold_majority(mesh: &TriMesh, field: &[f64]) -> Vec<f64> {
    mesh.triangles()
        .iter()
        .map(|tri| {
            let high = tri.iter().filter(|&&v| field[v] >= 0.5).count();
            if high >= 2 {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

pub fn run_membrane(cfg: &MembraneConfig, run: &RunOptions) -> Result<MembraneReport> {
    let mesh = cfg.mesh.build()?;
    if !mesh.is_closed() {
        return Err(Error::UnsupportedGeometry(
            "the membrane study needs a closed surface".into(),
        ));
    }
    let measure = measures(&mesh)?;
    let w = &cfg.potential;
    let mass = cfg.mass.unwrap_or(MassSpec::Fraction(0.5)).resolve(measure.total_area);
    let (field, iterations, converged) = match cfg.field {
        MembraneField::Constant { value } => (vec![value; mesh.num_vertices()], 0, true),
        MembraneField::Recovery { axis } => {
            let phase = halfspace_phase(&mesh, &measure, axis, mass)?;
            (recovery_field(&mesh, &measure, &phase, cfg.eps, w)?, 0, true)
        }
        MembraneField::Minimize { axis } => {
            let phase = halfspace_phase(&mesh, &measure, axis, mass)?;
            let init = recovery_field(&mesh, &measure, &phase, cfg.eps, w)?;
            let mut opts = cfg.solver.clone();
            opts.mass_target = mass;
            let out = minimize_mm(&mesh, &measure, cfg.eps, w, &opts, Some(&init))?;
            (out.field, out.iterations, out.converged)
        }
    };
    let ip = &cfg.interpolant;
    let diffuse = total_energy(&mesh, &measure, &field, cfg.eps, w, ip, EnergyMode::Full)?;
    let phase = threshold_majority(&mesh, &field);
    let sharp = sharp_energy(&mesh, &measure, &phase, w, ip)?;
    let lower_bound_holds = diffuse.total >= (1.0 - LOWER_BOUND_SLACK) * sharp.total;
    let hypothesis_threshold = 8.0 * PI * ip.min_weight() - cfg.delta;
    let hypothesis_holds = willmore_hypothesis_holds(diffuse.willmore, ip, cfg.delta);
    let density = density_bound(&mesh, &measure, &field, ip, &cfg.probe_radii)?;
    if !hypothesis_holds {
        warn!(
            "membrane: bending energy {:.4} does not stay below 8π·min(a1, a2) − δ = {hypothesis_threshold:.4}",
            diffuse.willmore
        );
    }
    if density.violation {
        warn!("membrane: density {:.4} exceeds the bound {:.4}", density.max_density, density.bound);
    }
    if !lower_bound_holds {
        warn!("membrane: diffuse total {:.4} below sharp total {:.4} minus slack", diffuse.total, sharp.total);
    }
    info!(
        "membrane: diffuse {:.6} (bending {:.6}), sharp {:.6}",
        diffuse.total, diffuse.willmore, sharp.total
    );
    let report = MembraneReport {
        interpolant: *ip,
        delta: cfg.delta,
        eps: cfg.eps,
        field: cfg.field,
        iterations,
        converged,
        diffuse,
        sharp,
        lower_bound_holds,
        hypothesis_threshold,
        hypothesis_holds,
        density,
        vertex_field: field,
        phase,
    };
    if let Some(dir) = &run.out_dir {
        std::fs::create_dir_all(dir)?;
        write_mesh(dir.join("mesh.off"), &mesh)?;
        write_field(dir.join("field.txt"), &report.vertex_field)?;
        write_field(dir.join("phase.txt"), &report.phase)?;
        write_json_file(&report, dir.join("membrane.json"))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> Result<MembraneReport> {
        run_membrane(&MembraneConfig::from_config(&Config::parse(text)?)?, &RunOptions::default())
    }

    #[test]
    fn single_sphere_satisfies_the_hypothesis() {
        let r = run("[mesh]\nkind = icosphere\nsubdivisions = 3\n[membrane]\na1 = 1\na2 = 1\ndelta = 6.28\nfield = constant\nvalue = 1\n")
            .unwrap();
        assert!(r.hypothesis_holds);
        assert!(!r.density.violation);
        assert!((r.diffuse.willmore / (4.0 * PI) - 1.0).abs() < 0.03);
        assert!(r.phase.iter().all(|&p| p == 1.0));
        assert_eq!(r.sharp.jump_length, 0.0);
        assert!(r.lower_bound_holds);
    }

    #[test]
    fn twin_spheres_fail_the_hypothesis() {
        let r = run("[mesh]\nkind = icosphere\nsubdivisions = 3\ncopies = 2\n[membrane]\na1 = 1\na2 = 1\ndelta = 0.01\nfield = constant\nvalue = 1\n")
            .unwrap();
        assert!(!r.hypothesis_holds);
        assert!(!r.density.violation);
    }

    #[test]
    fn open_surfaces_are_rejected() {
        let err = run("[mesh]\nkind = flat_strip\nnx = 4\n[membrane]\na1 = 1\na2 = 1\nfield = constant\nvalue = 1\n");
        assert!(matches!(err, Err(Error::UnsupportedGeometry(_))));
    }

    #[test]
    fn majority_threshold() {
        let mesh = crate::surface::generate(&crate::surface::MeshSpec::FlatStrip { nx: 1, ny: 1, lx: 1.0, ly: 1.0 }).unwrap();
        // vertices (0,0) (1,0) (0,1) (1,1); triangles [0,1,3] and [0,3,2]
        assert_eq!(threshold_majority(&mesh, &[0.5, 0.6, 0.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(threshold_majority(&mesh, &[0.0, 0.0, 0.7, 0.5]), vec![0.0, 1.0]);
    }
}
