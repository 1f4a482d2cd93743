//! Families of perturbed spheres converging to the round sphere.

use std::path::Path;

use log::info;
use serde::Serialize;

use super::config::Config;
use super::report::write_json_file;
use super::setup::{axis_from_config, potential_from_config};
use super::RunOptions;
use crate::currents::{level_curve_p1, mfp_test, strictness_report, MfpReport, StrictnessReport, TestFunction};
use crate::energy::modica_mortola;
use crate::error::Result;
use crate::potential::DoubleWell;
use crate::surface::{generate, measures, MeshSpec, Point, TriMesh};

/// Relative slack of the liminf check.
pub const LIMINF_SLACK: f64 = 0.05;

/// A field defined from ambient position, applied to every member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldRecipe {
    Constant { value: f64 },
    /// `σ(x·axis/ε)` with `σ` the optimal profile.
    Profile { axis: Point },
}

impl FieldRecipe {
    pub fn apply(&self, mesh: &TriMesh, eps: f64, w: &DoubleWell) -> Result<Vec<f64>> {
        match *self {
            Self::Constant { value } => Ok(vec![value; mesh.num_vertices()]),
            Self::Profile { axis } => mesh
                .vertices()
                .iter()
                .map(|p| w.optimal_profile(p.dot(&axis) / eps))
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VaryingConfig {
    pub members: usize,
    /// Member `j` (from 1) has amplitude `amplitude / j`.
    pub amplitude: f64,
    pub subdivisions: u32,
    pub radius: f64,
    pub frequency: u32,
    pub eps: f64,
    pub field: FieldRecipe,
    pub potential: DoubleWell,
}

impl VaryingConfig {
    /// Reads `[potential]` and `[varying]`:
    ///
    /// ```text
    /// [varying]
    /// members = 5
    /// amplitude = 0.2
    /// subdivisions = 4
    /// radius = 1
    /// frequency = 3
    /// eps = 0.1
    /// field = profile            # profile | constant
    /// axis = z
    /// value = 1                  # for field = constant
    /// ```
    pub fn from_config(cfg: &Config) -> Result<Self> {
        const S: &str = "varying";
        let members: usize = cfg.get_or(S, "members", 5)?;
        if members == 0 {
            return cfg.invalid(S, "members", "must be at least 1");
        }
        let amplitude: f64 = cfg.require(S, "amplitude")?;
        let radius: f64 = cfg.get_or(S, "radius", 1.0)?;
        if !(amplitude >= 0.0 && amplitude < radius) {
            return cfg.invalid(S, "amplitude", "must lie in [0, radius)");
        }
        let eps: f64 = cfg.get_or(S, "eps", 0.1)?;
        if !(eps > 0.0 && eps.is_finite()) {
            return cfg.invalid(S, "eps", "must be positive");
        }
        let field = match cfg.get_str(S, "field").unwrap_or("profile") {
            "profile" => FieldRecipe::Profile {
                axis: axis_from_config(cfg, S, Point::z())?,
            },
            "constant" => FieldRecipe::Constant {
                value: cfg.require(S, "value")?,
            },
            other => return cfg.invalid(S, "field", format!("unknown field `{other}` (profile, constant)")),
        };
        let out = Self {
            members,
            amplitude,
            subdivisions: cfg.get_or(S, "subdivisions", 4)?,
            radius,
            frequency: cfg.get_or(S, "frequency", 3)?,
            eps,
            field,
            potential: potential_from_config(cfg)?,
        };
        cfg.ensure_all_used()?;
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config(&Config::load(path)?)
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        (1..=self.members).map(|j| self.amplitude / j as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VaryingReport {
    pub amplitudes: Vec<f64>,
    pub strictness: StrictnessReport,
    pub mfp: MfpReport,
    pub mm_values: Vec<f64>,
    /// `2k` times the length of the limit field's `1/2` level curve.
    pub limit_line_energy: f64,
    /// `min_j mm_j ≥ (1 − LIMINF_SLACK)·limit_line_energy`.
    pub liminf_holds: bool,
}

impl VaryingReport {
    /// Strictly decreasing mfp gaps for every test function.
    pub fn mfp_decreasing(&self) -> bool {
        self.mfp.rows.iter().all(|r| r.decreasing)
    }
}

pub fn run_varying(cfg: &VaryingConfig, run: &RunOptions) -> Result<VaryingReport> {
    let w = &cfg.potential;
    let amplitudes = cfg.amplitudes();
    let member = |amplitude: f64| {
        generate(&MeshSpec::PerturbedSphere {
            subdivisions: cfg.subdivisions,
            radius: cfg.radius,
            amplitude,
            frequency: cfg.frequency,
        })
    };
    let meshes = amplitudes.iter().map(|&a| member(a)).collect::<Result<Vec<_>>>()?;
    let limit = generate(&MeshSpec::Icosphere {
        subdivisions: cfg.subdivisions,
        radius: cfg.radius,
    })?;
    let family_measures = meshes.iter().map(measures).collect::<Result<Vec<_>>>()?;
    let limit_measure = measures(&limit)?;
    let fields = meshes
        .iter()
        .map(|m| cfg.field.apply(m, cfg.eps, w))
        .collect::<Result<Vec<_>>>()?;
    let limit_field = cfg.field.apply(&limit, cfg.eps, w)?;

    let family: Vec<_> = meshes.iter().zip(&family_measures).collect();
    let strictness = strictness_report(&family.iter().map(|&(m, mu)| (m, mu)).collect::<Vec<_>>(), (&limit, &limit_measure))?;
    let pairs: Vec<_> = family
        .iter()
        .zip(&fields)
        .map(|(&(m, mu), u)| (m, mu, u.as_slice()))
        .collect();
    let mfp = mfp_test(&pairs, (&limit, &limit_measure, &limit_field), &TestFunction::standard_set())?;
    let mm_values = pairs
        .iter()
        .map(|&(m, mu, u)| Ok(modica_mortola(m, mu, u, cfg.eps, w)?.mm_value))
        .collect::<Result<Vec<_>>>()?;
    let limit_line_energy = 2.0 * w.tension_constant()? * level_curve_p1(&limit, &limit_field, 0.5)?.length;
    let min_mm = mm_values.iter().copied().fold(f64::INFINITY, f64::min);
    let liminf_holds = min_mm >= (1.0 - LIMINF_SLACK) * limit_line_energy;
    info!(
        "varying: area gaps {:?}, min mm {min_mm:.6}, limit {limit_line_energy:.6}",
        strictness.gaps
    );
    let report = VaryingReport {
        amplitudes,
        strictness,
        mfp,
        mm_values,
        limit_line_energy,
        liminf_holds,
    };
    if let Some(dir) = &run.out_dir {
        std::fs::create_dir_all(dir)?;
        write_json_file(&report, dir.join("varying.json"))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> VaryingReport {
        run_varying(&VaryingConfig::from_config(&Config::parse(text).unwrap()).unwrap(), &RunOptions::default()).unwrap()
    }

    #[test]
    fn zero_amplitude_has_zero_gaps() {
        let r = run("[varying]\nmembers = 3\namplitude = 0\nsubdivisions = 2\n");
        assert!(r.strictness.gaps.iter().all(|&g| g == 0.0));
        for row in &r.mfp.rows {
            assert!(row.gaps.iter().all(|&g| g == 0.0), "{}", row.test_function);
        }
    }

    #[test]
    fn constant_one_has_no_energy() {
        let r = run("[varying]\nmembers = 3\namplitude = 0.2\nsubdivisions = 2\nfield = constant\nvalue = 1\n");
        assert!(r.mm_values.iter().all(|&e| e == 0.0));
        assert_eq!(r.limit_line_energy, 0.0);
        assert!(r.liminf_holds);
    }

    #[test]
    fn amplitude_schedule() {
        let cfg = VaryingConfig::from_config(&Config::parse("[varying]\nmembers = 4\namplitude = 0.2\n").unwrap()).unwrap();
        assert_eq!(cfg.amplitudes(), vec![0.2, 0.1, 0.2 / 3.0, 0.05]);
        assert!(VaryingConfig::from_config(&Config::parse("[varying]\namplitude = 1.5\n").unwrap()).is_err());
    }
}
