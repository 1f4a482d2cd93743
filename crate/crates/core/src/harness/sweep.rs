//! ε-sweeps on a fixed surface.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

use super::config::Config;
use super::mesh_io::{read_field, write_field, write_mesh};
use super::report::{write_json_file, write_report, ReportFormat, SweepRecord};
use super::setup::{axis_from_config, potential_from_config, solver_from_config, MassSpec, MeshConfig};
use super::RunOptions;
use crate::currents::level_curve_p1;
use crate::energy::{willmore, Interpolant};
use crate::error::{input, Result};
use crate::minimize::{epsilon_continuation, halfspace_phase, MinimizeOptions, Start};
use crate::potential::DoubleWell;
use crate::surface::{measures, Point, SurfaceMeasure, TriMesh};

#[derive(Debug, Clone, PartialEq)]
pub enum SweepInit {
    /// Recovery field of the halfspace phase along `axis` holding the target mass.
    Recovery { axis: Point },
    Random,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub mesh: MeshConfig,
    pub potential: DoubleWell,
    pub eps: Vec<f64>,
    /// Mass target; half the total area when unset.
    pub mass: Option<MassSpec>,
    pub solver: MinimizeOptions,
    pub init: SweepInit,
    /// Bending weights for the `willmore` column on closed surfaces.
    pub interpolant: Interpolant,
    pub trace: bool,
}

impl SweepConfig {
    /// Reads `[mesh]`, `[potential]`, `[solver]` and `[sweep]`:
    ///
    /// ```text
    /// [sweep]
    /// eps = 0.2, 0.1, 0.05
    /// mass_fraction = 0.5        # or: mass = 6.283
    /// init = recovery            # recovery | random | file
    /// axis = x                   # halfspace direction for recovery
    /// field = start.txt          # for init = file
    /// a1 = 1
    /// a2 = 1
    /// trace = false
    /// ```
    pub fn from_config(cfg: &Config) -> Result<Self> {
        const S: &str = "sweep";
        let mesh = MeshConfig::from_config(cfg)?;
        let potential = potential_from_config(cfg)?;
        let Some(eps) = cfg.get_list::<f64>(S, "eps")? else {
            return cfg.invalid(S, "eps", "missing epsilon list");
        };
        if eps.is_empty() {
            return cfg.invalid(S, "eps", "epsilon list is empty");
        }
        let mass = MassSpec::from_config(cfg, S)?;
        let init = match cfg.get_str(S, "init").unwrap_or("recovery") {
            "recovery" => SweepInit::Recovery {
                axis: axis_from_config(cfg, S, Point::x())?,
            },
            "random" => SweepInit::Random,
            "file" => match cfg.get_path(S, "field") {
                Some(p) => SweepInit::File(p),
                None => return cfg.invalid(S, "init", "init = file needs a `field` path"),
            },
            other => return cfg.invalid(S, "init", format!("unknown init `{other}` (recovery, random, file)")),
        };
        let interpolant = match Interpolant::new(cfg.get_or(S, "a1", 1.0)?, cfg.get_or(S, "a2", 1.0)?) {
            Ok(ip) => ip,
            Err(e) => return cfg.invalid(S, "a1", e),
        };
        let trace = cfg.get_or(S, "trace", false)?;
        let solver = solver_from_config(cfg, 0.0)?;
        cfg.ensure_all_used()?;
        Ok(Self {
            mesh,
            potential,
            eps,
            mass,
            solver,
            init,
            interpolant,
            trace,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config(&Config::load(path)?)
    }

    fn mass_target(&self, measure: &SurfaceMeasure) -> f64 {
        self.mass
            .unwrap_or(MassSpec::Fraction(0.5))
            .resolve(measure.total_area)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub eps: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<SweepFailure>,
    #[serde(skip)]
    pub fields: Vec<Vec<f64>>,
}

impl SweepReport {
    /// Ratios in sweep order (decreasing ε).
    pub fn ratios(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ratio).collect()
    }

    /// Whether the ratio, read as a function of ε, does not increase with ε
    /// beyond a relative `slack`: `ratio(ε_small) ≥ ratio(ε_large)·(1 − slack)`.
    pub fn ratio_nonincreasing_in_eps(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|p| p[1].ratio >= p[0].ratio * (1.0 - slack))
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn record(
    mesh: &TriMesh,
    measure: &SurfaceMeasure,
    field: &[f64],
    energy: &crate::energy::EnergyBreakdown,
    w: &DoubleWell,
    ip: &Interpolant,
    iterations: usize,
    wallclock_seconds: f64,
) -> Result<SweepRecord> {
    let jump_length = level_curve_p1(mesh, field, 0.5)?.length;
    let sharp_line_energy = 2.0 * w.tension_constant()? * jump_length;
    let ratio = if sharp_line_energy > 0.0 { energy.mm_value / sharp_line_energy } else { 0.0 };
    let bending = if mesh.is_closed() { willmore(mesh, measure, field, ip)? } else { 0.0 };
    Ok(SweepRecord {
        eps: energy.epsilon,
        mm_value: energy.mm_value,
        dirichlet: energy.dirichlet,
        potential: energy.potential,
        willmore: bending,
        jump_length,
        sharp_line_energy,
        ratio,
        iterations,
        wallclock_seconds,
    })
}

/// Runs the continuation one ε at a time. A failed ε is recorded and the
/// sweep continues from the last successful minimizer.
pub fn run_sweep(cfg: &SweepConfig, run: &RunOptions) -> Result<SweepReport> {
    if cfg.eps.is_empty() {
        return input("epsilon list is empty");
    }
    if cfg.eps.windows(2).any(|p| p[1] >= p[0]) {
        return input("epsilon list must be strictly decreasing");
    }
    let mesh = cfg.mesh.build()?;
    let measure = measures(&mesh)?;
    let mass = cfg.mass_target(&measure);
    let mut opts = cfg.solver.clone();
    opts.mass_target = mass;
    info!(
        "sweep: {} vertices, {} triangles, mass {mass}, eps {:?}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        cfg.eps
    );

    let initial: Option<Vec<f64>> = match &cfg.init {
        SweepInit::Recovery { .. } | SweepInit::Random => None,
        SweepInit::File(p) => Some(read_field(p)?),
    };
    let phase = match &cfg.init {
        SweepInit::Recovery { axis } => Some(halfspace_phase(&mesh, &measure, *axis, mass)?),
        _ => None,
    };
    if let Some(dir) = &run.out_dir {
        std::fs::create_dir_all(dir)?;
        write_mesh(dir.join("mesh.off"), &mesh)?;
    }

    let mut report = SweepReport {
        records: Vec::with_capacity(cfg.eps.len()),
        failures: Vec::new(),
        fields: Vec::new(),
    };
    let mut current: Option<Vec<f64>> = initial;
    for (i, &eps) in cfg.eps.iter().enumerate() {
        let start = match (&current, &phase) {
            (Some(u), _) => Start::Field(u),
            (None, Some(p)) => Start::Phase(p),
            (None, None) => Start::Random,
        };
        if cfg.trace {
            opts.trace = run.out_dir.as_ref().map(|d| d.join(format!("trace_{i:02}.csv")));
        }
        let clock = Instant::now();
        let outcome = epsilon_continuation(&mesh, &measure, &[eps], &cfg.potential, &opts, start)?;
        let seconds = if run.deterministic { 0.0 } else { clock.elapsed().as_secs_f64() };
        if let Some((_, err)) = outcome.failure {
            warn!("sweep: eps {eps} failed: {err}");
            report.failures.push(SweepFailure {
                eps,
                error: err.to_string(),
            });
            continue;
        }
        let step = outcome.steps.into_iter().next().expect("one step per epsilon");
        if !step.converged {
            warn!("sweep: eps {eps} stopped at the iteration limit");
        }
        let rec = record(
            &mesh,
            &measure,
            &step.field,
            &step.energy,
            &cfg.potential,
            &cfg.interpolant,
            step.iterations,
            seconds,
        )?;
        info!("sweep: eps {eps} mm {:.6} ratio {:.4} iterations {}", rec.mm_value, rec.ratio, rec.iterations);
        if let Some(dir) = &run.out_dir {
            write_field(dir.join(format!("field_{i:02}.txt")), &step.field)?;
        }
        report.records.push(rec);
        current = Some(step.field.clone());
        report.fields.push(step.field);
    }

    if let Some(dir) = &run.out_dir {
        write_report(&report.records, ReportFormat::Csv, dir.join("sweep.csv"))?;
        write_report(&report.records, ReportFormat::Json, dir.join("sweep.json"))?;
        if !report.failures.is_empty() {
            write_json_file(&report.failures, dir.join("failures.json"))?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STRIP: &str = "\
[mesh]
kind = flat_strip
nx = 16

[sweep]
eps = 0.3, 0.2
mass_fraction = 0.5

[solver]
max_iterations = 3000
";

    #[test]
    fn strip_sweep_writes_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SweepConfig::from_config(&Config::parse(STRIP).unwrap()).unwrap();
        let run = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            deterministic: true,
        };
        let report = run_sweep(&cfg, &run).unwrap();
        assert_eq!(report.records.len(), 2);
        assert!(report.failures.is_empty());
        let k = DoubleWell::quartic().tension_constant().unwrap();
        for r in &report.records {
            assert_eq!(r.sharp_line_energy, 2.0 * k * r.jump_length);
            assert!(r.ratio >= 0.0);
            assert_eq!(r.wallclock_seconds, 0.0);
            assert_eq!(r.willmore, 0.0);
        }
        for name in ["sweep.csv", "sweep.json", "mesh.off", "field_00.txt", "field_01.txt"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
    }

    #[test]
    fn empty_and_unsorted_eps_are_rejected() {
        let text = STRIP.replace("eps = 0.3, 0.2", "eps =");
        assert!(SweepConfig::from_config(&Config::parse(&text).unwrap()).is_err());
        let text = STRIP.replace("eps = 0.3, 0.2", "eps = 0.2, 0.3");
        let cfg = SweepConfig::from_config(&Config::parse(&text).unwrap()).unwrap();
        assert!(run_sweep(&cfg, &RunOptions::default()).is_err());
    }

    #[test]
    fn failed_epsilon_is_recorded_and_sweep_continues() {
        let dir = tempfile::tempdir().unwrap();
        let field = dir.path().join("start.txt");
        let mut values = vec![0.5; 17 * 17];
        values[5] = f64::NAN;
        write_field(&field, &values).unwrap();
        let text = format!(
            "[mesh]\nkind = flat_strip\nnx = 16\n[sweep]\neps = 0.3, 0.2\ninit = file\nfield = {}\n",
            field.display()
        );
        let cfg = Config::parse(&text).unwrap();
        let cfg = SweepConfig::from_config(&cfg).unwrap();
        let report = run_sweep(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(report.failures.len(), 2);
        assert!(report.records.is_empty());
    }
}
