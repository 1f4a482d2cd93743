//! The configs shipped under `configs/` at the workspace root.

use std::path::PathBuf;

use phasesep_core::harness::{
    run_membrane, run_mesh, run_sweep, run_varying, Config, MembraneConfig, RunOptions, SweepConfig, VaryingConfig,
};
use phasesep_core::potential::DoubleWell;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn check_sweep(name: &str, range: (f64, f64)) {
    let report = run_sweep(&SweepConfig::load(config(name)).unwrap(), &RunOptions::default()).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let k = DoubleWell::quartic().tension_constant().unwrap();
    for r in &report.records {
        assert_eq!(r.sharp_line_energy, 2.0 * k * r.jump_length);
        assert!(r.ratio >= 0.0);
    }
    let last = report.records.last().unwrap().ratio;
    assert!(last >= range.0 && last <= range.1, "{name}: final ratio {last}");
    assert!(report.ratio_nonincreasing_in_eps(0.02), "{name}: {:?}", report.ratios());
}

#[test]
fn strip_sweep() {
    check_sweep("strip_sweep.cfg", (0.95, 1.10));
}

#[test]
fn sphere_sweep() {
    check_sweep("sphere_sweep.cfg", (0.90, 1.15));
}

#[test]
fn hemisphere_membrane_lower_bound() {
    let r = run_membrane(&MembraneConfig::load(config("membrane_sphere.cfg")).unwrap(), &RunOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.lower_bound_holds);
    assert!(r.diffuse.total >= 0.9 * r.sharp.total);
    assert!(r.hypothesis_holds);
    assert!(!r.density.violation);
}

#[test]
fn twin_membrane_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let run = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        deterministic: true,
    };
    let r = run_membrane(&MembraneConfig::load(config("membrane_twin.cfg")).unwrap(), &run).unwrap();
    assert!(!r.hypothesis_holds);
    let json = std::fs::read_to_string(dir.path().join("membrane.json")).unwrap();
    assert!(json.contains("\"hypothesis_holds\": false"));
}

#[test]
fn varying_family() {
    let r = run_varying(&VaryingConfig::load(config("varying.cfg")).unwrap(), &RunOptions::default()).unwrap();
    assert!(r.strictness.monotone_convergent);
    assert!(r.mfp_decreasing());
    assert!(r.liminf_holds);
}

#[test]
fn mesh_config() {
    let s = run_mesh(&Config::load(config("mesh.cfg")).unwrap(), &RunOptions::default()).unwrap();
    assert_eq!(s.triangles, 1280);
    assert!(s.closed);
}
