//! Experiment drivers behind the command-line tool, with their configuration
//! and file formats.

pub mod config;
pub mod membrane;
pub mod mesh_io;
pub mod report;
pub mod setup;
pub mod sweep;
pub mod varying;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::Config;
pub use membrane::{run_membrane, MembraneConfig, MembraneReport};
pub use mesh_io::{read_field, read_mesh, write_field, write_mesh};
pub use report::{write_report, ReportFormat, SweepRecord};
pub use sweep::{run_sweep, SweepConfig, SweepReport};
pub use varying::{run_varying, VaryingConfig, VaryingReport};

use crate::error::Result;
use crate::surface::measures;
use setup::MeshConfig;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Where reports and fields go; nothing is written when unset.
    pub out_dir: Option<PathBuf>,
    /// Zero the wall-clock columns so reports compare byte for byte.
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub edges: usize,
    pub closed: bool,
    pub area: f64,
    pub mean_edge_length: f64,
}

/// Builds the `[mesh]` of a config, writes it as `mesh.off` and `mesh.obj`.
pub fn run_mesh(cfg: &Config, run: &RunOptions) -> Result<MeshSummary> {
    let mesh_cfg = MeshConfig::from_config(cfg)?;
    cfg.ensure_all_used()?;
    let mesh = mesh_cfg.build()?;
    let measure = measures(&mesh)?;
    if let Some(dir) = &run.out_dir {
        std::fs::create_dir_all(dir)?;
        write_mesh(dir.join("mesh.off"), &mesh)?;
        write_mesh(dir.join("mesh.obj"), &mesh)?;
    }
    Ok(MeshSummary {
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        edges: mesh.edges().len(),
        closed: mesh.is_closed(),
        area: measure.total_area,
        mean_edge_length: mesh.mean_edge_length(),
    })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    Config::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_subcommand_writes_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config::parse("[mesh]\nkind = icosphere\nsubdivisions = 1\n").unwrap();
        let run = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            deterministic: true,
        };
        let s = run_mesh(&cfg, &run).unwrap();
        assert_eq!((s.vertices, s.triangles, s.edges), (42, 80, 120));
        assert!(s.closed);
        let back = read_mesh(dir.path().join("mesh.obj")).unwrap();
        assert_eq!(back.num_triangles(), 80);
    }
}
