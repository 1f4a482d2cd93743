//! Config sections shared by the experiments: `[mesh]`, `[potential]`,
//! `[solver]`.

use std::path::PathBuf;

use serde::Serialize;

use super::config::Config;
use super::mesh_io::read_mesh;
use crate::error::Result;
use crate::minimize::MinimizeOptions;
use crate::potential::DoubleWell;
use crate::surface::{generate, MeshSpec, Point, TriMesh};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MeshSource {
    Generated { spec: MeshSpec },
    File { path: PathBuf },
}

/// A mesh recipe: a generated or loaded surface, optionally repeated as
/// disjoint copies spaced along the x axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshConfig {
    pub source: MeshSource,
    pub copies: usize,
    pub spacing: f64,
}

impl MeshConfig {
    pub fn generated(spec: MeshSpec) -> Self {
        Self {
            source: MeshSource::Generated { spec },
            copies: 1,
            spacing: 3.0,
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Self> {
        const S: &str = "mesh";
        let kind = cfg.require_str(S, "kind")?;
        let source = match kind {
            "icosphere" => MeshSource::Generated {
                spec: MeshSpec::Icosphere {
                    subdivisions: cfg.require(S, "subdivisions")?,
                    radius: cfg.get_or(S, "radius", 1.0)?,
                },
            },
            "flat_strip" => {
                let nx = cfg.require(S, "nx")?;
                MeshSource::Generated {
                    spec: MeshSpec::FlatStrip {
                        nx,
                        ny: cfg.get_or(S, "ny", nx)?,
                        lx: cfg.get_or(S, "lx", 1.0)?,
                        ly: cfg.get_or(S, "ly", 1.0)?,
                    },
                }
            }
            "perturbed_sphere" => MeshSource::Generated {
                spec: MeshSpec::PerturbedSphere {
                    subdivisions: cfg.require(S, "subdivisions")?,
                    radius: cfg.get_or(S, "radius", 1.0)?,
                    amplitude: cfg.require(S, "amplitude")?,
                    frequency: cfg.get_or(S, "frequency", 3)?,
                },
            },
            "file" => match cfg.get_path(S, "path") {
                Some(path) => MeshSource::File { path },
                None => return cfg.invalid(S, "kind", "kind = file needs a `path`"),
            },
            other => {
                return cfg.invalid(
                    S,
                    "kind",
                    format!("unknown mesh kind `{other}` (icosphere, flat_strip, perturbed_sphere, file)"),
                )
            }
        };
        let copies = cfg.get_or(S, "copies", 1usize)?;
        if copies == 0 {
            return cfg.invalid(S, "copies", "must be at least 1");
        }
        let spacing = cfg.get_or(S, "spacing", 3.0)?;
        if !(spacing > 0.0) {
            return cfg.invalid(S, "spacing", "must be positive");
        }
        Ok(Self { source, copies, spacing })
    }

    pub fn build(&self) -> Result<TriMesh> {
        let base = match &self.source {
            MeshSource::Generated { spec } => generate(spec)?,
            MeshSource::File { path } => read_mesh(path)?,
        };
        let mut mesh = base.clone();
        for k in 1..self.copies {
            mesh = mesh.disjoint_union(&base.translated(Point::new(self.spacing * k as f64, 0.0, 0.0)))?;
        }
        Ok(mesh)
    }
}

/// `[potential]`: `kind = quartic` (default) or `kind = tabulated` with a
/// `table` file and growth constants.
pub fn potential_from_config(cfg: &Config) -> Result<DoubleWell> {
    const S: &str = "potential";
    match cfg.get_str(S, "kind").unwrap_or("quartic") {
        "quartic" => Ok(DoubleWell::quartic()),
        "tabulated" => {
            let Some(table) = cfg.get_path(S, "table") else {
                return cfg.invalid(S, "kind", "kind = tabulated needs a `table`");
            };
            DoubleWell::from_table_file(
                table,
                cfg.require(S, "growth_exponent")?,
                cfg.require(S, "growth_constant")?,
                cfg.require(S, "growth_threshold")?,
            )
        }
        other => cfg.invalid(S, "kind", format!("unknown potential `{other}` (quartic, tabulated)")),
    }
}

/// `[solver]` keys over the defaults of [`MinimizeOptions::new`].
pub fn solver_from_config(cfg: &Config, mass_target: f64) -> Result<MinimizeOptions> {
    const S: &str = "solver";
    let d = MinimizeOptions::new(mass_target);
    let opts = MinimizeOptions {
        mass_target,
        max_iterations: cfg.get_or(S, "max_iterations", d.max_iterations)?,
        grad_tolerance: cfg.get_or(S, "grad_tolerance", d.grad_tolerance)?,
        step_init: cfg.get_or(S, "step_init", d.step_init)?,
        backtrack_factor: cfg.get_or(S, "backtrack_factor", d.backtrack_factor)?,
        seed: cfg.get_or(S, "seed", d.seed)?,
        trace: None,
    };
    if opts.max_iterations < 1 {
        return cfg.invalid(S, "max_iterations", "must be at least 1");
    }
    for (key, value) in [("grad_tolerance", opts.grad_tolerance), ("step_init", opts.step_init)] {
        if !(value > 0.0 && value.is_finite()) {
            return cfg.invalid(S, key, "must be positive");
        }
    }
    if !(opts.backtrack_factor > 0.0 && opts.backtrack_factor < 1.0) {
        return cfg.invalid(S, "backtrack_factor", "must lie in (0, 1)");
    }
    Ok(opts)
}

pub fn axis_from_config(cfg: &Config, section: &str, default: Point) -> Result<Point> {
    match cfg.get_str(section, "axis") {
        None => Ok(default),
        Some("x") => Ok(Point::x()),
        Some("y") => Ok(Point::y()),
        Some("z") => Ok(Point::z()),
        Some(other) => cfg.invalid(section, "axis", format!("expected x, y or z, got `{other}`")),
    }
}

/// Mass target, absolute or as a fraction of the total area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MassSpec {
    Absolute(f64),
    Fraction(f64),
}

impl MassSpec {
    /// Reads `mass` or `mass_fraction` from `section`.
    pub fn from_config(cfg: &Config, section: &str) -> Result<Option<Self>> {
        let mass: Option<f64> = cfg.get(section, "mass")?;
        let fraction: Option<f64> = cfg.get(section, "mass_fraction")?;
        match (mass, fraction) {
            (Some(_), Some(_)) => cfg.invalid(section, "mass", "set either `mass` or `mass_fraction`, not both"),
            (Some(m), None) => Ok(Some(Self::Absolute(m))),
            (None, Some(f)) => Ok(Some(Self::Fraction(f))),
            (None, None) => Ok(None),
        }
    }

    pub fn resolve(&self, total_area: f64) -> f64 {
        match *self {
            Self::Absolute(m) => m,
            Self::Fraction(f) => f * total_area,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn mesh_section() {
        let cfg = Config::parse("[mesh]\nkind = flat_strip\nnx = 4\n").unwrap();
        let m = MeshConfig::from_config(&cfg).unwrap();
        assert_eq!(
            m.source,
            MeshSource::Generated {
                spec: MeshSpec::FlatStrip { nx: 4, ny: 4, lx: 1.0, ly: 1.0 }
            }
        );
        assert_eq!(m.build().unwrap().num_triangles(), 32);

        let cfg = Config::parse("[mesh]\nkind = icosphere\nsubdivisions = 1\ncopies = 2\n").unwrap();
        let twin = MeshConfig::from_config(&cfg).unwrap().build().unwrap();
        assert_eq!(twin.num_vertices(), 84);

        let cfg = Config::parse("[mesh]\nkind = torus\n").unwrap();
        assert!(matches!(MeshConfig::from_config(&cfg), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn solver_and_potential_sections() {
        let cfg = Config::parse("[solver]\nseed = 7\nbacktrack_factor = 0.25\n").unwrap();
        let o = solver_from_config(&cfg, 1.5).unwrap();
        assert_eq!((o.seed, o.backtrack_factor, o.mass_target), (7, 0.25, 1.5));
        let cfg = Config::parse("[solver]\nbacktrack_factor = 2\n").unwrap();
        assert!(matches!(solver_from_config(&cfg, 1.0), Err(Error::Parse { line: 2, .. })));
        let cfg = Config::parse("").unwrap();
        assert!(potential_from_config(&cfg).unwrap().supports_minimization());
        let cfg = Config::parse("[potential]\nkind = tabulated\n").unwrap();
        assert!(potential_from_config(&cfg).is_err());
    }

    #[test]
    fn mass_keys() {
        let cfg = Config::parse("[s]\nmass_fraction = 0.5\n").unwrap();
        assert_eq!(MassSpec::from_config(&cfg, "s").unwrap().unwrap().resolve(4.0), 2.0);
        let cfg = Config::parse("[s]\nmass = 1\nmass_fraction = 0.5\n").unwrap();
        assert!(MassSpec::from_config(&cfg, "s").is_err());
        let cfg = Config::parse("").unwrap();
        assert_eq!(MassSpec::from_config(&cfg, "s").unwrap(), None);
    }
}
