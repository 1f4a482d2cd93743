//! OFF and OBJ triangle meshes, and per-vertex scalar sidecar files.
//!
//! Coordinates and field values are written with 17 significant digits so a
//! write/read cycle reproduces every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::surface::{Point, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("off") => Ok(Self::Off),
            Some("obj") => Ok(Self::Obj),
            _ => Err(Error::Unsupported(format!(
                "mesh format of {} (expected .off or .obj)",
                path.display()
            ))),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn parse_error<T>(line: usize, reason: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        reason: reason.into(),
    })
}

fn number<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    match token.map(str::parse) {
        Some(Ok(v)) => Ok(v),
        Some(Err(_)) => parse_error(line, format!("invalid {what} `{}`", token.unwrap_or_default())),
        None => parse_error(line, format!("missing {what}")),
    }
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    let text = read_text(path)?;
    match format {
        MeshFormat::Off => parse_off(&text),
        MeshFormat::Obj => parse_obj(&text),
    }
}

pub fn write_mesh(path: impl AsRef<Path>, mesh: &TriMesh) -> Result<()> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        MeshFormat::Off => {
            writeln!(w, "OFF")?;
            writeln!(w, "{} {} 0", mesh.num_vertices(), mesh.num_triangles())?;
            for p in mesh.vertices() {
                writeln!(w, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
            }
            for [a, b, c] in mesh.triangles() {
                writeln!(w, "3 {a} {b} {c}")?;
            }
        }
        MeshFormat::Obj => {
            for p in mesh.vertices() {
                writeln!(w, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
            }
            for [a, b, c] in mesh.triangles() {
                writeln!(w, "f {} {} {}", a + 1, b + 1, c + 1)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Non-empty lines with comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_off(text: &str) -> Result<TriMesh> {
    let mut lines = content_lines(text);
    let Some((first, header)) = lines.next() else {
        return parse_error(1, "empty OFF file");
    };
    // the counts may share the header line
    let counts = match header.strip_prefix("OFF") {
        Some(rest) if rest.trim().is_empty() => match lines.next() {
            Some(l) => l,
            None => return parse_error(first, "missing vertex and face counts"),
        },
        Some(rest) => (first, rest.trim()),
        None => return parse_error(first, "missing OFF header"),
    };
    let mut tok = counts.1.split_whitespace();
    let nv: usize = number(tok.next(), counts.0, "vertex count")?;
    let nf: usize = number(tok.next(), counts.0, "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let Some((line, l)) = lines.next() else {
            return parse_error(counts.0, format!("expected {nv} vertices, found {k}"));
        };
        let mut tok = l.split_whitespace();
        let x = number(tok.next(), line, "x coordinate")?;
        let y = number(tok.next(), line, "y coordinate")?;
        let z = number(tok.next(), line, "z coordinate")?;
        vertices.push(Point::new(x, y, z));
    }
    let mut triangles = Vec::with_capacity(nf);
    for k in 0..nf {
        let Some((line, l)) = lines.next() else {
            return parse_error(counts.0, format!("expected {nf} faces, found {k}"));
        };
        let mut tok = l.split_whitespace();
        let n: usize = number(tok.next(), line, "face size")?;
        if n != 3 {
            return Err(Error::Unsupported(format!("face with {n} vertices at line {line}; only triangles are supported")));
        }
        let mut tri = [0usize; 3];
        for slot in &mut tri {
            *slot = number(tok.next(), line, "vertex index")?;
            if *slot >= nv {
                return parse_error(line, format!("vertex index {slot} out of range (have {nv})"));
            }
        }
        triangles.push(tri);
    }
    if let Some((line, _)) = lines.next() {
        return parse_error(line, "unexpected content after the last face");
    }
    TriMesh::new(vertices, triangles)
}

pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (line, l) in content_lines(text) {
        let mut tok = l.split_whitespace();
        match tok.next() {
            Some("v") => {
                let x = number(tok.next(), line, "x coordinate")?;
                let y = number(tok.next(), line, "y coordinate")?;
                let z = number(tok.next(), line, "z coordinate")?;
                vertices.push(Point::new(x, y, z));
            }
            Some("f") => {
                let refs: Vec<&str> = tok.collect();
                if refs.len() != 3 {
                    return Err(Error::Unsupported(format!(
                        "face with {} vertices at line {line}; only triangles are supported",
                        refs.len()
                    )));
                }
                let mut tri = [0usize; 3];
                for (slot, r) in tri.iter_mut().zip(refs) {
                    let index: i64 = number(r.split('/').next(), line, "vertex index")?;
                    // negative indices count back from the latest vertex
                    let resolved = if index > 0 {
                        index - 1
                    } else {
                        vertices.len() as i64 + index
                    };
                    if index == 0 || resolved < 0 || resolved >= vertices.len() as i64 {
                        return parse_error(line, format!("vertex index {index} out of range"));
                    }
                    *slot = resolved as usize;
                }
                triangles.push(tri);
            }
            Some("vt" | "vn" | "vp" | "o" | "g" | "s" | "l" | "usemtl" | "mtllib") => {}
            Some(other) => return parse_error(line, format!("unknown record `{other}`")),
            None => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

/// One value per line, in vertex order.
pub fn write_field(path: impl AsRef<Path>, field: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    for v in field {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let text = read_text(path.as_ref())?;
    content_lines(&text)
        .map(|(line, l)| number(Some(l), line, "field value"))
        .collect()
}
