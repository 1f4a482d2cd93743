//! Test geometries: icospheres, flat strips, and radially perturbed spheres.

use std::collections::HashMap;

use serde::Serialize;

use super::mesh::{Point, TriMesh};
use crate::error::{input, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshSpec {
    Icosphere {
        subdivisions: u32,
        radius: f64,
    },
    /// `[0, lx] × [0, ly]` in the `z = 0` plane, `nx × ny` cells split along
    /// the `(i, j) – (i+1, j+1)` diagonal.
    FlatStrip {
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
    },
    /// Icosphere with each vertex moved radially by `A·sin(fθ)·sin(fφ)`
    /// (`θ` polar, `φ` azimuthal).
    PerturbedSphere {
        subdivisions: u32,
        radius: f64,
        amplitude: f64,
        frequency: u32,
    },
}

const MAX_SUBDIVISIONS: u32 = 8;

pub fn generate(spec: &MeshSpec) -> Result<TriMesh> {
    match *spec {
        MeshSpec::Icosphere { subdivisions, radius } => {
            check_sphere(subdivisions, radius)?;
            let (v, t) = icosphere(subdivisions, radius);
            TriMesh::new(v, t)
        }
        MeshSpec::FlatStrip { nx, ny, lx, ly } => {
            if nx == 0 || ny == 0 {
                return input(format!("flat strip needs nx, ny >= 1 (got {nx}, {ny})"));
            }
            if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
                return input(format!("flat strip needs positive finite lengths (got {lx}, {ly})"));
            }
            let (v, t) = flat_strip(nx, ny, lx, ly);
            TriMesh::new(v, t)
        }
        MeshSpec::PerturbedSphere {
            subdivisions,
            radius,
            amplitude,
            frequency,
        } => {
            check_sphere(subdivisions, radius)?;
            if !(amplitude >= 0.0 && amplitude < radius) {
                return input(format!("amplitude must lie in [0, radius), got {amplitude}"));
            }
            let (mut v, t) = icosphere(subdivisions, radius);
            if amplitude > 0.0 {
                let f = f64::from(frequency);
                for p in &mut v {
                    let dir = p.normalize();
                    let theta = dir.z.clamp(-1.0, 1.0).acos();
                    let phi = dir.y.atan2(dir.x);
                    *p = dir * (radius + amplitude * (f * theta).sin() * (f * phi).sin());
                }
            }
            TriMesh::new(v, t)
        }
    }
}

fn check_sphere(subdivisions: u32, radius: f64) -> Result<()> {
    if subdivisions > MAX_SUBDIVISIONS {
        return input(format!("at most {MAX_SUBDIVISIONS} subdivisions supported, got {subdivisions}"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return input(format!("radius must be positive and finite, got {radius}"));
    }
    Ok(())
}

fn icosphere(subdivisions: u32, radius: f64) -> (Vec<Point>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|c| Point::new(c[0], c[1], c[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    vertices.iter_mut().for_each(|p| *p *= radius);
    (vertices, faces)
}

fn flat_strip(nx: usize, ny: usize, lx: f64, ly: f64) -> (Vec<Point>, Vec<[usize; 3]>) {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(lx * i as f64 / nx as f64, ly * j as f64 / ny as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    (vertices, triangles)
}
