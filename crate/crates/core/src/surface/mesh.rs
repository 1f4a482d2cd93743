use std::collections::HashMap;

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{input, Error, Result};

pub type Point = Vector3<f64>;

/// Relative area below which a triangle counts as degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Closed,
    WithBoundary,
}

/// An undirected mesh edge with its one or two incident triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub vertices: [usize; 2],
    pub triangles: [usize; 2],
    pub interior: bool,
}

impl Edge {
    /// The neighbouring triangles of an interior edge.
    pub fn pair(&self) -> Option<(usize, usize)> {
        self.interior.then_some((self.triangles[0], self.triangles[1]))
    }
}

/// Oriented triangle mesh embedded in R³.
///
/// Construction checks index ranges, manifoldness (at most two triangles per
/// edge), and consistent orientation: every interior edge is traversed once in
/// each direction.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    boundary: Boundary,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return input("mesh has no triangles");
        }
        let n = vertices.len();
        if let Some(i) = vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return input(format!("vertex {i} has non-finite coordinates"));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return input(format!("triangle {t} references a vertex out of range ({tri:?}, {n} vertices)"));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Geometry {
                    triangle: t,
                    reason: "repeated vertex index".into(),
                });
            }
            for k in 0..3 {
                let key = (tri[k], tri[(k + 1) % 3]);
                if let Some(other) = directed.insert(key, t) {
                    return input(format!(
                        "inconsistent orientation or non-manifold edge {key:?} in triangles {other} and {t}"
                    ));
                }
            }
        }

        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(directed.len());
        let mut edges: Vec<Edge> = Vec::with_capacity(directed.len() / 2 + 1);
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match index.get(&key) {
                    Some(&e) => {
                        edges[e].triangles[1] = t;
                        edges[e].interior = true;
                    }
                    None => {
                        index.insert(key, edges.len());
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            triangles: [t, t],
                            interior: false,
                        });
                    }
                }
            }
        }
        let boundary = if edges.iter().all(|e| e.interior) {
            Boundary::Closed
        } else {
            Boundary::WithBoundary
        };
        Ok(Self {
            vertices,
            triangles,
            edges,
            boundary,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_closed(&self) -> bool {
        self.boundary == Boundary::Closed
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [&Point; 3] {
        let [a, b, c] = self.triangles[t];
        [&self.vertices[a], &self.vertices[b], &self.vertices[c]]
    }

    /// Unnormalized normal `(b − a) × (c − a)`; its length is twice the area.
    pub fn scaled_normal(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    pub fn edge_length(&self, e: &Edge) -> f64 {
        (self.vertices[e.vertices[1]] - self.vertices[e.vertices[0]]).norm()
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| self.edge_length(e)).sum::<f64>() / self.edges.len() as f64
    }

    /// Vertex neighbours with edge lengths, in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            let len = self.edge_length(e);
            let [a, b] = e.vertices;
            adj[a].push((b, len));
            adj[b].push((a, len));
        }
        adj
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor != 0.0) {
            return input(format!("scale factor must be finite and nonzero, got {factor}"));
        }
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|p| *p *= factor);
        Ok(out)
    }

    pub fn translated(&self, offset: Point) -> Self {
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|p| *p += offset);
        out
    }

    /// Both meshes as one, with `other`'s indices shifted past ours.
    pub fn disjoint_union(&self, other: &TriMesh) -> Result<Self> {
        let shift = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| t.map(|v| v + shift)));
        Self::new(vertices, triangles)
    }

    /// Same connectivity with new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return input(format!(
                "expected {} vertex positions, got {}",
                self.vertices.len(),
                vertices.len()
            ));
        }
        if let Some(i) = vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return input(format!("vertex {i} has non-finite coordinates"));
        }
        Ok(Self {
            vertices,
            triangles: self.triangles.clone(),
            edges: self.edges.clone(),
            boundary: self.boundary,
        })
    }
}

/// The discrete surface measure: triangle areas and one-third lumped vertex masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceMeasure {
    pub triangle_areas: Vec<f64>,
    pub vertex_masses: Vec<f64>,
    pub total_area: f64,
}

impl SurfaceMeasure {
    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// Lumped integral `Σ_v m_v f_v`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.vertex_masses.iter().zip(values).map(|(m, f)| m * f).sum()
    }
}

/// Triangle areas by the cross product and one-third lumped vertex masses.
pub fn measures(mesh: &TriMesh) -> Result<SurfaceMeasure> {
    let triangle_areas: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| 0.5 * mesh.scaled_normal(t).norm())
        .collect();
    let mean = triangle_areas.iter().sum::<f64>() / triangle_areas.len() as f64;
    if let Some(t) = triangle_areas.iter().position(|&a| !(a > DEGENERACY_RATIO * mean)) {
        return Err(Error::Geometry {
            triangle: t,
            reason: format!("area {:e} below {DEGENERACY_RATIO:e} of the mean area {mean:e}", triangle_areas[t]),
        });
    }
    let mut vertex_masses = vec![0.0; mesh.num_vertices()];
    for (tri, area) in mesh.triangles().iter().zip(&triangle_areas) {
        for &v in tri {
            vertex_masses[v] += area / 3.0;
        }
    }
    if let Some(v) = vertex_masses.iter().position(|&m| m <= 0.0) {
        return input(format!("vertex {v} is not referenced by any triangle"));
    }
    let total_area = triangle_areas.iter().sum();
    Ok(SurfaceMeasure {
        triangle_areas,
        vertex_masses,
        total_area,
    })
}

pub fn total_area(measure: &SurfaceMeasure) -> f64 {
    measure.total_area
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> TriMesh {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ];
        TriMesh::new(v, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn square_edges_and_boundary() {
        let m = square();
        assert_eq!(m.edges().len(), 5);
        assert_eq!(m.edges().iter().filter(|e| e.interior).count(), 1);
        assert_eq!(m.boundary(), Boundary::WithBoundary);
        let diag = m.edges().iter().find(|e| e.interior).unwrap();
        assert_eq!(diag.vertices, [0, 2]);
        assert_eq!(diag.pair(), Some((0, 1)));
    }

    #[test]
    fn rejects_flipped_triangle() {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ];
        let err = TriMesh::new(v, vec![[0, 1, 2], [0, 3, 2]]).unwrap_err();
        assert!(matches!(err, Error::Input(_)), "{err}");
    }

    #[test]
    fn rejects_out_of_range_and_repeated_indices() {
        let v = vec![Point::zeros(), Point::x(), Point::y()];
        assert!(matches!(TriMesh::new(v.clone(), vec![[0, 1, 3]]), Err(Error::Input(_))));
        assert!(matches!(
            TriMesh::new(v, vec![[0, 1, 1]]),
            Err(Error::Geometry { triangle: 0, .. })
        ));
    }

    #[test]
    fn equilateral_area() {
        let h = 3f64.sqrt() / 2.0;
        let m = TriMesh::new(
            vec![Point::zeros(), Point::x(), Point::new(0.5, h, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mu = measures(&m).unwrap();
        assert!((mu.total_area - 0.433_012_701_892_219_3).abs() < 1e-15);
        assert!((mu.vertex_masses.iter().sum::<f64>() - mu.total_area).abs() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_is_named() {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
        ];
        // triangle 2 is collinear
        let m = TriMesh::new(v, vec![[0, 1, 2], [0, 2, 3], [1, 4, 2]]).unwrap();
        let m = m.with_vertices({
            let mut p = m.vertices().to_vec();
            p[4] = Point::new(1.0, 2.0, 0.0);
            p
        });
        let err = measures(&m.unwrap()).unwrap_err();
        assert!(matches!(err, Error::Geometry { triangle: 2, .. }), "{err}");
    }

    #[test]
    fn union_keeps_both_components() {
        let m = square();
        let u = m.disjoint_union(&m.translated(Point::new(3.0, 0.0, 0.0))).unwrap();
        assert_eq!(u.num_vertices(), 8);
        assert_eq!(u.num_triangles(), 4);
        assert!((measures(&u).unwrap().total_area - 2.0).abs() < 1e-15);
        let s = m.scaled(2.0).unwrap();
        assert!((measures(&s).unwrap().total_area - 4.0).abs() < 1e-15);
        assert!(m.scaled(0.0).is_err());
    }
}
