//! P1 gradients, the cotangent stiffness operator, and the discrete mean
//! curvature vector.

use rayon::prelude::*;

use super::mesh::{Point, SurfaceMeasure, TriMesh};
use crate::error::{input, Error, Result};

/// Below this many triangles the per-triangle loops stay sequential.
const PARALLEL_THRESHOLD: usize = 4096;

pub(crate) fn check_vertex_field(mesh: &TriMesh, field: &[f64]) -> Result<()> {
    if field.len() != mesh.num_vertices() {
        return input(format!(
            "vertex field has {} values, mesh has {} vertices",
            field.len(),
            mesh.num_vertices()
        ));
    }
    if let Some(i) = field.iter().position(|v| !v.is_finite()) {
        return input(format!("vertex field value {i} is not finite"));
    }
    Ok(())
}

pub(crate) fn check_triangle_field(mesh: &TriMesh, field: &[f64]) -> Result<()> {
    if field.len() != mesh.num_triangles() {
        return input(format!(
            "triangle field has {} values, mesh has {} triangles",
            field.len(),
            mesh.num_triangles()
        ));
    }
    if let Some(i) = field.iter().position(|v| !v.is_finite()) {
        return input(format!("triangle field value {i} is not finite"));
    }
    Ok(())
}

/// Maps every triangle index through `f`, in parallel on large meshes.
/// Output order is triangle order, so downstream sums are reproducible.
pub(crate) fn per_triangle<T, F>(mesh: &TriMesh, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let n = mesh.num_triangles();
    if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Gradient of the linear interpolant on triangle `t`:
/// `∇u = Σ_i u_i (n × e_i) / |n|²` with `e_i` the edge opposite corner `i`,
/// written in differences against corner `a` so constants map to exactly zero.
#[inline]
pub(crate) fn triangle_gradient(mesh: &TriMesh, t: usize, field: &[f64]) -> Point {
    let [a, b, c] = mesh.triangles()[t];
    let [pa, pb, pc] = mesh.corners(t);
    let n = (pb - pa).cross(&(pc - pa));
    let inv = 1.0 / n.norm_squared();
    let gb = n.cross(&(pa - pc));
    let gc = n.cross(&(pb - pa));
    (gb * (field[b] - field[a]) + gc * (field[c] - field[a])) * inv
}

/// Per-triangle tangential gradient of a P1 field.
pub fn p1_gradient(mesh: &TriMesh, field: &[f64]) -> Result<Vec<Point>> {
    check_vertex_field(mesh, field)?;
    Ok(per_triangle(mesh, |t| triangle_gradient(mesh, t, field)))
}

/// Half-cotangents of the three corner angles of triangle `t`, indexed by corner.
/// The weight of corner `k` belongs to the edge opposite it.
#[inline]
pub(crate) fn half_cotangents(mesh: &TriMesh, t: usize) -> [f64; 3] {
    let p = mesh.corners(t);
    let mut w = [0.0; 3];
    for k in 0..3 {
        let u = p[(k + 1) % 3] - p[k];
        let v = p[(k + 2) % 3] - p[k];
        w[k] = 0.5 * u.dot(&v) / u.cross(&v).norm();
    }
    w
}

/// Cotangent edge weights `(cot α + cot β)/2`, one per mesh edge, in edge order.
pub fn cotangent_weights(mesh: &TriMesh) -> Vec<f64> {
    let mut index = std::collections::HashMap::with_capacity(mesh.edges().len());
    for (i, e) in mesh.edges().iter().enumerate() {
        index.insert((e.vertices[0], e.vertices[1]), i);
    }
    let mut weights = vec![0.0; mesh.edges().len()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = half_cotangents(mesh, t);
        for k in 0..3 {
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            weights[index[&(a.min(b), a.max(b))]] += w[k];
        }
    }
    weights
}

/// `K u`, where `K` is the P1 stiffness matrix, `uᵀ K u = Σ_T area_T |∇u|_T²`.
pub fn stiffness_apply(mesh: &TriMesh, field: &[f64]) -> Result<Vec<f64>> {
    check_vertex_field(mesh, field)?;
    Ok(stiffness_apply_unchecked(mesh, field))
}

pub(crate) fn stiffness_apply_unchecked(mesh: &TriMesh, field: &[f64]) -> Vec<f64> {
    let local = per_triangle(mesh, |t| {
        let tri = mesh.triangles()[t];
        let w = half_cotangents(mesh, t);
        let mut out = [0.0; 3];
        for (k, wk) in w.iter().enumerate() {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let flux = wk * (field[tri[i]] - field[tri[j]]);
            out[i] += flux;
            out[j] -= flux;
        }
        out
    });
    let mut result = vec![0.0; mesh.num_vertices()];
    for (tri, out) in mesh.triangles().iter().zip(&local) {
        for k in 0..3 {
            result[tri[k]] += out[k];
        }
    }
    result
}

/// Mean curvature vector per vertex: the cotangent Laplacian of the position
/// divided by the lumped vertex mass. On a sphere of radius `r` it points to
/// the center with length close to `2/r`.
pub fn mean_curvature(mesh: &TriMesh, measure: &SurfaceMeasure) -> Result<Vec<Point>> {
    if !mesh.is_closed() {
        return Err(Error::UnsupportedGeometry(
            "mean curvature requires a closed mesh".into(),
        ));
    }
    if measure.vertex_masses.len() != mesh.num_vertices() {
        return input("measure does not belong to this mesh");
    }
    let mut laplacian = vec![Point::zeros(); mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = half_cotangents(mesh, t);
        for k in 0..3 {
            let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let d = (mesh.vertices()[j] - mesh.vertices()[i]) * w[k];
            laplacian[i] += d;
            laplacian[j] -= d;
        }
    }
    Ok(laplacian
        .into_iter()
        .zip(&measure.vertex_masses)
        .map(|(l, m)| l / *m)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{generate, measures, MeshSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> TriMesh {
        generate(&MeshSpec::FlatStrip { nx: 1, ny: 1, lx: 1.0, ly: 1.0 }).unwrap()
    }

    fn sphere(s: u32, r: f64) -> TriMesh {
        generate(&MeshSpec::Icosphere { subdivisions: s, radius: r }).unwrap()
    }

    #[test]
    fn linear_field_gradient() {
        let m = unit_square();
        let u: Vec<f64> = m.vertices().iter().map(|p| p.x).collect();
        for g in p1_gradient(&m, &u).unwrap() {
            assert!((g - Point::x()).norm() < 1e-15);
        }
        for g in p1_gradient(&m, &[3.5; 4]).unwrap() {
            assert_eq!(g.norm(), 0.0);
        }
        assert!(matches!(p1_gradient(&m, &[0.0; 3]), Err(Error::Input(_))));
    }

    #[test]
    fn gradient_is_tangent_and_linear() {
        let m = sphere(2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..m.num_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..m.num_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = (1.7, -0.3);
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let (gu, gv, gw) = (
            p1_gradient(&m, &u).unwrap(),
            p1_gradient(&m, &v).unwrap(),
            p1_gradient(&m, &w).unwrap(),
        );
        for t in 0..m.num_triangles() {
            let n = m.scaled_normal(t).normalize();
            assert!(gu[t].dot(&n).abs() < 1e-12 * (1.0 + gu[t].norm()));
            assert!((gw[t] - (gu[t] * a + gv[t] * b)).norm() < 1e-12 * (1.0 + gw[t].norm()));
        }
    }

    #[test]
    fn height_gradient_on_sphere() {
        // the tangential gradient of z on the unit sphere has norm sin θ
        let m = sphere(3, 1.0);
        let u: Vec<f64> = m.vertices().iter().map(|p| p.z).collect();
        let g = p1_gradient(&m, &u).unwrap();
        for (t, gt) in g.iter().enumerate() {
            let c = m.barycenter(t).normalize();
            let sin_theta = (1.0 - c.z * c.z).max(0.0).sqrt();
            assert!((gt.norm() - sin_theta).abs() < 0.02, "t = {t}: {} vs {sin_theta}", gt.norm());
        }
    }

    #[test]
    fn green_identity_matches_gradient_form() {
        let m = sphere(2, 1.3);
        let mu = measures(&m).unwrap();
        let weights = cotangent_weights(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let u: Vec<f64> = (0..m.num_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..m.num_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (gu, gv) = (p1_gradient(&m, &u).unwrap(), p1_gradient(&m, &v).unwrap());
            let gradient_form: f64 = (0..m.num_triangles())
                .map(|t| mu.triangle_areas[t] * gu[t].dot(&gv[t]))
                .sum();
            let edge_form: f64 = m
                .edges()
                .iter()
                .zip(&weights)
                .map(|(e, w)| {
                    let [i, j] = e.vertices;
                    w * (u[i] - u[j]) * (v[i] - v[j])
                })
                .sum();
            let ku = stiffness_apply(&m, &u).unwrap();
            let matrix_form: f64 = ku.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((gradient_form - edge_form).abs() <= 1e-10 * gradient_form.abs());
            assert!((gradient_form - matrix_form).abs() <= 1e-10 * gradient_form.abs());
        }
    }

    /// Relative errors of |H| against 2/r: (max over valence-6 vertices,
    /// max over the 12 valence-5 vertices, RMS over all vertices).
    fn curvature_errors(s: u32, r: f64) -> (f64, f64, f64) {
        let m = sphere(s, r);
        let mu = measures(&m).unwrap();
        let h = mean_curvature(&m, &mu).unwrap();
        let mut valence = vec![0; m.num_vertices()];
        for e in m.edges() {
            valence[e.vertices[0]] += 1;
            valence[e.vertices[1]] += 1;
        }
        let exact = 2.0 / r;
        let (mut regular, mut irregular, mut l2) = (0f64, 0f64, 0.0);
        for ((p, hv), val) in m.vertices().iter().zip(&h).zip(&valence) {
            // toward the center
            assert!(hv.dot(p) < 0.0);
            let e = (hv.norm() - exact).abs() / exact;
            if *val == 6 {
                regular = regular.max(e);
            } else {
                irregular = irregular.max(e);
            }
            l2 += e * e;
        }
        (regular, irregular, (l2 / m.num_vertices() as f64).sqrt())
    }

    #[test]
    fn sphere_mean_curvature() {
        for r in [1.0, 2.0] {
            let (regular, irregular, _) = curvature_errors(4, r);
            assert!(regular < 0.03, "{regular}");
            // barycentric lumping is not consistent at the icosahedron's own vertices
            assert!(irregular < 0.15, "{irregular}");
        }
    }

    #[test]
    fn mean_curvature_refinement() {
        let errs: Vec<(f64, f64, f64)> = (2..=5).map(|s| curvature_errors(s, 1.0)).collect();
        for w in errs.windows(2) {
            assert!(w[1].2 < w[0].2, "{errs:?}");
        }
    }

    #[test]
    fn mean_curvature_rejects_open_mesh() {
        let m = unit_square();
        let mu = measures(&m).unwrap();
        assert!(matches!(mean_curvature(&m, &mu), Err(Error::UnsupportedGeometry(_))));
    }
}
