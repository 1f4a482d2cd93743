//! Triangulated surfaces, their lumped measures, and the discrete operators
//! standing in for the tangential gradient and the mean curvature vector.

mod generate;
mod mesh;
mod operators;

pub use generate::{generate, MeshSpec};
pub use mesh::{measures, total_area, Boundary, Edge, Point, SurfaceMeasure, TriMesh, DEGENERACY_RATIO};
pub use operators::{cotangent_weights, mean_curvature, p1_gradient, stiffness_apply};

pub(crate) use operators::{
    check_triangle_field, check_vertex_field, half_cotangents, per_triangle, stiffness_apply_unchecked,
    triangle_gradient,
};
