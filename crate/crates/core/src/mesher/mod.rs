//! Mesh generation: Delaunay triangulation, truss relaxation and curved-element annotation.

pub mod delaunay;
pub mod distmesh;
pub mod sizefield;
pub mod trimesh;

pub use distmesh::{generate, generate_with_report, MeshOptions, MeshReport};
pub use sizefield::SizeField;
pub use trimesh::{triangle_quality, Element, ElementKind, TriMesh};
