//! Headless toolkit for stylized line drawings of 3D meshes.
//!
//! The crate is organized around [`mesh::Surface`], a half-edge triangle
//! mesh. On top of it sit:
//!
//! - [`io`]: loaders (OBJ/MTL, MD2, a JSON skinned-mesh format) and image
//!   output (binary PPM), plus a format-dispatching loader registry.
//! - [`anim`]: keyframe vertex animation and skeletal skinning, both
//!   producing per-frame vertex positions without touching topology.
//! - [`curvature`]: discrete principal curvatures and their directional
//!   derivatives, estimated per vertex from mesh geometry.
//! - [`contours`]: view-dependent line extraction — silhouettes and
//!   suggestive contours — as polylines over the mesh.
//! - [`lapped`]: tangent-field-driven surface patch growth and local
//!   parameterization for repeated-texture coverage.
//! - [`render`]: a deterministic software rasterizer with stylized shading
//!   (Phong, Gooch, toon), a pass graph for compositing, and line/SVG
//!   output.
//! - [`shapes`]: procedural meshes (sphere, torus, grid, ...) used by tests,
//!   docs and the command-line tool.

pub mod anim;
pub mod contours;
pub mod curvature;
pub mod io;
pub mod lapped;
pub mod mesh;
pub mod render;
pub mod shapes;

pub use anim::MeshState;
pub use mesh::{Material, MeshError, Rgb, Surface};
