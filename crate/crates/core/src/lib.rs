//! Surface atlas construction, discrete parametrization and remeshing of
//! triangulated surfaces.

pub mod atlas;
pub mod error;
pub mod features;
pub mod fixtures;
pub mod mesh;
pub mod param;
pub mod pipeline;
mod planar;
pub mod quality;
pub mod refine;
pub mod remesh;
pub mod verify;

pub use error::{Error, Result};
pub use mesh::Triangulation;
