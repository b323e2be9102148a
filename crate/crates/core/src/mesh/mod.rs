//! Triangulations: storage, adjacency, topology counts, validation and file I/O.

mod adjacency;
pub mod io;
mod topology;
mod triangulation;
mod validate;

pub use adjacency::{Adjacency, Edge};
pub use io::{load_surface, load_surface_with, write_mesh, write_mesh_with_data, ElementData, LoadOptions, SurfaceFormat};
pub use topology::{euler_check, euler_check_with, EulerCheck, TopologyInfo};
pub use triangulation::{extract_submesh, Triangulation};
pub use validate::{validate, ValidationReport, DEGENERATE_AREA_FACTOR};
