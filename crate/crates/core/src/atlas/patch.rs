use crate::error::Result;
use crate::mesh::{euler_check_with, extract_submesh, Adjacency, EulerCheck, Triangulation};

/// A connected set of model triangles, stored as a standalone local mesh
/// together with the maps back to the model.
#[derive(Debug, Clone)]
pub struct Patch {
    pub mesh: Triangulation,
    /// model vertex of each local vertex; `None` for vertices added by refinement
    pub global_vertex: Vec<Option<usize>>,
    /// model triangle containing each local triangle
    pub source_triangle: Vec<usize>,
    /// boundary loops in local vertex ids, surface on the left
    pub loops: Vec<Vec<usize>>,
}

impl Patch {
    /// Builds the patch made of the given model triangles.
    pub fn from_model(model: &Triangulation, triangles: &[usize]) -> Result<Self> {
        let (mesh, global) = extract_submesh(model, triangles);
        Self::assemble(mesh, global.into_iter().map(Some).collect(), triangles.to_vec())
    }

    /// Treats a whole triangulation as one patch.
    pub fn from_mesh(mesh: Triangulation) -> Result<Self> {
        let nv = mesh.num_vertices();
        let nt = mesh.num_triangles();
        Self::assemble(mesh, (0..nv).map(Some).collect(), (0..nt).collect())
    }

    pub(crate) fn assemble(
        mesh: Triangulation,
        global_vertex: Vec<Option<usize>>,
        source_triangle: Vec<usize>,
    ) -> Result<Self> {
        let adj = Adjacency::new(mesh.num_vertices(), &mesh.triangles);
        let loops = adj.boundary_loops(&mesh.triangles)?;
        Ok(Patch {
            mesh,
            global_vertex,
            source_triangle,
            loops,
        })
    }

    /// Sub-patch made of the listed local triangles.
    pub fn subpatch(&self, local_triangles: &[usize]) -> Result<Self> {
        let (mesh, local) = extract_submesh(&self.mesh, local_triangles);
        let global_vertex = local.iter().map(|&v| self.global_vertex[v]).collect();
        let source = local_triangles.iter().map(|&t| self.source_triangle[t]).collect();
        Self::assemble(mesh, global_vertex, source)
    }

    pub fn num_triangles(&self) -> usize {
        self.mesh.num_triangles()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self.mesh.num_vertices(), &self.mesh.triangles)
    }

    pub fn euler_check(&self) -> Result<EulerCheck> {
        euler_check_with(&self.mesh, &self.adjacency())
    }

    pub fn loop_perimeter(&self, l: usize) -> f64 {
        let lp = &self.loops[l];
        (0..lp.len())
            .map(|i| self.mesh.edge_length(lp[i], lp[(i + 1) % lp.len()]))
            .sum()
    }

    /// Sorted model triangle ids covered by this patch.
    pub fn model_triangles(&self) -> Vec<usize> {
        let mut t = self.source_triangle.clone();
        t.sort_unstable();
        t.dedup();
        t
    }
}
