use std::fmt;

use serde::Serialize;

use super::{Adjacency, Triangulation};

/// Relative area below which a triangle counts as degenerate:
/// `area < DEGENERATE_AREA_FACTOR * diag^2`.
pub const DEGENERATE_AREA_FACTOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub vertices: usize,
    pub triangles: usize,
    pub edges: usize,
    pub manifold: bool,
    pub orientation_consistent: bool,
    pub watertight: bool,
    pub boundary_edges: usize,
    /// `None` when the loops cannot be traced (non-manifold input)
    pub boundary_loops: Option<usize>,
    pub non_manifold_edges: Vec<[usize; 2]>,
    pub misoriented_edges: Vec<[usize; 2]>,
    pub degenerate_triangles: Vec<usize>,
}

impl ValidationReport {
    /// True when the pipeline may proceed with this input.
    pub fn is_valid(&self) -> bool {
        self.manifold && self.orientation_consistent && self.degenerate_triangles.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vertices, {} triangles, manifold={}, oriented={}, watertight={}, loops={}",
            self.vertices,
            self.triangles,
            self.manifold,
            self.orientation_consistent,
            self.watertight,
            self.boundary_loops.map_or("?".to_string(), |b| b.to_string())
        )
    }
}

/// Reports manifoldness, orientation consistency, boundary loops and
/// degenerate triangles. Never fails.
pub fn validate(mesh: &Triangulation) -> ValidationReport {
    let adj = Adjacency::new(mesh.num_vertices(), &mesh.triangles);
    let mut non_manifold_edges = Vec::new();
    let mut misoriented_edges = Vec::new();
    for e in &adj.edges {
        match e.triangles.as_slice() {
            [_] => {}
            [t0, t1] => {
                let [a, b] = e.vertices;
                if runs_forward(&mesh.triangles[*t0], a, b) == runs_forward(&mesh.triangles[*t1], a, b) {
                    misoriented_edges.push(e.vertices);
                }
            }
            _ => non_manifold_edges.push(e.vertices),
        }
    }
    let diag = mesh.bbox_diagonal();
    let tol = DEGENERATE_AREA_FACTOR * diag * diag;
    let degenerate_triangles = (0..mesh.num_triangles())
        .filter(|&t| mesh.triangle_area(t) < tol)
        .collect();
    let manifold = non_manifold_edges.is_empty();
    let orientation_consistent = misoriented_edges.is_empty();
    let boundary_edges = adj.boundary_edge_count();
    let boundary_loops = if manifold && orientation_consistent {
        adj.boundary_loops(&mesh.triangles).ok().map(|l| l.len())
    } else {
        None
    };
    ValidationReport {
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        edges: adj.edges.len(),
        manifold,
        orientation_consistent,
        watertight: manifold && orientation_consistent && boundary_edges == 0,
        boundary_edges,
        boundary_loops,
        non_manifold_edges,
        misoriented_edges,
        degenerate_triangles,
    }
}

/// Whether triangle `t` traverses `a -> b` (as opposed to `b -> a`).
pub(crate) fn runs_forward(t: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| t[k] == a && t[(k + 1) % 3] == b)
}

#[cfg(test)]
mod tests {
    use nalgebra::Point3;

    use super::*;

    fn tetra() -> Triangulation {
        Triangulation::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn closed_tetrahedron() {
        let r = validate(&tetra());
        assert!(r.manifold && r.watertight && r.orientation_consistent);
        assert_eq!(r.boundary_loops, Some(0));
        assert!(r.is_valid());
    }

    #[test]
    fn flipped_triangle_detected() {
        let mut t = tetra();
        t.triangles.truncate(2);
        // both triangles now traverse 0 -> 1
        t.triangles[1] = [0, 1, 3];
        t.triangles[0] = [0, 1, 2];
        let r = validate(&t);
        assert!(!r.orientation_consistent);
        assert_eq!(r.misoriented_edges, vec![[0, 1]]);
    }

    #[test]
    fn fan_of_three_is_non_manifold() {
        let t = Triangulation::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.5, 1.0, 0.0),
                Point3::new(0.5, -1.0, 0.0),
                Point3::new(0.5, 0.0, 1.0),
            ],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        )
        .unwrap();
        let r = validate(&t);
        assert!(!r.manifold);
        assert_eq!(r.non_manifold_edges, vec![[0, 1]]);
        assert!(!r.is_valid());
    }

    #[test]
    fn sliver_is_degenerate() {
        let t = Triangulation::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.5, 1e-16, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(validate(&t).degenerate_triangles, vec![0]);
    }
}
