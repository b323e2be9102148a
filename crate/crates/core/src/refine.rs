//! Longest-edge bisection of a patch without changing its geometry.

use std::collections::HashMap;

use serde::Serialize;

use crate::atlas::Patch;
use crate::error::Result;

pub const DEFAULT_REFINE_ROUNDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineOptions {
    /// target maximum edge length; `None` uses the mean boundary edge length
    pub threshold: Option<f64>,
    pub max_rounds: usize,
    /// also split boundary edges longer than the threshold
    pub split_boundary: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            threshold: None,
            max_rounds: DEFAULT_REFINE_ROUNDS,
            split_boundary: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineReport {
    pub threshold: f64,
    pub rounds: usize,
    pub splits: usize,
    /// every candidate edge is within the threshold
    pub converged: bool,
    /// longest edge before refinement and after each round
    pub max_edge: Vec<f64>,
}

/// Mean length of the boundary edges of a patch.
pub fn mean_boundary_edge(patch: &Patch) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for l in 0..patch.loops.len() {
        sum += patch.loop_perimeter(l);
        n += patch.loops[l].len();
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

struct Work {
    vertices: Vec<nalgebra::Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    source: Vec<usize>,
    global: Vec<Option<usize>>,
    edges: HashMap<(usize, usize), Vec<usize>>,
}

impl Work {
    fn length(&self, e: (usize, usize)) -> f64 {
        (self.vertices[e.0] - self.vertices[e.1]).norm()
    }

    fn unlink(&mut self, e: (usize, usize), t: usize) {
        let list = self.edges.get_mut(&e).unwrap();
        list.retain(|&x| x != t);
        if list.is_empty() {
            self.edges.remove(&e);
        }
    }

    fn link(&mut self, e: (usize, usize), t: usize) {
        self.edges.entry(e).or_default().push(t);
    }

    fn max_edge(&self) -> f64 {
        self.edges
            .keys()
            .map(|&e| self.length(e))
            .fold(0.0, f64::max)
    }

    /// Splits edge `e` at its midpoint, bisecting each adjacent triangle.
    fn split(&mut self, e: (usize, usize)) {
        let m = self.vertices.len();
        self.vertices.push(nalgebra::center(&self.vertices[e.0], &self.vertices[e.1]));
        self.global.push(None);
        let tris = self.edges.remove(&e).unwrap_or_default();
        for t in tris {
            let tri = self.triangles[t];
            // rotate so the split edge is tri[0] -> tri[1]
            let k = (0..3).find(|&k| key(tri[k], tri[(k + 1) % 3]) == e).unwrap();
            let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let new = self.triangles.len();
            self.triangles[t] = [a, m, c];
            self.triangles.push([m, b, c]);
            self.source.push(self.source[t]);
            self.unlink(key(b, c), t);
            self.link(key(b, c), new);
            self.link(key(a, m), t);
            self.link(key(m, b), new);
            self.link(key(m, c), t);
            self.link(key(m, c), new);
        }
    }
}

/// Repeatedly tags the edges longer than `threshold`, sorts them by
/// decreasing length and splits them in that order, until no edge is tagged
/// or `max_rounds` rounds have run. Only interior edges are tagged unless
/// `split_boundary` is set. New vertices are exact edge midpoints.
pub fn longest_edge_bisection(
    patch: &Patch,
    threshold: f64,
    max_rounds: usize,
    split_boundary: bool,
) -> Result<(Patch, RefineReport)> {
    let mut w = Work {
        vertices: patch.mesh.vertices.clone(),
        triangles: patch.mesh.triangles.clone(),
        source: patch.source_triangle.clone(),
        global: patch.global_vertex.clone(),
        edges: HashMap::new(),
    };
    for (t, tri) in patch.mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            w.link(key(tri[k], tri[(k + 1) % 3]), t);
        }
    }
    let mut report = RefineReport {
        threshold,
        rounds: 0,
        splits: 0,
        converged: false,
        max_edge: vec![w.max_edge()],
    };
    loop {
        let mut tagged: Vec<((usize, usize), f64)> = w
            .edges
            .iter()
            .filter(|(_, ts)| split_boundary || ts.len() == 2)
            .map(|(&e, _)| (e, w.length(e)))
            .filter(|&(_, l)| l > threshold)
            .collect();
        if tagged.is_empty() {
            report.converged = true;
            break;
        }
        if report.rounds == max_rounds {
            break;
        }
        tagged.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        for (e, _) in &tagged {
            w.split(*e);
        }
        report.splits += tagged.len();
        report.rounds += 1;
        report.max_edge.push(w.max_edge());
    }
    let mut mesh = patch.mesh.clone();
    mesh.vertices = w.vertices;
    mesh.triangles = w.triangles;
    let refined = Patch::assemble(mesh, w.global, w.source)?;
    Ok((refined, report))
}

/// Longest-edge bisection with the threshold defaulting to the mean
/// boundary edge length.
pub fn refine_patch(patch: &Patch, options: &RefineOptions) -> Result<(Patch, RefineReport)> {
    let threshold = options.threshold.unwrap_or_else(|| mean_boundary_edge(patch));
    if !(threshold > 0.0) {
        return Err(crate::Error::InvalidArgument(format!("refinement threshold {threshold}")));
    }
    longest_edge_bisection(patch, threshold, options.max_rounds, options.split_boundary)
}

#[cfg(test)]
mod tests {
    use nalgebra::Point3;
    use proptest::prelude::*;

    use super::*;
    use crate::fixtures;
    use crate::mesh::{validate, Triangulation};

    fn unit_square() -> Patch {
        Patch::from_mesh(
            Triangulation::new(
                vec![
                    Point3::new(0.0, 0.0, 0.0),
                    Point3::new(1.0, 0.0, 0.0),
                    Point3::new(1.0, 1.0, 0.0),
                    Point3::new(0.0, 1.0, 0.0),
                ],
                vec![[0, 1, 2], [0, 2, 3]],
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn square_diagonal_split() {
        let (p, r) = longest_edge_bisection(&unit_square(), 0.8, 10, false).unwrap();
        assert_eq!(p.num_triangles(), 4);
        assert_eq!(r.splits, 1);
        assert!(r.converged);
        assert_eq!(p.mesh.vertices[4], Point3::new(0.5, 0.5, 0.0));
        assert_eq!(p.global_vertex[4], None);
        assert!(validate(&p.mesh).orientation_consistent);
    }

    #[test]
    fn fine_patch_unchanged() {
        let src = unit_square();
        let (p, r) = longest_edge_bisection(&src, 2.0, 10, false).unwrap();
        assert_eq!(p.mesh, src.mesh);
        assert_eq!(r.rounds, 0);
        assert!(r.converged);
    }

    #[test]
    fn cylinder_gets_interior_vertices() {
        let src = Patch::from_mesh(fixtures::cylinder_shell(12, 1.0, 2.0)).unwrap();
        let options = RefineOptions {
            max_rounds: 5,
            ..Default::default()
        };
        let (p, r) = refine_patch(&src, &options).unwrap();
        assert!(r.rounds > 0);
        assert!(p.mesh.num_vertices() > src.mesh.num_vertices());
        let rel = (p.mesh.total_area() - src.mesh.total_area()).abs() / src.mesh.total_area();
        assert!(rel < 1e-12);
        // boundary untouched
        assert_eq!(p.loops.len(), 1);
        assert_eq!(p.loops[0].len(), src.loops[0].len());
        for w in r.max_edge.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn boundary_split_when_enabled() {
        let (p, _) = longest_edge_bisection(&unit_square(), 0.8, 10, true).unwrap();
        assert!(p.loops[0].len() > 4);
        assert!(validate(&p.mesh).orientation_consistent);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn refinement_preserves_geometry(seed in 0u64..1000, frac in 0.3f64..1.5) {
            let src = Patch::from_mesh(fixtures::random_disk(seed, 10)).unwrap();
            let threshold = frac * mean_boundary_edge(&src);
            let (p, r) = longest_edge_bisection(&src, threshold, 4, false).unwrap();
            let rel = (p.mesh.total_area() - src.mesh.total_area()).abs() / src.mesh.total_area();
            prop_assert!(rel < 1e-12);
            let v = validate(&p.mesh);
            prop_assert!(v.manifold && v.orientation_consistent);
            prop_assert_eq!(p.loops.len(), src.loops.len());
            for w in r.max_edge.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            // new vertices sit on an edge of their source triangle
            for (t, tri) in p.mesh.triangles.iter().enumerate() {
                let [a, b, c] = src.mesh.corners(p.source_triangle[t]);
                for &v in tri {
                    let q = p.mesh.vertices[v];
                    let n = (b - a).cross(&(c - a));
                    prop_assert!((q - a).dot(&n).abs() <= 1e-12 * n.norm());
                }
            }
        }
    }
}
