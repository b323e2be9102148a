use serde::Serialize;

use super::{Adjacency, Triangulation};
use crate::error::{Error, Result};

/// Counts describing the topology of a (sub-)triangulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TopologyInfo {
    /// referenced vertices
    pub p: usize,
    pub e: usize,
    pub t: usize,
    /// boundary loops
    pub b: usize,
    /// distinct boundary vertices
    pub h: usize,
    /// genus from the Euler characteristic, `(2 - b - chi) / 2`
    pub g: i64,
    pub components: usize,
}

impl TopologyInfo {
    pub fn euler_characteristic(&self) -> i64 {
        self.p as i64 - self.e as i64 + self.t as i64
    }

    /// Genus solved from `t = 2(p - 1) + 2(b - 1) - h + 4g`, when integral.
    pub fn formula_genus(&self) -> Option<i64> {
        let num = self.t as i64 - 2 * (self.p as i64 - 1) - 2 * (self.b as i64 - 1) + self.h as i64;
        (num % 4 == 0).then_some(num / 4)
    }

    /// Right-hand side of the counting formula for a given genus.
    pub fn formula_triangles(&self, genus: i64) -> i64 {
        2 * (self.p as i64 - 1) + 2 * (self.b as i64 - 1) - self.h as i64 + 4 * genus
    }
}

/// Result of the parametrizability test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EulerCheck {
    pub topology: TopologyInfo,
    /// a boundary vertex is shared by two fans of the patch
    pub pinched: bool,
    pub parametrizable: bool,
}

/// Computes topology counts and whether the triangulation maps one-to-one
/// onto a disk (with holes): the counting formula must hold with `g = 0`,
/// at least one boundary, a single component and no pinched vertices.
pub fn euler_check(mesh: &Triangulation) -> Result<EulerCheck> {
    let adj = Adjacency::new(mesh.num_vertices(), &mesh.triangles);
    euler_check_with(mesh, &adj)
}

pub fn euler_check_with(mesh: &Triangulation, adj: &Adjacency) -> Result<EulerCheck> {
    if !adj.is_manifold() {
        return Err(Error::NonManifold("patch has an edge with more than two triangles".into()));
    }
    let loops = adj.boundary_loops(&mesh.triangles)?;
    let p = adj.vertex_triangles.iter().filter(|s| !s.is_empty()).count();
    let e = adj.edges.len();
    let t = mesh.num_triangles();
    let b = loops.len();
    let mut boundary_vertices: Vec<usize> = loops.iter().flatten().copied().collect();
    let walked = boundary_vertices.len();
    boundary_vertices.sort_unstable();
    boundary_vertices.dedup();
    let h = boundary_vertices.len();
    let pinched = walked != h;
    let chi = p as i64 - e as i64 + t as i64;
    let g = (2 - b as i64 - chi).div_euclid(2);
    let components = adj.component_count(t);
    let topology = TopologyInfo {
        p,
        e,
        t,
        b,
        h,
        g,
        components,
    };
    let parametrizable = b >= 1
        && components == 1
        && !pinched
        && (2 - b as i64 - chi) % 2 == 0
        && topology.formula_triangles(0) == t as i64;
    Ok(EulerCheck {
        topology,
        pinched,
        parametrizable,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::Point3;

    use super::*;

    fn mesh(n: usize, tris: Vec<[usize; 3]>) -> Triangulation {
        let v = (0..n).map(|i| Point3::new(i as f64, (i * i) as f64, 0.0)).collect();
        Triangulation::new(v, tris).unwrap()
    }

    #[test]
    fn single_triangle() {
        let c = euler_check(&mesh(3, vec![[0, 1, 2]])).unwrap();
        let tp = c.topology;
        assert_eq!((tp.t, tp.p, tp.b, tp.h, tp.g), (1, 3, 1, 3, 0));
        assert_eq!(tp.formula_triangles(0), 1);
        assert!(c.parametrizable);
    }

    #[test]
    fn quad() {
        let c = euler_check(&mesh(4, vec![[0, 1, 2], [0, 2, 3]])).unwrap();
        assert_eq!((c.topology.t, c.topology.p, c.topology.h), (2, 4, 4));
        assert!(c.parametrizable);
    }

    #[test]
    fn tetrahedron_needs_a_cut() {
        let c = euler_check(&mesh(4, vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])).unwrap();
        let tp = c.topology;
        assert_eq!((tp.t, tp.p, tp.b, tp.h, tp.g), (4, 4, 0, 0, 0));
        // 2(4-1) + 2(0-1) - 0 = 4 = t, but there is no boundary
        assert_eq!(tp.formula_triangles(0), 4);
        assert_eq!(tp.formula_genus(), Some(0));
        assert!(!c.parametrizable);
    }

    #[test]
    fn two_components_are_rejected() {
        let c = euler_check(&mesh(6, vec![[0, 1, 2], [3, 4, 5]])).unwrap();
        assert_eq!(c.topology.components, 2);
        assert!(!c.parametrizable);
    }

    #[test]
    fn pinch_is_rejected() {
        let c = euler_check(&mesh(5, vec![[0, 1, 2], [0, 3, 4]])).unwrap();
        assert!(c.pinched);
        assert!(!c.parametrizable);
    }
}
