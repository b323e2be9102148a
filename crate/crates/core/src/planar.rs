//! Constrained Delaunay triangulation of planar polygonal domains.

use nalgebra::Point2;
use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, Triangulation as _};

use crate::error::{Error, Result};

type Cdt = ConstrainedDelaunayTriangulation<spade::Point2<f64>>;

/// Result of `triangulate_domain`. Vertex `k` of `points` is the k-th input
/// point (loops first, in order, then the free points).
#[derive(Debug, Clone)]
pub(crate) struct PlanarMesh {
    pub points: Vec<Point2<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

/// Even-odd test against a set of closed polygons.
pub(crate) fn inside_loops(p: &Point2<f64>, loops: &[Vec<Point2<f64>>]) -> bool {
    let mut inside = false;
    for lp in loops {
        let n = lp.len();
        for i in 0..n {
            let (a, b) = (lp[i], lp[(i + 1) % n]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn insert(cdt: &mut Cdt, p: &Point2<f64>) -> Result<FixedVertexHandle> {
    cdt.insert(spade::Point2::new(p.x, p.y))
        .map_err(|e| Error::Degenerate(format!("cannot insert planar point ({}, {}): {e:?}", p.x, p.y)))
}

/// Even-odd classification of the inner faces by flood fill: crossing a
/// constraint edge toggles inside/outside, the convex hull exterior is
/// outside. Indexed by face index.
fn classify_faces(cdt: &Cdt) -> Vec<bool> {
    let mut state: Vec<Option<bool>> = vec![None; cdt.num_inner_faces() + 1];
    let mut stack = Vec::new();
    for face in cdt.inner_faces() {
        for e in face.adjacent_edges() {
            if e.rev().face().is_outer() && state[face.fix().index()].is_none() {
                let inside = cdt.is_constraint_edge(e.fix().as_undirected());
                state[face.fix().index()] = Some(inside);
                stack.push(face);
            }
        }
    }
    while let Some(face) = stack.pop() {
        let inside = state[face.fix().index()].unwrap();
        for e in face.adjacent_edges() {
            if let Some(n) = e.rev().face().as_inner() {
                if state[n.fix().index()].is_none() {
                    state[n.fix().index()] = Some(inside ^ cdt.is_constraint_edge(e.fix().as_undirected()));
                    stack.push(n);
                }
            }
        }
    }
    state.into_iter().map(|s| s.unwrap_or(false)).collect()
}

/// Triangulates the region enclosed by `loops` (even-odd rule) with the loop
/// edges as constraints and `free` as additional vertices. Input points must
/// be pairwise distinct; free points must lie strictly inside the domain.
pub(crate) fn triangulate_domain(loops: &[Vec<Point2<f64>>], free: &[Point2<f64>]) -> Result<PlanarMesh> {
    let mut cdt = Cdt::new();
    let mut handles = Vec::new();
    let mut points = Vec::new();
    for lp in loops {
        for p in lp {
            handles.push(insert(&mut cdt, p)?);
            points.push(*p);
        }
    }
    let mut offset = 0;
    for lp in loops {
        let n = lp.len();
        for i in 0..n {
            let (a, b) = (handles[offset + i], handles[offset + (i + 1) % n]);
            if a == b || !cdt.can_add_constraint(a, b) {
                return Err(Error::BoundaryIntersection);
            }
            cdt.add_constraint(a, b);
        }
        offset += n;
    }
    for p in free {
        handles.push(insert(&mut cdt, p)?);
        points.push(*p);
    }
    if cdt.num_vertices() != points.len() {
        return Err(Error::Degenerate("coincident planar points".into()));
    }
    let mut index_of = vec![usize::MAX; cdt.num_vertices()];
    for (k, h) in handles.iter().enumerate() {
        index_of[h.index()] = k;
    }
    let inside = classify_faces(&cdt);
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if inside[face.fix().index()] {
            triangles.push(face.vertices().map(|v| index_of[v.fix().index()]));
        }
    }
    triangles.sort_unstable();
    Ok(PlanarMesh { points, triangles })
}
