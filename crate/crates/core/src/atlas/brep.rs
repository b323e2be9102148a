use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureEdgeSet;
use crate::mesh::{Adjacency, Triangulation};

const NO_FACE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    /// model boundary
    Boundary,
    /// sharp edge between two faces
    Feature,
    /// introduced by patch splitting
    Cut,
}

#[derive(Debug, Clone, Serialize)]
pub struct BRepPoint {
    /// model vertex
    pub vertex: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BRepCurve {
    /// model vertices in curve order; a closed curve does not repeat its first vertex
    pub vertices: Vec<usize>,
    pub closed: bool,
    pub start: Option<usize>,
    pub end: Option<usize>,
    /// adjacent faces, one or two
    pub faces: Vec<usize>,
    pub kind: CurveKind,
}

impl BRepCurve {
    pub fn num_segments(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    /// Segment `k` as a pair of model vertices in curve direction.
    pub fn segment(&self, k: usize) -> (usize, usize) {
        (self.vertices[k], self.vertices[(k + 1) % self.vertices.len()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CurveUse {
    pub curve: usize,
    /// traversed against the curve direction
    pub reversed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BRepFace {
    pub patch: usize,
    /// one cycle of curve uses per patch boundary loop, same order as the loops
    pub loops: Vec<Vec<CurveUse>>,
}

/// Faces, curves and corner points of a segmented model.
#[derive(Debug, Clone, Serialize)]
pub struct BRep {
    pub points: Vec<BRepPoint>,
    pub curves: Vec<BRepCurve>,
    pub faces: Vec<BRepFace>,
}

impl BRep {
    /// Model vertex sequence of a face loop, surface on the left, without
    /// repeating the first vertex.
    pub fn loop_vertices(&self, face: usize, l: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for u in &self.faces[face].loops[l] {
            let c = &self.curves[u.curve];
            let mut vs = c.vertices.clone();
            if c.closed {
                vs.push(vs[0]);
            }
            if u.reversed {
                vs.reverse();
            }
            out.extend_from_slice(&vs[..vs.len() - 1]);
        }
        out
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Builds the boundary representation of a partition of `model` into
/// patches. `patch_of_triangle` assigns every model triangle; `loops` holds
/// each patch's boundary loops as model vertex sequences (surface on the
/// left).
pub fn build_brep(
    model: &Triangulation,
    adj: &Adjacency,
    patch_of_triangle: &[usize],
    loops: &[Vec<Vec<usize>>],
    features: Option<&FeatureEdgeSet>,
) -> Result<BRep> {
    // curve edges, keyed by sorted vertex pair
    let mut info: BTreeMap<(usize, usize), ((usize, usize), CurveKind, usize)> = BTreeMap::new();
    for (e, edge) in adj.edges.iter().enumerate() {
        let [a, b] = edge.vertices;
        match edge.triangles.as_slice() {
            [t] => {
                info.insert(key(a, b), ((patch_of_triangle[*t], NO_FACE), CurveKind::Boundary, *t));
            }
            [t0, t1] => {
                let (p0, p1) = (patch_of_triangle[*t0], patch_of_triangle[*t1]);
                if p0 != p1 {
                    let kind = if features.is_some_and(|f| f.is_feature(e)) {
                        CurveKind::Feature
                    } else {
                        CurveKind::Cut
                    };
                    let t = if p0 < p1 { *t0 } else { *t1 };
                    info.insert(key(a, b), ((p0.min(p1), p0.max(p1)), kind, t));
                }
            }
            _ => return Err(Error::NonManifold(format!("edge ({a}, {b})"))),
        }
    }
    let mut incident: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for &(a, b) in info.keys() {
        incident.entry(a).or_default().push((a, b));
        incident.entry(b).or_default().push((a, b));
    }
    let is_corner = |v: usize| -> bool {
        let es = &incident[&v];
        es.len() != 2 || {
            let (i0, i1) = (&info[&es[0]], &info[&es[1]]);
            i0.0 != i1.0 || i0.1 != i1.1
        }
    };
    let mut point_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut points = Vec::new();
    for &v in incident.keys() {
        if is_corner(v) {
            point_of.insert(v, points.len());
            points.push(BRepPoint { vertex: v });
        }
    }

    let other = |e: (usize, usize), v: usize| if e.0 == v { e.1 } else { e.0 };
    let mut visited: HashMap<(usize, usize), bool> = info.keys().map(|&k| (k, false)).collect();
    let mut curves: Vec<BRepCurve> = Vec::new();
    let trace = |start_vertex: usize, first: (usize, usize), visited: &mut HashMap<(usize, usize), bool>| {
        let mut vs = vec![start_vertex];
        let mut e = first;
        let mut v = start_vertex;
        loop {
            visited.insert(e, true);
            let w = other(e, v);
            if w == start_vertex && !point_of.contains_key(&w) {
                break;
            }
            vs.push(w);
            if point_of.contains_key(&w) {
                break;
            }
            let next = incident[&w].iter().copied().find(|&n| n != e).unwrap();
            e = next;
            v = w;
        }
        vs
    };
    let mut raw: Vec<(Vec<usize>, bool)> = Vec::new();
    for (&v, _) in &point_of {
        for &e in &incident[&v] {
            if !visited[&e] {
                raw.push((trace(v, e, &mut visited), false));
            }
        }
    }
    for &e in info.keys() {
        if !visited[&e] {
            raw.push((trace(e.0, e, &mut visited), true));
        }
    }

    let mut edge_curve: HashMap<(usize, usize), usize> = HashMap::new();
    for (mut vs, closed) in raw {
        let (faces_key, kind, tri) = info[&key(vs[0], vs[1])];
        // run along the lower face's loop direction: its triangle holds the
        // first segment forwards
        let t = model.triangles[tri];
        let forward = (0..3).any(|k| t[k] == vs[0] && t[(k + 1) % 3] == vs[1]);
        if !forward {
            vs.reverse();
            if closed {
                vs.rotate_right(1);
            }
        }
        if closed {
            let m = (0..vs.len()).min_by_key(|&i| vs[i]).unwrap();
            vs.rotate_left(m);
        }
        let id = curves.len();
        let n = vs.len();
        let segments = if closed { n } else { n - 1 };
        for k in 0..segments {
            edge_curve.insert(key(vs[k], vs[(k + 1) % n]), id);
        }
        let mut faces = vec![faces_key.0];
        if faces_key.1 != NO_FACE {
            faces.push(faces_key.1);
        }
        curves.push(BRepCurve {
            start: (!closed).then(|| point_of[&vs[0]]),
            end: (!closed).then(|| point_of[&vs[n - 1]]),
            vertices: vs,
            closed,
            faces,
            kind,
        });
    }
    // deterministic curve order: by first vertex, then second
    let mut order: Vec<usize> = (0..curves.len()).collect();
    order.sort_by_key(|&c| (curves[c].vertices[0], curves[c].vertices[1]));
    let mut new_id = vec![0; curves.len()];
    for (n, &c) in order.iter().enumerate() {
        new_id[c] = n;
    }
    let mut sorted: Vec<BRepCurve> = order.iter().map(|&c| curves[c].clone()).collect();
    for c in edge_curve.values_mut() {
        *c = new_id[*c];
    }
    std::mem::swap(&mut curves, &mut sorted);

    let mut faces = Vec::with_capacity(loops.len());
    for (f, patch_loops) in loops.iter().enumerate() {
        let mut face_loops = Vec::new();
        for lp in patch_loops {
            face_loops.push(loop_uses(f, lp, &curves, &edge_curve)?);
        }
        faces.push(BRepFace {
            patch: f,
            loops: face_loops,
        });
    }
    Ok(BRep { points, curves, faces })
}

/// Decomposes a face loop into curve uses.
fn loop_uses(
    face: usize,
    lp: &[usize],
    curves: &[BRepCurve],
    edge_curve: &HashMap<(usize, usize), usize>,
) -> Result<Vec<CurveUse>> {
    let n = lp.len();
    let curve_at = |i: usize| -> Result<usize> {
        edge_curve
            .get(&key(lp[i], lp[(i + 1) % n]))
            .copied()
            .ok_or_else(|| Error::InconsistentBoundary(format!("face {face}: loop edge without curve")))
    };
    // start where a curve begins
    let start = (0..n)
        .find(|&i| {
            let c = &curves[curve_at(i).unwrap_or(0)];
            !c.closed && (c.vertices[0] == lp[i] || *c.vertices.last().unwrap() == lp[i])
        })
        .unwrap_or(0);
    let mut uses = Vec::new();
    let mut i = 0;
    while i < n {
        let pos = (start + i) % n;
        let c = curve_at(pos)?;
        let curve = &curves[c];
        let (a, b) = (lp[pos], lp[(pos + 1) % n]);
        let k = curve
            .vertices
            .iter()
            .position(|&v| v == a)
            .ok_or_else(|| Error::InconsistentBoundary(format!("face {face}: vertex {a} not on curve {c}")))?;
        let m = curve.vertices.len();
        let reversed = curve.vertices[(k + 1) % m] != b || (!curve.closed && k + 1 == m);
        let segments = curve.num_segments();
        // the loop must follow the whole curve
        for s in 0..segments {
            let (x, y) = if reversed {
                let j = (k + m - s) % m;
                (curve.vertices[j], curve.vertices[(j + m - 1) % m])
            } else {
                let j = (k + s) % m;
                (curve.vertices[j], curve.vertices[(j + 1) % m])
            };
            let q = (start + i + s) % n;
            if lp[q] != x || lp[(q + 1) % n] != y {
                return Err(Error::InconsistentBoundary(format!(
                    "face {face}: loop leaves curve {c} early"
                )));
            }
        }
        uses.push(CurveUse { curve: c, reversed });
        i += segments;
    }
    if i != n {
        return Err(Error::InconsistentBoundary(format!("face {face}: loop length mismatch")));
    }
    Ok(uses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{detect_feature_edges, segment_patches};
    use crate::fixtures;

    fn brep_of(m: &Triangulation, angle: f64) -> BRep {
        let adj = Adjacency::new(m.num_vertices(), &m.triangles);
        let f = detect_feature_edges(m, &adj, angle).unwrap();
        let p = segment_patches(m, &adj, &f).unwrap();
        build_brep(m, &adj, &p.patch_of_triangle, &p.loops, Some(&f)).unwrap()
    }

    #[test]
    fn cube_counts() {
        for n in [1, 3] {
            let b = brep_of(&fixtures::cube(n), 40.0);
            assert_eq!((b.faces.len(), b.curves.len(), b.points.len()), (6, 12, 8));
            for c in &b.curves {
                assert_eq!(c.faces.len(), 2);
                assert_eq!(c.kind, CurveKind::Feature);
                assert_eq!(c.vertices.len(), n + 1);
            }
            for f in &b.faces {
                assert_eq!(f.loops.len(), 1);
                assert_eq!(f.loops[0].len(), 4);
            }
        }
    }

    #[test]
    fn disk_single_closed_curve() {
        let m = fixtures::disk(3, 10);
        let b = brep_of(&m, 40.0);
        assert_eq!((b.faces.len(), b.curves.len(), b.points.len()), (1, 1, 0));
        assert!(b.curves[0].closed);
        assert_eq!(b.curves[0].kind, CurveKind::Boundary);
        assert_eq!(b.loop_vertices(0, 0).len(), 10);
    }

    #[test]
    fn shared_curve_has_two_faces() {
        // hinge: two triangles at a right angle
        let m = Triangulation::new(
            vec![
                nalgebra::Point3::new(0.0, 0.0, 0.0),
                nalgebra::Point3::new(1.0, 0.0, 0.0),
                nalgebra::Point3::new(0.5, 1.0, 0.0),
                nalgebra::Point3::new(0.5, 0.0, 1.0),
            ],
            vec![[0, 1, 2], [1, 0, 3]],
        )
        .unwrap();
        let b = brep_of(&m, 40.0);
        assert_eq!(b.faces.len(), 2);
        let shared: Vec<_> = b.curves.iter().filter(|c| c.faces.len() == 2).collect();
        assert_eq!(shared.len(), 1);
        assert_eq!(shared[0].vertices, vec![0, 1]);
        // the two faces traverse it in opposite directions
        let uses: Vec<CurveUse> = b
            .faces
            .iter()
            .flat_map(|f| f.loops[0].iter().copied())
            .filter(|u| b.curves[u.curve].faces.len() == 2)
            .collect();
        assert_eq!(uses.len(), 2);
        assert_ne!(uses[0].reversed, uses[1].reversed);
    }

    #[test]
    fn loops_reconstruct() {
        let m = fixtures::cube(2);
        let adj = Adjacency::new(m.num_vertices(), &m.triangles);
        let f = detect_feature_edges(&m, &adj, 40.0).unwrap();
        let p = segment_patches(&m, &adj, &f).unwrap();
        let b = build_brep(&m, &adj, &p.patch_of_triangle, &p.loops, Some(&f)).unwrap();
        for (fi, loops) in p.loops.iter().enumerate() {
            let got = b.loop_vertices(fi, 0);
            let want = &loops[0];
            let s = want.iter().position(|&v| v == got[0]).unwrap();
            let rotated: Vec<usize> = (0..want.len()).map(|i| want[(s + i) % want.len()]).collect();
            assert_eq!(got, rotated);
        }
    }
}
