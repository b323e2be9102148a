use nalgebra::{Matrix2, Point2, Vector2};
use serde::Serialize;

use super::locator::UVLocator;
use crate::atlas::Patch;
use crate::error::{Error, Result};
use crate::planar::triangulate_domain;
use crate::quality::{metric_tensor, triangle_jacobian};

/// Edges longer than this in the metric are split.
pub const SPLIT_LENGTH: f64 = 1.4;
/// Edges shorter than this in the metric are collapsed.
pub const COLLAPSE_LENGTH: f64 = 0.7;
pub const DEFAULT_PASSES: usize = 10;
const MAX_FLIP_SWEEPS: usize = 20;
const RELAXATION: f64 = 0.5;

/// Piecewise constant metric `J^T J / h^2` over the UV triangles of a patch.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub locator: UVLocator,
    metrics: Vec<Matrix2<f64>>,
}

impl MetricField {
    pub fn new(patch: &Patch, uv: &[Point2<f64>], h: f64) -> Result<Self> {
        let metrics = (0..patch.num_triangles())
            .map(|t| {
                let tri_uv = patch.mesh.triangles[t].map(|v| uv[v]);
                metric_tensor(&triangle_jacobian(&patch.mesh.corners(t), &tri_uv)?, h)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricField {
            locator: UVLocator::new(uv, &patch.mesh.triangles),
            metrics,
        })
    }

    /// Metric of the triangle containing (or nearest to) `p`.
    pub fn at(&self, p: &Point2<f64>) -> Matrix2<f64> {
        self.metrics[self.locator.nearest(p).0]
    }

    /// Metric length of segment `ab`, two-point Gauss rule.
    pub fn length(&self, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
        let d = b - a;
        let g = 0.5 / 3f64.sqrt();
        [0.5 - g, 0.5 + g]
            .iter()
            .map(|&s| {
                let m = self.at(&(a + s * d));
                d.dot(&(m * d)).max(0.0).sqrt()
            })
            .sum::<f64>()
            * 0.5
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RemeshStats {
    pub passes: usize,
    pub splits: usize,
    pub collapses: usize,
    pub flips: usize,
    pub interior_edges: usize,
    /// interior edges with metric length in `[COLLAPSE_LENGTH, SPLIT_LENGTH]`
    pub in_band: usize,
}

/// A planar triangulation of a patch domain. The first `boundary` points
/// are the prescribed loop points in loop order.
#[derive(Debug, Clone)]
pub struct UvMesh {
    pub points: Vec<Point2<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: usize,
    pub stats: RemeshStats,
}

fn orient(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    (b - a).perp(&(c - a))
}

/// `d` strictly inside the circle through counter-clockwise `a, b, c`,
/// measured in the metric `m`.
fn in_metric_circle(m: &Matrix2<f64>, a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>, d: &Point2<f64>) -> bool {
    let l11 = m[(0, 0)].sqrt();
    let l21 = m[(0, 1)] / l11;
    let l22 = (m[(1, 1)] - l21 * l21).max(0.0).sqrt();
    let tr = |p: &Point2<f64>| {
        let q = p - d;
        Vector2::new(l11 * q.x + l21 * q.y, l22 * q.y)
    };
    let (pa, pb, pc) = (tr(a), tr(b), tr(c));
    let (na, nb, nc) = (pa.norm_squared(), pb.norm_squared(), pc.norm_squared());
    let det = pa.x * (pb.y * nc - nb * pc.y) - pa.y * (pb.x * nc - nb * pc.x) + na * (pb.x * pc.y - pb.y * pc.x);
    let scale = (na * nb * nc).sqrt().max(f64::MIN_POSITIVE) * (na + nb + nc).sqrt().max(f64::MIN_POSITIVE);
    det > 1e-10 * scale
}

struct Domain<'a> {
    loops: &'a [Vec<Point2<f64>>],
    offsets: Vec<usize>,
    boundary: usize,
}

impl Domain<'_> {
    /// Loop edge between two prescribed points.
    fn is_constrained(&self, a: usize, b: usize) -> bool {
        if a >= self.boundary || b >= self.boundary {
            return false;
        }
        let l = self.offsets.partition_point(|&o| o <= a) - 1;
        let (o, n) = (self.offsets[l], self.loops[l].len());
        if b < o || b >= o + n {
            return false;
        }
        let (i, j) = (a - o, b - o);
        (i + 1) % n == j || (j + 1) % n == i
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Edges with the triangles on each side, sorted by key.
fn edge_map(triangles: &[[usize; 3]]) -> Vec<((usize, usize), Vec<usize>)> {
    let mut pairs: Vec<((usize, usize), usize)> = Vec::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            pairs.push((key(tri[k], tri[(k + 1) % 3]), t));
        }
    }
    pairs.sort_unstable();
    let mut edges: Vec<((usize, usize), Vec<usize>)> = Vec::with_capacity(pairs.len() / 2 + 1);
    for (e, t) in pairs {
        match edges.last_mut() {
            Some(last) if last.0 == e => last.1.push(t),
            _ => edges.push((e, vec![t])),
        }
    }
    edges
}

fn flip_sweeps(points: &[Point2<f64>], triangles: &mut [[usize; 3]], domain: &Domain, metric: &MetricField) -> usize {
    let mut flips = 0;
    for _ in 0..MAX_FLIP_SWEEPS {
        let mut changed = vec![false; triangles.len()];
        let mut any = false;
        for ((a0, b0), ts) in edge_map(triangles) {
            if ts.len() != 2 || domain.is_constrained(a0, b0) || changed[ts[0]] || changed[ts[1]] {
                continue;
            }
            let (t1, t2) = (ts[0], ts[1]);
            // orient the edge as a -> b inside t1
            let tri1 = triangles[t1];
            let k = (0..3).find(|&k| key(tri1[k], tri1[(k + 1) % 3]) == (a0, b0)).unwrap();
            let (a, b, c) = (tri1[k], tri1[(k + 1) % 3], tri1[(k + 2) % 3]);
            let d = *triangles[t2].iter().find(|&&v| v != a && v != b).unwrap();
            let (pa, pb, pc, pd) = (points[a], points[b], points[c], points[d]);
            if orient(&pa, &pd, &pc) <= 0.0 || orient(&pd, &pb, &pc) <= 0.0 {
                continue;
            }
            let m = metric.at(&nalgebra::center(&pa, &pb));
            if in_metric_circle(&m, &pa, &pb, &pc, &pd) {
                triangles[t1] = [a, d, c];
                triangles[t2] = [d, b, c];
                changed[t1] = true;
                changed[t2] = true;
                any = true;
                flips += 1;
            }
        }
        if !any {
            break;
        }
    }
    flips
}

fn neighbors(n: usize, triangles: &[[usize; 3]]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut nb = vec![Vec::new(); n];
    let mut inc = vec![Vec::new(); n];
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            nb[tri[k]].push(tri[(k + 1) % 3]);
            nb[tri[k]].push(tri[(k + 2) % 3]);
            inc[tri[k]].push(t);
        }
    }
    for l in &mut nb {
        l.sort_unstable();
        l.dedup();
    }
    (nb, inc)
}

fn smooth(points: &mut [Point2<f64>], triangles: &[[usize; 3]], boundary: usize, metric: &MetricField) {
    let (nb, inc) = neighbors(points.len(), triangles);
    for v in boundary..points.len() {
        if nb[v].is_empty() {
            continue;
        }
        let p = points[v];
        let (mut acc, mut wsum) = (Vector2::zeros(), 0.0);
        for &u in &nb[v] {
            let w = metric.length(&p, &points[u]);
            acc += w * points[u].coords;
            wsum += w;
        }
        if !(wsum > 0.0) {
            continue;
        }
        let target = Point2::from(acc / wsum);
        let q = p + RELAXATION * (target - p);
        if metric.locator.locate(&q).is_none() {
            continue;
        }
        let valid = inc[v].iter().all(|&t| {
            let tri = triangles[t].map(|x| if x == v { q } else { points[x] });
            let before = orient(&points[triangles[t][0]], &points[triangles[t][1]], &points[triangles[t][2]]);
            orient(&tri[0], &tri[1], &tri[2]) > 1e-6 * before
        });
        if valid {
            points[v] = q;
        }
    }
}

fn triangulate(loops: &[Vec<Point2<f64>>], free: &[Point2<f64>], boundary: usize) -> Result<(Vec<Point2<f64>>, Vec<[usize; 3]>)> {
    let m = triangulate_domain(loops, free)?;
    let used = {
        let mut u = vec![false; m.points.len()];
        for t in &m.triangles {
            for &v in t {
                u[v] = true;
            }
        }
        u
    };
    if used[..boundary].iter().any(|u| !u) {
        return Err(Error::Degenerate("loop point missing from the planar triangulation".into()));
    }
    Ok((m.points, m.triangles))
}

/// Meshes the domain bounded by `loops` (outer loop and holes, fixed) so
/// that edge lengths measured in the metric approach one, by repeated
/// splitting, collapsing, metric Delaunay flipping and smoothing.
pub fn mesh_patch_uv(loops: &[Vec<Point2<f64>>], metric: &MetricField, passes: usize) -> Result<UvMesh> {
    let mut offsets = Vec::new();
    let mut boundary = 0;
    for l in loops {
        offsets.push(boundary);
        boundary += l.len();
    }
    let domain = Domain {
        loops,
        offsets,
        boundary,
    };
    let mut stats = RemeshStats::default();
    let mut free: Vec<Point2<f64>> = Vec::new();
    for _ in 0..passes {
        stats.passes += 1;
        let changes = stats.splits + stats.collapses;
        let (points, mut triangles) = triangulate(loops, &free, boundary)?;
        stats.flips += flip_sweeps(&points, &mut triangles, &domain, metric);
        let mut lengths: Vec<((usize, usize), f64)> = edge_map(&triangles)
            .into_iter()
            .filter(|(e, _)| !domain.is_constrained(e.0, e.1))
            .map(|(e, _)| (e, metric.length(&points[e.0], &points[e.1])))
            .collect();
        let (nb, _) = neighbors(points.len(), &triangles);
        let mut touched = vec![false; points.len()];
        let mut removed = vec![false; points.len()];
        let mut added = Vec::new();
        lengths.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        for &((a, b), l) in &lengths {
            if l <= SPLIT_LENGTH {
                break;
            }
            let m = nalgebra::center(&points[a], &points[b]);
            if metric.locator.locate(&m).is_some() {
                added.push(m);
                touched[a] = true;
                touched[b] = true;
                stats.splits += 1;
            }
        }
        for &((a, b), l) in lengths.iter().rev() {
            if l >= COLLAPSE_LENGTH {
                break;
            }
            if touched[a] || touched[b] || (a < boundary && b < boundary) {
                continue;
            }
            if a < boundary || b < boundary {
                removed[a.max(b)] = true;
            } else {
                let m = nalgebra::center(&points[a], &points[b]);
                if metric.locator.locate(&m).is_none() {
                    continue;
                }
                removed[a] = true;
                removed[b] = true;
                added.push(m);
            }
            stats.collapses += 1;
            for v in [a, b] {
                touched[v] = true;
                for &u in &nb[v] {
                    touched[u] = true;
                }
            }
        }
        let mut next: Vec<Point2<f64>> = (boundary..points.len()).filter(|&v| !removed[v]).map(|v| points[v]).collect();
        next.extend(added);
        let (mut points, mut triangles) = triangulate(loops, &next, boundary)?;
        stats.flips += flip_sweeps(&points, &mut triangles, &domain, metric);
        smooth(&mut points, &triangles, boundary, metric);
        let settled = stats.splits + stats.collapses == changes;
        free = points[boundary..].to_vec();
        if settled {
            break;
        }
    }
    let (points, mut triangles) = triangulate(loops, &free, boundary)?;
    stats.flips += flip_sweeps(&points, &mut triangles, &domain, metric);
    for ((a, b), _) in edge_map(&triangles) {
        if domain.is_constrained(a, b) {
            continue;
        }
        stats.interior_edges += 1;
        let l = metric.length(&points[a], &points[b]);
        if (COLLAPSE_LENGTH..=SPLIT_LENGTH).contains(&l) {
            stats.in_band += 1;
        }
    }
    triangles.sort_unstable();
    Ok(UvMesh {
        points,
        triangles,
        boundary,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::Point3;

    use super::*;
    use crate::mesh::Triangulation;

    fn flat_square() -> (Patch, Vec<Point2<f64>>) {
        let m = Triangulation::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let uv = m.vertices.iter().map(|p| p.xy()).collect();
        (Patch::from_mesh(m).unwrap(), uv)
    }

    fn square_loop(k: usize) -> Vec<Point2<f64>> {
        let mut l = Vec::new();
        let s = 1.0 / k as f64;
        for i in 0..k {
            l.push(Point2::new(i as f64 * s, 0.0));
        }
        for i in 0..k {
            l.push(Point2::new(1.0, i as f64 * s));
        }
        for i in 0..k {
            l.push(Point2::new(1.0 - i as f64 * s, 1.0));
        }
        for i in 0..k {
            l.push(Point2::new(0.0, 1.0 - i as f64 * s));
        }
        l
    }

    #[test]
    fn metric_of_identity_map() {
        let (p, uv) = flat_square();
        let f = MetricField::new(&p, &uv, 0.25).unwrap();
        assert!((f.at(&Point2::new(0.3, 0.6)) - 16.0 * Matrix2::<f64>::identity()).norm() < 1e-12);
        assert!((f.length(&Point2::new(0.0, 0.0), &Point2::new(0.5, 0.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flat_square_quarter_size() {
        let (p, uv) = flat_square();
        let f = MetricField::new(&p, &uv, 0.25).unwrap();
        let m = mesh_patch_uv(&[square_loop(4)], &f, DEFAULT_PASSES).unwrap();
        let n = m.triangles.len();
        assert!((16..=48).contains(&n), "{n} triangles");
        assert!(m.stats.in_band as f64 >= 0.95 * m.stats.interior_edges as f64);
        let area: f64 = m.triangles.iter().map(|t| 0.5 * orient(&m.points[t[0]], &m.points[t[1]], &m.points[t[2]])).sum();
        assert!((area - 1.0).abs() < 1e-12);
        assert!(m.triangles.iter().all(|t| orient(&m.points[t[0]], &m.points[t[1]], &m.points[t[2]]) > 0.0));
    }

    #[test]
    fn coarse_size_keeps_boundary_only() {
        let (p, uv) = flat_square();
        let f = MetricField::new(&p, &uv, 1.5).unwrap();
        let m = mesh_patch_uv(&[square_loop(1)], &f, DEFAULT_PASSES).unwrap();
        assert_eq!(m.points.len(), 4);
        assert_eq!(m.triangles.len(), 2);
    }

    #[test]
    fn fine_size_band() {
        let (p, uv) = flat_square();
        let f = MetricField::new(&p, &uv, 0.05).unwrap();
        let m = mesh_patch_uv(&[square_loop(20)], &f, DEFAULT_PASSES).unwrap();
        let frac = m.stats.in_band as f64 / m.stats.interior_edges as f64;
        assert!(frac >= 0.95, "in band {frac}");
        let expect = 2.0 / (0.05f64 * 0.05);
        let n = m.triangles.len() as f64;
        assert!(n > 0.5 * expect && n < 1.5 * expect, "{n} triangles");
    }
}
