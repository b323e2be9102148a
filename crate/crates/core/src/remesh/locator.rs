use nalgebra::Point2;
use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};

/// Barycentric acceptance tolerance.
pub const LOCATE_TOLERANCE: f64 = 1e-9;

type Entry = GeomWithData<Rectangle<[f64; 2]>, usize>;

/// R-tree over the bounding boxes of the UV triangles of a patch.
#[derive(Debug, Clone)]
pub struct UVLocator {
    uv: Vec<Point2<f64>>,
    triangles: Vec<[usize; 3]>,
    tree: RTree<Entry>,
    diagonal: f64,
}

fn cross(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    (b - a).perp(&(c - a))
}

/// Closest point of segment `ab` to `p`.
fn closest_on_segment(p: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> (f64, f64) {
    let d = b - a;
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (t, (a + t * d - p).norm())
}

impl UVLocator {
    pub fn new(uv: &[Point2<f64>], triangles: &[[usize; 3]]) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let entries = triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let lo = tri.iter().fold(Point2::new(f64::INFINITY, f64::INFINITY), |m, &v| m.inf(&uv[v]));
                let hi = tri.iter().fold(Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |m, &v| m.sup(&uv[v]));
                min = min.inf(&lo);
                max = max.sup(&hi);
                GeomWithData::new(Rectangle::from_corners([lo.x, lo.y], [hi.x, hi.y]), t)
            })
            .collect();
        UVLocator {
            uv: uv.to_vec(),
            triangles: triangles.to_vec(),
            tree: RTree::bulk_load(entries),
            diagonal: (max - min).norm().max(f64::MIN_POSITIVE),
        }
    }

    /// Barycentric coordinates of `p` in triangle `t`; exact unit vectors
    /// when `p` is one of the corners.
    pub fn barycentric(&self, t: usize, p: &Point2<f64>) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.uv[v]);
        for (k, q) in [a, b, c].iter().enumerate() {
            if q == p {
                let mut e = [0.0; 3];
                e[k] = 1.0;
                return e;
            }
        }
        let area = cross(&a, &b, &c);
        [cross(p, &b, &c) / area, cross(&a, p, &c) / area, cross(&a, &b, p) / area]
    }

    fn distance(&self, t: usize, p: &Point2<f64>) -> (f64, [f64; 3]) {
        let lam = self.barycentric(t, p);
        if lam.iter().all(|&l| l >= 0.0) {
            return (0.0, lam);
        }
        let tri = self.triangles[t];
        let mut best = (f64::INFINITY, [0.0; 3]);
        for k in 0..3 {
            let (a, b) = (self.uv[tri[k]], self.uv[tri[(k + 1) % 3]]);
            let (s, d) = closest_on_segment(p, &a, &b);
            if d < best.0 {
                let mut bary = [0.0; 3];
                bary[k] = 1.0 - s;
                bary[(k + 1) % 3] = s;
                best = (d, bary);
            }
        }
        best
    }

    /// Triangles whose bounding box comes within `r` of `p`.
    fn candidates(&self, p: &Point2<f64>, r: f64) -> impl Iterator<Item = usize> + '_ {
        let env = AABB::from_corners([p.x - r, p.y - r], [p.x + r, p.y + r]);
        self.tree.locate_in_envelope_intersecting(env).map(|e| e.data)
    }

    /// Triangle containing `p` with barycentric coordinates clamped onto it.
    /// Among containing triangles the one with the largest minimum
    /// coordinate wins, then the lowest index. Points outside the domain by
    /// more than the tolerance return `None`.
    pub fn locate(&self, p: &Point2<f64>) -> Option<(usize, [f64; 3])> {
        if !p.x.is_finite() || !p.y.is_finite() {
            return None;
        }
        let reach = LOCATE_TOLERANCE * self.diagonal;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for t in self.candidates(p, reach) {
            let lam = self.barycentric(t, p);
            let m = lam[0].min(lam[1]).min(lam[2]);
            if best.as_ref().is_none_or(|b| m > b.2 || (m == b.2 && t < b.0)) {
                best = Some((t, lam, m));
            }
        }
        let (t, lam, m) = best?;
        if m >= 0.0 {
            return Some((t, lam));
        }
        if m >= -LOCATE_TOLERANCE {
            let c = lam.map(|l| l.max(0.0));
            let s = c[0] + c[1] + c[2];
            return Some((t, c.map(|l| l / s)));
        }
        let mut near: Option<(usize, f64, [f64; 3])> = None;
        for t in self.candidates(p, reach) {
            let (d, bary) = self.distance(t, p);
            if near.as_ref().is_none_or(|b| d < b.1 || (d == b.1 && t < b.0)) {
                near = Some((t, d, bary));
            }
        }
        near.filter(|n| n.1 <= reach).map(|(t, _, bary)| (t, bary))
    }

    /// Nearest triangle to `p`; ties go to the lowest index.
    pub fn nearest(&self, p: &Point2<f64>) -> (usize, [f64; 3]) {
        if let Some(hit) = self.locate(p) {
            return hit;
        }
        let mut best: Option<(usize, f64, [f64; 3])> = None;
        for (e, box_d2) in self.tree.nearest_neighbor_iter_with_distance_2([p.x, p.y]) {
            if best.as_ref().is_some_and(|b| box_d2 > b.1 * b.1) {
                break;
            }
            let t = e.data;
            let (d, bary) = self.distance(t, p);
            if best.as_ref().is_none_or(|b| d < b.1 || (d == b.1 && t < b.0)) {
                best = Some((t, d, bary));
            }
        }
        let (t, _, bary) = best.expect("locator without triangles");
        (t, bary)
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }
}
