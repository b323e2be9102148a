//! Jacobian, singular values and metric tensor of piecewise linear maps
//! from the parameter plane to the surface.

use nalgebra::{Matrix2, Matrix3x2, Point2, Point3};
use serde::Serialize;

use crate::atlas::Patch;
use crate::error::{Error, Result};

/// Relative tolerance below which `sigma2` counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;
pub const HISTOGRAM_BINS: usize = 10;

/// Constant Jacobian of the affine map sending the UV triangle onto the 3D
/// triangle (columns are the partial derivatives in u and v).
pub fn triangle_jacobian(tri3d: &[Point3<f64>; 3], tri_uv: &[Point2<f64>; 3]) -> Result<Matrix3x2<f64>> {
    let e = Matrix3x2::from_columns(&[tri3d[1] - tri3d[0], tri3d[2] - tri3d[0]]);
    let d = Matrix2::from_columns(&[tri_uv[1] - tri_uv[0], tri_uv[2] - tri_uv[0]]);
    let det = d.determinant();
    let scale = (tri_uv[1] - tri_uv[0]).norm_squared().max((tri_uv[2] - tri_uv[0]).norm_squared());
    if !det.is_finite() || det.abs() <= 1e-300 || det.abs() <= 1e-15 * scale {
        return Err(Error::Degenerate("UV triangle has no area".into()));
    }
    let inv = Matrix2::new(d[(1, 1)], -d[(0, 1)], -d[(1, 0)], d[(0, 0)]) / det;
    Ok(e * inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularValues {
    pub sigma1: f64,
    pub sigma2: f64,
    /// `sigma2` is zero up to `RANK_TOLERANCE`
    pub rank_deficient: bool,
}

impl SingularValues {
    pub fn conformity(&self) -> f64 {
        if self.sigma1 > 0.0 {
            self.sigma2 / self.sigma1
        } else {
            0.0
        }
    }
}

/// Eigenvalues of a symmetric 2x2 matrix `[[a, b], [b, c]]`, descending.
pub fn symmetric_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let r = (0.5 * (a - c)).hypot(b);
    (mean + r, mean - r)
}

/// Singular values from the eigenvalues of the Gram matrix `J^T J`.
pub fn singular_values(j: &Matrix3x2<f64>) -> SingularValues {
    let g = j.transpose() * j;
    let (l1, l2) = symmetric_eigenvalues(g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    let sigma1 = l1.max(0.0).sqrt();
    // sigma1 sigma2 = |J_u x J_v|, free of the cancellation in l2
    let area = j.column(0).cross(&j.column(1)).norm();
    let sigma2 = if sigma1 > 0.0 { (area / sigma1).min(sigma1) } else { l2.max(0.0).sqrt() };
    SingularValues {
        sigma1,
        sigma2,
        rank_deficient: sigma2 <= RANK_TOLERANCE * sigma1,
    }
}

/// `M = J^T J / h^2`: unit length under `M` is length `h` on the surface.
pub fn metric_tensor(j: &Matrix3x2<f64>, h: f64) -> Result<Matrix2<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("target size {h}")));
    }
    if singular_values(j).rank_deficient {
        return Err(Error::Degenerate("rank-deficient Jacobian".into()));
    }
    Ok(j.transpose() * j / (h * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleQuality {
    pub sigma1: f64,
    pub sigma2: f64,
    pub conformity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    pub triangles: Vec<TriangleQuality>,
    pub min_conformity: f64,
    pub max_conformity: f64,
    pub mean_conformity: f64,
    /// conformity counts over ten equal bins of `[0, 1]`
    pub histogram: [usize; HISTOGRAM_BINS],
}

impl QualityReport {
    pub fn from_triangles(triangles: Vec<TriangleQuality>) -> Self {
        let mut histogram = [0; HISTOGRAM_BINS];
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for q in &triangles {
            min = min.min(q.conformity);
            max = max.max(q.conformity);
            sum += q.conformity;
            let bin = ((q.conformity * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            histogram[bin] += 1;
        }
        let mean = if triangles.is_empty() { 0.0 } else { sum / triangles.len() as f64 };
        QualityReport {
            triangles,
            min_conformity: min,
            max_conformity: max,
            mean_conformity: mean,
            histogram,
        }
    }
}

/// Per-triangle singular values of the map from `uv` onto the patch.
pub fn quality_report(patch: &Patch, uv: &[Point2<f64>]) -> Result<QualityReport> {
    let triangles = (0..patch.num_triangles())
        .map(|t| {
            let tri_uv = patch.mesh.triangles[t].map(|v| uv[v]);
            let j = triangle_jacobian(&patch.mesh.corners(t), &tri_uv)?;
            let s = singular_values(&j);
            Ok(TriangleQuality {
                sigma1: s.sigma1,
                sigma2: s.sigma2,
                conformity: s.conformity(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QualityReport::from_triangles(triangles))
}

#[cfg(test)]
mod tests {
    use nalgebra::{Rotation2, Rotation3, Vector3};
    use proptest::prelude::*;

    use super::*;

    fn uv(p: [(f64, f64); 3]) -> [Point2<f64>; 3] {
        p.map(|(x, y)| Point2::new(x, y))
    }

    /// Singular values by brute force: extreme stretch over sampled directions.
    fn brute_svd(j: &Matrix3x2<f64>) -> (f64, f64) {
        let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
        let n = 200_000;
        for k in 0..n {
            let a = std::f64::consts::PI * k as f64 / n as f64;
            let s = (j * nalgebra::Vector2::new(a.cos(), a.sin())).norm();
            hi = hi.max(s);
            lo = lo.min(s);
        }
        (hi, lo)
    }

    #[test]
    fn identity_map() {
        let p = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        let j = triangle_jacobian(&p, &uv([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])).unwrap();
        assert!((j - Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)).norm() < 1e-15);
        let s = singular_values(&j);
        assert_eq!((s.sigma1, s.sigma2), (1.0, 1.0));
        assert_eq!(metric_tensor(&j, 1.0).unwrap(), Matrix2::identity());
        assert!((metric_tensor(&j, 0.5).unwrap() - 4.0 * Matrix2::<f64>::identity()).norm() < 1e-14);
    }

    #[test]
    fn uniform_scaling() {
        let p = [Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0), Point3::new(0.0, 2.0, 0.0)];
        let s = singular_values(&triangle_jacobian(&p, &uv([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])).unwrap());
        assert!((s.sigma1 - 2.0).abs() < 1e-15 && (s.sigma2 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sheared_triangle_against_brute_force() {
        let p = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        let j = triangle_jacobian(&p, &uv([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])).unwrap();
        let s = singular_values(&j);
        let (b1, b2) = brute_svd(&j);
        assert!((s.sigma1 - b1).abs() < 1e-9);
        assert!((s.sigma2 - b2).abs() < 1e-9);
        assert!((s.sigma1 * s.sigma2 - 1.0).abs() < 1e-14);
        // closed form of this shear: golden ratio and its inverse
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        assert!((s.sigma1 - phi).abs() < 1e-14);
        assert!((s.conformity() - 0.5 * (3.0 - 5f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn rank_one_flagged() {
        let j = Matrix3x2::new(1.0, 2.0, 2.0, 4.0, 0.0, 0.0);
        let s = singular_values(&j);
        assert!(s.rank_deficient);
        assert_eq!(s.sigma2, 0.0);
        assert!(metric_tensor(&j, 1.0).is_err());
    }

    #[test]
    fn degenerate_uv_rejected() {
        let p = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        assert!(triangle_jacobian(&p, &uv([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])).is_err());
    }

    fn arb_triangle() -> impl Strategy<Value = ([Point3<f64>; 3], [Point2<f64>; 3])> {
        (prop::array::uniform9(-2.0f64..2.0), prop::array::uniform6(-2.0f64..2.0)).prop_filter_map(
            "non-degenerate",
            |(a, b)| {
                let p = [
                    Point3::new(a[0], a[1], a[2]),
                    Point3::new(a[3], a[4], a[5]),
                    Point3::new(a[6], a[7], a[8]),
                ];
                let q = [Point2::new(b[0], b[1]), Point2::new(b[2], b[3]), Point2::new(b[4], b[5])];
                let area3 = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
                let area2 = 0.5 * (q[1] - q[0]).perp(&(q[2] - q[0]));
                (area3 > 1e-2 && area2.abs() > 1e-2).then_some((p, q))
            },
        )
    }

    proptest! {
        #[test]
        fn areal_factor_identity((p, q) in arb_triangle()) {
            let s = singular_values(&triangle_jacobian(&p, &q).unwrap());
            let area3 = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
            let area2 = (0.5 * (q[1] - q[0]).perp(&(q[2] - q[0]))).abs();
            prop_assert!(s.sigma1 >= s.sigma2);
            prop_assert!((s.sigma1 * s.sigma2 - area3 / area2).abs() <= 1e-10 * area3 / area2);
        }

        #[test]
        fn metric_eigenvalues((p, q) in arb_triangle(), h in 0.01f64..10.0) {
            let j = triangle_jacobian(&p, &q).unwrap();
            let s = singular_values(&j);
            let m = metric_tensor(&j, h).unwrap();
            let e = m.symmetric_eigen().eigenvalues;
            let (hi, lo) = (e.max(), e.min());
            let (w1, w2) = ((s.sigma1 / h).powi(2), (s.sigma2 / h).powi(2));
            prop_assert!((hi - w1).abs() <= 1e-10 * w1);
            prop_assert!((lo - w2).abs() <= 1e-10 * w1.max(w2) );
        }

        #[test]
        fn conformity_invariant_under_motions((p, q) in arb_triangle(), a in 0.0f64..6.3, b in 0.0f64..6.3, t in -5.0f64..5.0) {
            let c0 = singular_values(&triangle_jacobian(&p, &q).unwrap()).conformity();
            let r3 = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(1.0, 2.0, 3.0)), a);
            let shift = Vector3::new(t, -t, 2.0 * t);
            let p2 = p.map(|x| r3 * x + shift);
            let r2 = Rotation2::new(b);
            let q2 = q.map(|x| r2 * x);
            let c1 = singular_values(&triangle_jacobian(&p2, &q2).unwrap()).conformity();
            prop_assert!((c0 - c1).abs() < 1e-9);
        }
    }
}
