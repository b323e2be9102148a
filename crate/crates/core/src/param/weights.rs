//! Edge coefficients of the difference scheme
//! `sum_j w_ij (u_i - u_j) = 0`.

use std::f64::consts::PI;

use nalgebra::Point3;

use crate::error::{Error, Result};

/// Angles are clamped into `[ANGLE_EPS, PI - ANGLE_EPS]`.
pub const ANGLE_EPS: f64 = 1e-12;

/// Clamps a triangle angle into the open interval, warning when clamping
/// was needed. Angles outside `[0, PI]` are rejected.
pub fn clamp_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
        return Err(Error::Degenerate(format!("triangle angle {theta} outside (0, pi)")));
    }
    if theta < ANGLE_EPS || theta > PI - ANGLE_EPS {
        log::warn!("clamping near-degenerate triangle angle {theta:e}");
        return Ok(theta.clamp(ANGLE_EPS, PI - ANGLE_EPS));
    }
    Ok(theta)
}

/// Interior angle at `apex` between the edges towards `a` and `b`.
pub fn corner_angle(apex: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let u = a - apex;
    let v = b - apex;
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Mean value coordinate weight of the directed edge `i -> j`:
/// `(tan(theta_k / 2) + tan(theta_l / 2)) / l_ij`, where the angles sit at
/// vertex `i` on either side of the edge. Boundary edges have one angle.
pub fn mvc_weight(theta_k: f64, theta_l: Option<f64>, length: f64) -> Result<f64> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::Degenerate(format!("edge length {length}")));
    }
    let mut sum = (clamp_angle(theta_k)? / 2.0).tan();
    if let Some(t) = theta_l {
        sum += (clamp_angle(t)? / 2.0).tan();
    }
    Ok(sum / length)
}

/// Cotangent (linear finite element) weight of edge `i - j`:
/// `(cot(theta_k) + cot(theta_l)) / 2` with the angles opposite the edge.
/// Negative for obtuse configurations.
pub fn fem_weight(theta_k: f64, theta_l: Option<f64>) -> Result<f64> {
    let cot = |t: f64| -> Result<f64> {
        if !t.is_finite() || t <= 0.0 || t >= PI {
            return Err(Error::Degenerate(format!("triangle angle {t} outside (0, pi)")));
        }
        Ok(t.cos() / t.sin())
    };
    let mut w = cot(theta_k)?;
    if let Some(t) = theta_l {
        w += cot(t)?;
    }
    Ok(0.5 * w)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn mvc_equilateral() {
        let t = PI / 3.0;
        let w = mvc_weight(t, Some(t), 2.0).unwrap();
        assert!((w - (2.0 / 3f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn mvc_structured_coefficients() {
        let h = 0.1;
        let axis = mvc_weight(PI / 4.0, Some(PI / 2.0), h).unwrap();
        assert!((axis - 2f64.sqrt() / h).abs() < 1e-12);
        let diag = mvc_weight(PI / 4.0, Some(PI / 4.0), 2f64.sqrt() * h).unwrap();
        assert!((diag - (2.0 - 2f64.sqrt()) / h).abs() < 1e-12);
    }

    #[test]
    fn fem_values() {
        assert!((fem_weight(PI / 4.0, Some(PI / 4.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(fem_weight(PI / 2.0, Some(PI / 2.0)).unwrap().abs() < 1e-15);
        let obtuse = fem_weight(2.0 * PI / 3.0, Some(2.0 * PI / 3.0)).unwrap();
        assert!((obtuse + 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!(fem_weight(0.0, None).is_err());
        assert!(fem_weight(PI, None).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mvc_weight(1.0, None, 0.0).is_err());
        assert!(mvc_weight(-0.1, None, 1.0).is_err());
        assert!(mvc_weight(4.0, None, 1.0).is_err());
        assert!(mvc_weight(f64::NAN, None, 1.0).is_err());
        // near-degenerate angles clamp instead of failing
        assert!(mvc_weight(0.0, None, 1.0).unwrap() > 0.0);
        assert!(mvc_weight(PI, None, 1.0).unwrap().is_finite());
    }

    #[test]
    fn corner_angle_right() {
        let o = Point3::origin();
        let a = Point3::new(2.0, 0.0, 0.0);
        let b = Point3::new(0.0, 3.0, 0.0);
        assert!((corner_angle(&o, &a, &b) - PI / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn mvc_is_positive(tk in 1e-9f64..PI - 1e-9, tl in 1e-9f64..PI - 1e-9, l in 1e-6f64..1e6) {
            prop_assert!(mvc_weight(tk, Some(tl), l).unwrap() > 0.0);
            prop_assert!(mvc_weight(tk, None, l).unwrap() > 0.0);
        }
    }
}
