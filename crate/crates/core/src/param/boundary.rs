use std::f64::consts::PI;

use nalgebra::Point2;

use crate::atlas::Patch;
use crate::error::{Error, Result};

/// Dirichlet data for the outer loop.
#[derive(Debug, Clone)]
pub struct BoundaryMap {
    pub outer_loop: usize,
    /// `(local vertex, uv)` in loop order
    pub assignments: Vec<(usize, Point2<f64>)>,
}

/// Index of the boundary loop with the largest 3D perimeter (first on ties).
pub fn outer_loop_index(patch: &Patch) -> Result<usize> {
    if patch.loops.is_empty() {
        return Err(Error::NoBoundary);
    }
    let mut best = 0;
    let mut best_len = patch.loop_perimeter(0);
    for l in 1..patch.loops.len() {
        let len = patch.loop_perimeter(l);
        if len > best_len {
            best = l;
            best_len = len;
        }
    }
    Ok(best)
}

/// Places the outer loop on the unit circle, angles proportional to the
/// cumulative 3D arc length, the first loop vertex at angle 0.
pub fn apply_boundary(patch: &Patch) -> Result<BoundaryMap> {
    let outer = outer_loop_index(patch)?;
    let lp = &patch.loops[outer];
    if lp.len() < 3 {
        return Err(Error::Degenerate(format!("outer loop has {} vertices", lp.len())));
    }
    let n = lp.len();
    let mut cumulative = Vec::with_capacity(n);
    let mut s = 0.0;
    for j in 0..n {
        cumulative.push(s);
        s += patch.mesh.edge_length(lp[j], lp[(j + 1) % n]);
    }
    if !(s > 0.0) {
        return Err(Error::Degenerate("outer loop has zero length".into()));
    }
    let assignments = lp
        .iter()
        .zip(cumulative)
        .map(|(&v, c)| {
            let a = 2.0 * PI * c / s;
            (v, Point2::new(a.cos(), a.sin()))
        })
        .collect();
    Ok(BoundaryMap {
        outer_loop: outer,
        assignments,
    })
}
