//! Discrete parametrization of disk-like patches onto the unit disk.

mod assemble;
mod boundary;
mod solver;
pub mod weights;

use nalgebra::Point2;
use serde::Serialize;

pub use assemble::{
    assemble_system, mesh_weights, scheme_residual, DirectedWeight, HoleInfo, HolePolicy, HoleTreatment, LinearSystem, Scheme,
    SchemeWeights,
};
pub use boundary::{apply_boundary, outer_loop_index, BoundaryMap};
pub use solver::{bicgstab, solve_system, Solution, SolverMethod};
pub use weights::{clamp_angle, corner_angle, fem_weight, mvc_weight};

use crate::atlas::Patch;
use crate::error::Result;

pub const DEFAULT_HOLE_THRESHOLD: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamOptions {
    pub scheme: Scheme,
    pub hole_policy: HolePolicy,
    pub hole_threshold: usize,
}

impl Default for ParamOptions {
    fn default() -> Self {
        ParamOptions {
            scheme: Scheme::Mvc,
            hole_policy: HolePolicy::Auto,
            hole_threshold: DEFAULT_HOLE_THRESHOLD,
        }
    }
}

/// Per-vertex parametric coordinates of a patch.
#[derive(Debug, Clone)]
pub struct Parametrization {
    pub scheme: Scheme,
    /// indexed by local patch vertex
    pub uv: Vec<Point2<f64>>,
    /// UV positions of the pseudo-center unknowns, one per filled hole
    pub pseudo_centers: Vec<Point2<f64>>,
    pub signed_areas: Vec<f64>,
    pub injective: bool,
    /// every vertex off the outer loop lies strictly inside the unit disk
    pub interior_inside_disk: bool,
    pub residual: f64,
    pub method: SolverMethod,
    pub outer_loop: usize,
    pub holes: Vec<HoleInfo>,
}

impl Parametrization {
    pub fn min_area(&self) -> f64 {
        self.signed_areas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn total_area(&self) -> f64 {
        self.signed_areas.iter().sum()
    }

    /// UV corners of local triangle `t` of `patch`.
    pub fn triangle_uv(&self, patch: &Patch, t: usize) -> [Point2<f64>; 3] {
        patch.mesh.triangles[t].map(|v| self.uv[v])
    }

    /// Width over height of the UV bounding box, at least 1.
    pub fn aspect_ratio(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.uv {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
        let (a, b) = (w.max(h), w.min(h));
        if b > 0.0 {
            a / b
        } else {
            f64::INFINITY
        }
    }
}

pub fn signed_area(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
}

#[derive(Debug, Clone, Serialize)]
pub struct InjectivityReport {
    /// triangles with signed UV area <= 0
    pub inverted: Vec<usize>,
    pub min_area: f64,
}

impl InjectivityReport {
    pub fn injective(&self) -> bool {
        self.inverted.is_empty()
    }
}

/// Lists the triangles whose UV image has non-positive signed area.
pub fn check_injectivity(patch: &Patch, uv: &[Point2<f64>]) -> InjectivityReport {
    let mut inverted = Vec::new();
    let mut min_area = f64::INFINITY;
    for (t, tri) in patch.mesh.triangles.iter().enumerate() {
        let a = signed_area(&uv[tri[0]], &uv[tri[1]], &uv[tri[2]]);
        min_area = min_area.min(a);
        if !(a > 0.0) {
            inverted.push(t);
        }
    }
    InjectivityReport { inverted, min_area }
}

/// Solves an assembled system and packages the result.
pub fn solve(patch: &Patch, weights: &SchemeWeights, system: &LinearSystem) -> Result<Parametrization> {
    let solution = solve_system(system)?;
    let nodes = system.scatter(&solution.values);
    let nv = patch.mesh.num_vertices();
    let uv: Vec<Point2<f64>> = nodes[..nv].iter().map(|p| Point2::new(p[0], p[1])).collect();
    let pseudo_centers = nodes[nv..].iter().map(|p| Point2::new(p[0], p[1])).collect();
    let report = check_injectivity(patch, &uv);
    let signed_areas = patch
        .mesh
        .triangles
        .iter()
        .map(|t| signed_area(&uv[t[0]], &uv[t[1]], &uv[t[2]]))
        .collect();
    let interior_inside_disk = (0..nv)
        .filter(|&v| system.fixed[v].is_none())
        .all(|v| uv[v].coords.norm_squared() < 1.0);
    Ok(Parametrization {
        scheme: weights.scheme,
        uv,
        pseudo_centers,
        signed_areas,
        injective: report.injective(),
        interior_inside_disk,
        residual: solution.residual,
        method: solution.method,
        outer_loop: weights.outer_loop,
        holes: weights.holes.clone(),
    })
}

/// Boundary map, assembly, solve and injectivity check in one call. A
/// non-injective result is returned with `injective == false` so callers
/// can decide to split the patch.
pub fn parametrize(patch: &Patch, options: &ParamOptions) -> Result<Parametrization> {
    let (weights, system) = assemble_system(patch, options.scheme, options.hole_policy, options.hole_threshold)?;
    solve(patch, &weights, &system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn hexagon_center_at_origin() {
        let patch = Patch::from_mesh(fixtures::hexagon_fan()).unwrap();
        let p = parametrize(&patch, &ParamOptions::default()).unwrap();
        assert!(p.uv[0].coords.norm() < 1e-15);
        assert!(p.injective);
        assert!(p.residual < 1e-15);
        for v in 1..7 {
            assert!((p.uv[v].coords.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flipped_triangle_listed() {
        let patch = Patch::from_mesh(fixtures::hexagon_fan()).unwrap();
        let mut p = parametrize(&patch, &ParamOptions::default()).unwrap();
        // push the center beyond the first boundary edge
        p.uv[0] = Point2::new(2.0, 0.3);
        let r = check_injectivity(&patch, &p.uv);
        assert!(!r.injective());
        assert!(r.inverted.contains(&0));
    }

    #[test]
    fn cylinder_shell_injective_but_poor() {
        let patch = Patch::from_mesh(fixtures::cylinder_shell(12, 1.0, 1.0)).unwrap();
        let p = parametrize(&patch, &ParamOptions::default()).unwrap();
        assert!(p.injective);
    }

    #[test]
    fn pseudo_center_inside_hole() {
        let patch = Patch::from_mesh(fixtures::square_frame(1.0, 0.25)).unwrap();
        let p = parametrize(&patch, &ParamOptions::default()).unwrap();
        assert!(p.injective);
        assert_eq!(p.pseudo_centers.len(), 1);
        // by symmetry the center maps to the origin
        assert!(p.pseudo_centers[0].coords.norm() < 1e-12);
    }
}
