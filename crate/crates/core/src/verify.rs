//! Laplace convergence experiments with the parametrization schemes on
//! meshes of the unit square.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{Point3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spade::{DelaunayTriangulation, Triangulation as _};

use crate::error::{Error, Result};
use crate::mesh::{Adjacency, Triangulation};
use crate::param::{mesh_weights, scheme_residual, solve_system, DirectedWeight, LinearSystem, Scheme};

pub const DEFAULT_LEVELS: [usize; 5] = [8, 16, 32, 64, 128];
pub const DEFAULT_SEED: u64 = 42;
/// Interior points of the Delaunay family move by up to this fraction of
/// the grid spacing in each direction.
pub const JITTER: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamily {
    Structured,
    Delaunay,
}

impl FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "structured" => Ok(MeshFamily::Structured),
            "delaunay" => Ok(MeshFamily::Delaunay),
            _ => Err(Error::InvalidArgument(format!("unknown mesh family '{s}'"))),
        }
    }
}

impl std::fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeshFamily::Structured => "structured",
            MeshFamily::Delaunay => "delaunay",
        })
    }
}

/// `sin(2 pi x) cosh(2 pi y)`, harmonic on the plane.
pub fn manufactured_solution(x: f64, y: f64) -> f64 {
    (2.0 * PI * x).sin() * (2.0 * PI * y).cosh()
}

pub fn manufactured_gradient(x: f64, y: f64) -> Vector2<f64> {
    let (a, b) = (2.0 * PI * x, 2.0 * PI * y);
    2.0 * PI * Vector2::new(a.cos() * b.cosh(), a.sin() * b.sinh())
}

/// Index of grid node `(i, j)` in a structured mesh of resolution `n`.
pub fn grid_vertex(n: usize, i: usize, j: usize) -> usize {
    j * (n + 1) + i
}

fn structured_square(n: usize) -> Result<Triangulation> {
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point3::new(i as f64 * h, j as f64 * h, 0.0));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = grid_vertex(n, i, j);
            let b = grid_vertex(n, i + 1, j);
            let c = grid_vertex(n, i + 1, j + 1);
            let d = grid_vertex(n, i, j + 1);
            // every cell is cut along the same (b, d) diagonal
            triangles.push([a, b, d]);
            triangles.push([b, c, d]);
        }
    }
    Triangulation::new(vertices, triangles)
}

fn delaunay_square(n: usize, seed: u64) -> Result<Triangulation> {
    delaunay_square_with(n, seed, JITTER)
}

pub(crate) fn delaunay_square_with(n: usize, seed: u64, jitter: f64) -> Result<Triangulation> {
    let h = 1.0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).rotate_left(32));
    let mut points = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let (mut x, mut y) = (i as f64 * h, j as f64 * h);
            if i > 0 && i < n && j > 0 && j < n {
                x += jitter * h * rng.random_range(-1.0..1.0);
                y += jitter * h * rng.random_range(-1.0..1.0);
            }
            points.push(spade::Point2::new(x, y));
        }
    }
    let dt = DelaunayTriangulation::<spade::Point2<f64>>::bulk_load_stable(points.clone())
        .map_err(|e| Error::Degenerate(format!("Delaunay insertion failed: {e:?}")))?;
    let mut triangles: Vec<[usize; 3]> = dt.inner_faces().map(|f| f.vertices().map(|v| v.fix().index())).collect();
    triangles.sort_unstable();
    let vertices = points.iter().map(|p| Point3::new(p.x, p.y, 0.0)).collect();
    // drop slivers spanning collinear boundary points
    let mesh = Triangulation::new(vertices, triangles)?;
    let keep: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&t| mesh.triangle_area(t) > 1e-14 * h * h)
        .collect();
    let mut out = mesh.clone();
    out.triangles = keep.iter().map(|&t| mesh.triangles[t]).collect();
    Ok(out)
}

/// Unit-square mesh with `n` intervals per side. The structured family cuts
/// every grid cell along the same diagonal; the Delaunay family
/// triangulates the boundary grid points and seeded, jittered interior
/// grid points.
pub fn build_square_mesh(kind: MeshFamily, n: usize, seed: u64) -> Result<Triangulation> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("resolution {n} below 2")));
    }
    match kind {
        MeshFamily::Structured => structured_square(n),
        MeshFamily::Delaunay => delaunay_square(n, seed),
    }
}

/// Vertices on a boundary edge of the mesh.
pub fn boundary_vertices(mesh: &Triangulation) -> Vec<bool> {
    let adj = Adjacency::new(mesh.num_vertices(), &mesh.triangles);
    let mut on = vec![false; mesh.num_vertices()];
    for e in adj.edges.iter().filter(|e| e.is_boundary()) {
        on[e.vertices[0]] = true;
        on[e.vertices[1]] = true;
    }
    on
}

/// Solves the scheme with Dirichlet data `g` on every boundary vertex.
pub fn solve_dirichlet(mesh: &Triangulation, scheme: Scheme, g: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
    let weights = mesh_weights(mesh, scheme)?;
    let fixed = boundary_vertices(mesh)
        .into_iter()
        .zip(&mesh.vertices)
        .map(|(b, p)| b.then(|| [g(p.x, p.y), 0.0]))
        .collect();
    let sys = LinearSystem::from_weights(mesh.num_vertices(), &weights, fixed);
    let sol = solve_system(&sys)?;
    Ok(sys.scatter(&sol.values).into_iter().map(|v| v[0]).collect())
}

/// Discrete Laplace solution with the manufactured solution as boundary data.
pub fn solve_laplace(mesh: &Triangulation, scheme: Scheme) -> Result<Vec<f64>> {
    solve_dirichlet(mesh, scheme, manufactured_solution)
}

/// Row residuals of `values` under the scheme, zero on boundary vertices.
pub fn interior_residual(mesh: &Triangulation, weights: &[DirectedWeight], values: &[f64]) -> Vec<f64> {
    let mut r = scheme_residual(weights, values);
    for (v, b) in boundary_vertices(mesh).into_iter().enumerate() {
        if b {
            r[v] = 0.0;
        }
    }
    r
}

/// Largest relative difference between `w_ij` and `w_ji`.
pub fn weight_asymmetry(weights: &[DirectedWeight]) -> f64 {
    let lookup: std::collections::HashMap<(usize, usize), f64> =
        weights.iter().map(|w| ((w.from, w.to), w.weight)).collect();
    let scale = weights.iter().map(|w| w.weight.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    weights
        .iter()
        .filter_map(|w| lookup.get(&(w.to, w.from)).map(|&r| (w.weight - r).abs()))
        .fold(0.0, f64::max)
        / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2: f64,
    /// H1 seminorm
    pub h1: f64,
}

/// Errors of the piecewise linear field `values` against `f` with gradient
/// `grad`, integrated with the mid-edge rule on every triangle.
pub fn error_norms_with(
    mesh: &Triangulation,
    values: &[f64],
    f: impl Fn(f64, f64) -> f64,
    grad: impl Fn(f64, f64) -> Vector2<f64>,
) -> ErrorNorms {
    let (mut l2, mut h1) = (0.0, 0.0);
    for tri in &mesh.triangles {
        let p = tri.map(|v| mesh.vertices[v].xy());
        let u = tri.map(|v| values[v]);
        let (e1, e2) = (p[1] - p[0], p[2] - p[0]);
        let det = e1.perp(&e2);
        let area = 0.5 * det.abs();
        // gradient of the linear interpolant
        let du = Vector2::new(u[1] - u[0], u[2] - u[0]);
        let g = Vector2::new(e2.y * du.x - e1.y * du.y, -e2.x * du.x + e1.x * du.y) / det;
        for k in 0..3 {
            let m = nalgebra::center(&p[k], &p[(k + 1) % 3]);
            let um = 0.5 * (u[k] + u[(k + 1) % 3]);
            l2 += area / 3.0 * (um - f(m.x, m.y)).powi(2);
            h1 += area / 3.0 * (g - grad(m.x, m.y)).norm_squared();
        }
    }
    ErrorNorms {
        l2: l2.sqrt(),
        h1: h1.sqrt(),
    }
}

/// Errors against the manufactured solution.
pub fn error_norms(mesh: &Triangulation, values: &[f64]) -> ErrorNorms {
    error_norms_with(mesh, values, manufactured_solution, manufactured_gradient)
}

/// Least-squares slope of `log e` against `log h`.
pub fn fit_slope(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelError {
    pub n: usize,
    pub h: f64,
    pub l2: f64,
    pub h1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceResult {
    pub family: MeshFamily,
    pub scheme: Scheme,
    pub seed: u64,
    pub levels: Vec<LevelError>,
    pub l2_slope: f64,
    pub h1_slope: f64,
}

impl ConvergenceResult {
    /// `h,l2,h1` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,h,l2,h1\n");
        for l in &self.levels {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", l.n, l.h, l.l2, l.h1));
        }
        s
    }
}

/// Solves the manufactured problem on meshes of increasing resolution and
/// fits the convergence rates.
pub fn convergence_study(scheme: Scheme, family: MeshFamily, levels: &[usize], seed: u64) -> Result<ConvergenceResult> {
    use rayon::prelude::*;

    if levels.len() < 2 {
        return Err(Error::InvalidArgument("a convergence study needs at least two levels".into()));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != levels.len() {
        return Err(Error::InvalidArgument("repeated resolution".into()));
    }
    let results: Vec<LevelError> = sorted
        .par_iter()
        .map(|&n| {
            let mesh = build_square_mesh(family, n, seed)?;
            let u = solve_laplace(&mesh, scheme)?;
            let e = error_norms(&mesh, &u);
            Ok(LevelError {
                n,
                h: 1.0 / n as f64,
                l2: e.l2,
                h1: e.h1,
            })
        })
        .collect::<Result<_>>()?;
    let h: Vec<f64> = results.iter().map(|l| l.h).collect();
    let l2: Vec<f64> = results.iter().map(|l| l.l2).collect();
    let h1: Vec<f64> = results.iter().map(|l| l.h1).collect();
    Ok(ConvergenceResult {
        family,
        scheme,
        seed,
        l2_slope: fit_slope(&h, &l2),
        h1_slope: fit_slope(&h, &h1),
        levels: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{euler_check, validate};

    #[test]
    fn manufactured_values() {
        assert_eq!(manufactured_solution(0.0, 0.7), 0.0);
        assert!((manufactured_solution(0.25, 0.0) - 1.0).abs() < 1e-15);
        assert!((manufactured_solution(0.25, 1.0) - 267.7467614837482).abs() < 1e-9);
    }

    #[test]
    fn manufactured_is_harmonic() {
        let h = 1e-3;
        for &(x, y) in &[(0.1, 0.2), (0.6, 0.9), (0.33, 0.5)] {
            let lap = (manufactured_solution(x + h, y)
                + manufactured_solution(x - h, y)
                + manufactured_solution(x, y + h)
                + manufactured_solution(x, y - h)
                - 4.0 * manufactured_solution(x, y))
                / (h * h);
            assert!(lap.abs() < 1e-3 * manufactured_solution(x, y).abs().max(1.0));
            let fd = Vector2::new(
                manufactured_solution(x + h, y) - manufactured_solution(x - h, y),
                manufactured_solution(x, y + h) - manufactured_solution(x, y - h),
            ) / (2.0 * h);
            assert!((fd - manufactured_gradient(x, y)).norm() < 1e-4 * fd.norm());
        }
    }

    #[test]
    fn structured_shape() {
        let m = build_square_mesh(MeshFamily::Structured, 2, 0).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (9, 8));
        let m = build_square_mesh(MeshFamily::Structured, 6, 0).unwrap();
        let adj = Adjacency::new(m.num_vertices(), &m.triangles);
        let v = grid_vertex(6, 3, 2);
        assert_eq!(adj.vertex_neighbors(v, &m.triangles).len(), 6);
    }

    #[test]
    fn delaunay_deterministic_and_valid() {
        let a = build_square_mesh(MeshFamily::Delaunay, 8, 42).unwrap();
        let b = build_square_mesh(MeshFamily::Delaunay, 8, 42).unwrap();
        assert_eq!(a, b);
        let c = build_square_mesh(MeshFamily::Delaunay, 8, 43).unwrap();
        assert_ne!(a, c);
        assert!((a.total_area() - 1.0).abs() < 1e-12);
        assert!(validate(&a).orientation_consistent);
        let e = euler_check(&a).unwrap();
        assert_eq!((e.topology.g, e.topology.b), (0, 1));
        assert_eq!(a.num_vertices(), 81);
    }

    #[test]
    fn constant_and_linear_reproduced() {
        for family in [MeshFamily::Structured, MeshFamily::Delaunay] {
            let m = build_square_mesh(family, 6, 1).unwrap();
            for scheme in [Scheme::Mvc, Scheme::Fem] {
                let u = solve_dirichlet(&m, scheme, |_, _| 3.5).unwrap();
                assert!(u.iter().all(|v| (v - 3.5).abs() < 1e-12));
            }
            // linear precision of the FEM scheme
            let lin = |x: f64, y: f64| 2.0 * x - 0.5 * y + 1.0;
            let u = solve_dirichlet(&m, Scheme::Fem, lin).unwrap();
            let e = error_norms_with(&m, &u, lin, |_, _| Vector2::new(2.0, -0.5));
            assert!(e.l2 < 1e-12 && e.h1 < 1e-11);
        }
    }

    #[test]
    fn constant_offset_error() {
        let m = build_square_mesh(MeshFamily::Structured, 4, 0).unwrap();
        let u: Vec<f64> = m.vertices.iter().map(|p| p.x + p.y + 0.25).collect();
        let e = error_norms_with(&m, &u, |x, y| x + y, |_, _| Vector2::new(1.0, 1.0));
        assert!((e.l2 - 0.25).abs() < 1e-14);
        assert!(e.h1 < 1e-14);
    }

    #[test]
    fn fem_truncation_residual() {
        // five-point stencil on a harmonic function: -h^4 (f_xxxx + f_yyyy) / 12
        for n in [16, 32, 64] {
            let m = build_square_mesh(MeshFamily::Structured, n, 0).unwrap();
            let w = mesh_weights(&m, Scheme::Fem).unwrap();
            let exact: Vec<f64> = m.vertices.iter().map(|p| manufactured_solution(p.x, p.y)).collect();
            let r = interior_residual(&m, &w, &exact);
            let h = 1.0 / n as f64;
            let v = grid_vertex(n, n / 8, n / 2);
            let p = m.vertices[v];
            let predicted = -h.powi(4) / 6.0 * (2.0 * PI).powi(4) * manufactured_solution(p.x, p.y);
            assert!((r[v] - predicted).abs() < 20.0 * h * h * predicted.abs(), "n={n}: {} vs {predicted}", r[v]);
        }
    }

    #[test]
    fn mvc_structured_mixed_derivative_residual() {
        // exact-solution residual of the mean value stencil tends to
        // 2 (2 - sqrt 2) h f_xy at interior nodes
        let fxy = |x: f64, y: f64| 4.0 * PI * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).sinh();
        for n in [32, 64, 128] {
            let m = build_square_mesh(MeshFamily::Structured, n, 0).unwrap();
            let w = mesh_weights(&m, Scheme::Mvc).unwrap();
            let exact: Vec<f64> = m.vertices.iter().map(|p| manufactured_solution(p.x, p.y)).collect();
            let r = interior_residual(&m, &w, &exact);
            let h = 1.0 / n as f64;
            let v = grid_vertex(n, n / 8, n / 2);
            let p = m.vertices[v];
            let predicted = 2.0 * (2.0 - 2f64.sqrt()) * h * fxy(p.x, p.y);
            assert!((r[v] - predicted).abs() < 10.0 * h * predicted.abs(), "n={n}: {} vs {predicted}", r[v]);
        }
    }

    #[test]
    fn asymmetry() {
        let m = build_square_mesh(MeshFamily::Delaunay, 8, 3).unwrap();
        assert!(weight_asymmetry(&mesh_weights(&m, Scheme::Fem).unwrap()) < 1e-14);
        assert!(weight_asymmetry(&mesh_weights(&m, Scheme::Mvc).unwrap()) > 1e-3);
    }

    #[test]
    fn slope_of_power_law() {
        let h = [0.5, 0.25, 0.125];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((fit_slope(&h, &e) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn study_is_reproducible() {
        let a = convergence_study(Scheme::Mvc, MeshFamily::Delaunay, &[8, 16], 42).unwrap();
        let b = convergence_study(Scheme::Mvc, MeshFamily::Delaunay, &[8, 16], 42).unwrap();
        assert_eq!(a.l2_slope.to_bits(), b.l2_slope.to_bits());
        assert!(a.levels[0].h > a.levels[1].h);
    }
}
