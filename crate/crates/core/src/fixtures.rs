//! Procedural test surfaces.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Point2, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::Triangulation;
use crate::planar::{inside_loops, triangulate_domain};

fn build(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Triangulation {
    Triangulation::new(vertices, triangles).expect("fixture construction")
}

pub fn regular_tetrahedron() -> Triangulation {
    build(
        vec![
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(1.0, -1.0, -1.0),
            Point3::new(-1.0, 1.0, -1.0),
            Point3::new(-1.0, -1.0, 1.0),
        ],
        vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
    )
}

/// Unit cube `[0,1]^3`, every face an `n x n` grid of split squares.
pub fn cube(n: usize) -> Triangulation {
    assert!(n >= 1);
    let n = n as i64;
    // (origin, e1, e2) with e1 x e2 the outward normal
    let faces: [([i64; 3], [i64; 3], [i64; 3]); 6] = [
        ([0, 0, 0], [0, 1, 0], [1, 0, 0]),
        ([0, 0, 1], [1, 0, 0], [0, 1, 0]),
        ([0, 0, 0], [1, 0, 0], [0, 0, 1]),
        ([0, 1, 0], [0, 0, 1], [1, 0, 0]),
        ([0, 0, 0], [0, 0, 1], [0, 1, 0]),
        ([1, 0, 0], [0, 1, 0], [0, 0, 1]),
    ];
    let mut index: BTreeMap<[i64; 3], usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut id = |g: [i64; 3], vertices: &mut Vec<Point3<f64>>| -> usize {
        *index.entry(g).or_insert_with(|| {
            vertices.push(Point3::new(g[0] as f64, g[1] as f64, g[2] as f64) / n as f64);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::new();
    for (o, e1, e2) in faces {
        let at = |s: i64, t: i64| -> [i64; 3] { [0, 1, 2].map(|k| o[k] * n + s * e1[k] + t * e2[k]) };
        for s in 0..n {
            for t in 0..n {
                let a = id(at(s, t), &mut vertices);
                let b = id(at(s + 1, t), &mut vertices);
                let c = id(at(s + 1, t + 1), &mut vertices);
                let d = id(at(s, t + 1), &mut vertices);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
    }
    build(vertices, triangles)
}

/// Latitude-longitude sphere with poles.
pub fn uv_sphere(n_lon: usize, n_lat: usize, radius: f64) -> Triangulation {
    assert!(n_lon >= 3 && n_lat >= 2);
    let mut vertices = vec![Point3::new(0.0, 0.0, radius)];
    for i in 1..n_lat {
        let theta = PI * i as f64 / n_lat as f64;
        for j in 0..n_lon {
            let phi = 2.0 * PI * j as f64 / n_lon as f64;
            vertices.push(Point3::new(
                radius * theta.sin() * phi.cos(),
                radius * theta.sin() * phi.sin(),
                radius * theta.cos(),
            ));
        }
    }
    vertices.push(Point3::new(0.0, 0.0, -radius));
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * n_lon + j % n_lon;
    let mut triangles = Vec::new();
    for j in 0..n_lon {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..n_lat - 1 {
        for j in 0..n_lon {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    for j in 0..n_lon {
        triangles.push([south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)]);
    }
    build(vertices, triangles)
}

/// Ring torus around the z axis.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64) -> Triangulation {
    assert!(nu >= 3 && nv >= 3);
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let w = major + minor * v.cos();
            vertices.push(Point3::new(w * u.cos(), w * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + j % nv;
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    build(vertices, triangles)
}

/// Torus with the two triangles of one grid cell removed: genus 1, one
/// boundary loop.
pub fn torus_with_hole(nu: usize, nv: usize, major: f64, minor: f64) -> Triangulation {
    let mut t = torus(nu, nv, major, minor);
    t.triangles.drain(0..2);
    t
}

/// Polar grid of the unit disk: a center vertex and `rings` rings of
/// `sectors` vertices.
pub fn disk(rings: usize, sectors: usize) -> Triangulation {
    assert!(rings >= 1 && sectors >= 3);
    let mut vertices = vec![Point3::origin()];
    for k in 1..=rings {
        let r = k as f64 / rings as f64;
        for j in 0..sectors {
            let phi = 2.0 * PI * j as f64 / sectors as f64;
            vertices.push(Point3::new(r * phi.cos(), r * phi.sin(), 0.0));
        }
    }
    let ring = |k: usize, j: usize| 1 + (k - 1) * sectors + j % sectors;
    let mut triangles = Vec::new();
    for j in 0..sectors {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for k in 1..rings {
        for j in 0..sectors {
            let (a, b) = (ring(k, j), ring(k, j + 1));
            let (c, d) = (ring(k + 1, j + 1), ring(k + 1, j));
            triangles.push([a, d, c]);
            triangles.push([a, c, b]);
        }
    }
    build(vertices, triangles)
}

/// Planar annulus with `rings >= 2` concentric rings of `n_around` vertices,
/// from radius `inner` to `outer`.
pub fn annulus(n_around: usize, rings: usize, outer: f64, inner: f64) -> Triangulation {
    assert!(n_around >= 3 && rings >= 2 && outer > inner && inner > 0.0);
    let mut vertices = Vec::new();
    for k in 0..rings {
        let r = inner + (outer - inner) * k as f64 / (rings - 1) as f64;
        for j in 0..n_around {
            let phi = 2.0 * PI * j as f64 / n_around as f64;
            vertices.push(Point3::new(r * phi.cos(), r * phi.sin(), 0.0));
        }
    }
    let id = |k: usize, j: usize| k * n_around + j % n_around;
    let mut triangles = Vec::new();
    for k in 0..rings - 1 {
        for j in 0..n_around {
            let (a, b) = (id(k, j), id(k, j + 1));
            let (c, d) = (id(k + 1, j + 1), id(k + 1, j));
            triangles.push([a, d, c]);
            triangles.push([a, c, b]);
        }
    }
    build(vertices, triangles)
}

/// Regular hexagon of unit circumradius split into six equilateral triangles
/// around vertex 0.
pub fn hexagon_fan() -> Triangulation {
    let mut vertices = vec![Point3::origin()];
    for k in 0..6 {
        let phi = PI / 3.0 * k as f64;
        vertices.push(Point3::new(phi.cos(), phi.sin(), 0.0));
    }
    let triangles = (1..=6).map(|k| [0, k, k % 6 + 1]).collect();
    build(vertices, triangles)
}

/// Square of half-width `outer` with a centered square hole of half-width
/// `inner`; eight vertices, eight triangles, four-fold symmetric.
pub fn square_frame(outer: f64, inner: f64) -> Triangulation {
    assert!(outer > inner && inner > 0.0);
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let mut vertices: Vec<Point3<f64>> = corners.iter().map(|&(x, y)| Point3::new(outer * x, outer * y, 0.0)).collect();
    vertices.extend(corners.iter().map(|&(x, y)| Point3::new(inner * x, inner * y, 0.0)));
    let mut triangles = Vec::new();
    for k in 0..4 {
        let (a, b) = (k, (k + 1) % 4);
        let (c, d) = (4 + (k + 1) % 4, 4 + k);
        triangles.push([a, b, c]);
        triangles.push([a, c, d]);
    }
    build(vertices, triangles)
}

/// Lateral surface of a cylinder cut open along a seam (the seam vertices
/// are duplicated): two rings, no interior vertices, disk topology.
pub fn cylinder_shell(n_around: usize, radius: f64, height: f64) -> Triangulation {
    assert!(n_around >= 3);
    let mut vertices = Vec::new();
    for z in [0.0, height] {
        for j in 0..=n_around {
            let phi = 2.0 * PI * (j % n_around) as f64 / n_around as f64;
            vertices.push(Point3::new(radius * phi.cos(), radius * phi.sin(), z));
        }
    }
    let top = n_around + 1;
    let mut triangles = Vec::new();
    for j in 0..n_around {
        let (a, b, c, d) = (j, j + 1, top + j + 1, top + j);
        triangles.push([a, b, c]);
        triangles.push([a, c, d]);
    }
    build(vertices, triangles)
}

fn tube_parts(n_around: usize, n_along: usize, radius: f64, length: f64) -> (Vec<Point3<f64>>, Vec<[usize; 3]>) {
    let mut vertices = Vec::new();
    for k in 0..=n_along {
        let z = length * k as f64 / n_along as f64;
        for j in 0..n_around {
            let phi = 2.0 * PI * j as f64 / n_around as f64;
            vertices.push(Point3::new(radius * phi.cos(), radius * phi.sin(), z));
        }
    }
    let id = |k: usize, j: usize| k * n_around + j % n_around;
    let mut triangles = Vec::new();
    for k in 0..n_along {
        for j in 0..n_around {
            let (a, b, c, d) = (id(k, j), id(k, j + 1), id(k + 1, j + 1), id(k + 1, j));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    (vertices, triangles)
}

/// Open tube along z with `2 * n_around * n_along` triangles.
pub fn tube(n_around: usize, n_along: usize, radius: f64, length: f64) -> Triangulation {
    assert!(n_around >= 3 && n_along >= 1);
    let (v, t) = tube_parts(n_around, n_along, radius, length);
    build(v, t)
}

/// Closed cylinder: a tube with fan caps.
pub fn capped_cylinder(n_around: usize, n_along: usize, radius: f64, length: f64) -> Triangulation {
    assert!(n_around >= 3 && n_along >= 1);
    let (mut v, mut t) = tube_parts(n_around, n_along, radius, length);
    let last = n_along * n_around;
    let bottom = v.len();
    v.push(Point3::new(0.0, 0.0, 0.0));
    let top = v.len();
    v.push(Point3::new(0.0, 0.0, length));
    for j in 0..n_around {
        let j1 = (j + 1) % n_around;
        t.push([bottom, j1, j]);
        t.push([top, last + j, last + j1]);
    }
    build(v, t)
}

fn segment_distance(p: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    let ab = b - a;
    let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

fn loop_distance(p: &Point2<f64>, loops: &[Vec<Point2<f64>>]) -> f64 {
    let mut d = f64::INFINITY;
    for lp in loops {
        for i in 0..lp.len() {
            d = d.min(segment_distance(p, &lp[i], &lp[(i + 1) % lp.len()]));
        }
    }
    d
}

/// Inserts points along every edge so no piece exceeds `spacing`.
fn resample(polygon: &[Point2<f64>], spacing: f64) -> Vec<Point2<f64>> {
    let mut out = Vec::new();
    for i in 0..polygon.len() {
        let (a, b) = (polygon[i], polygon[(i + 1) % polygon.len()]);
        let k = ((b - a).norm() / spacing).ceil().max(1.0) as usize;
        for s in 0..k {
            out.push(a + (b - a) * (s as f64 / k as f64));
        }
    }
    out
}

/// Triangulates a planar domain with a jittered interior grid of the given
/// spacing and lifts it through `height`.
fn planar_patch(
    loops: Vec<Vec<Point2<f64>>>,
    spacing: f64,
    jitter: f64,
    rng: &mut ChaCha8Rng,
    height: impl Fn(f64, f64) -> f64,
) -> Triangulation {
    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in loops.iter().flatten() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let nx = ((hi.x - lo.x) / spacing).ceil() as usize;
    let ny = ((hi.y - lo.y) / spacing).ceil() as usize;
    let mut free = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            let dx = jitter * spacing * (rng.random::<f64>() - 0.5);
            let dy = jitter * spacing * (rng.random::<f64>() - 0.5);
            let p = Point2::new(lo.x + i as f64 * spacing + dx, lo.y + j as f64 * spacing + dy);
            if inside_loops(&p, &loops) && loop_distance(&p, &loops) > 0.5 * spacing {
                free.push(p);
            }
        }
    }
    let m = triangulate_domain(&loops, &free).expect("fixture domain");
    let vertices = m.points.iter().map(|p| Point3::new(p.x, p.y, height(p.x, p.y))).collect();
    build(vertices, m.triangles)
}

/// Star-shaped polygon around `center` with radii drawn from `[r_min, r_max]`,
/// listed counter-clockwise (or clockwise when `clockwise`).
fn star_polygon(
    rng: &mut ChaCha8Rng,
    center: Point2<f64>,
    n: usize,
    r_min: f64,
    r_max: f64,
    clockwise: bool,
) -> Vec<Point2<f64>> {
    let mut pts: Vec<Point2<f64>> = (0..n)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n as f64;
            let r = rng.random_range(r_min..=r_max);
            center + nalgebra::Vector2::new(r * phi.cos(), r * phi.sin())
        })
        .collect();
    if clockwise {
        pts.reverse();
    }
    pts
}

fn random_height(rng: &mut ChaCha8Rng, amplitude: f64) -> impl Fn(f64, f64) -> f64 {
    let (a, b) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0));
    let (pa, pb) = (rng.random_range(0.0..PI), rng.random_range(0.0..PI));
    move |x, y| amplitude * (a * x + pa).sin() * (b * y + pb).cos()
}

/// Random disk-topology surface: a concave star-shaped outline with
/// `boundary_vertices` corners, filled with jittered interior points and
/// lifted by a smooth height field.
pub fn random_disk(seed: u64, boundary_vertices: usize) -> Triangulation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outline = star_polygon(&mut rng, Point2::origin(), boundary_vertices.max(3), 0.5, 1.0, false);
    let spacing = rng.random_range(0.08..0.2);
    let h = random_height(&mut rng, 0.3);
    planar_patch(vec![resample(&outline, spacing)], spacing, 0.6, &mut rng, h)
}

/// Like `random_disk`, with a concave star-shaped hole of
/// `hole_vertices` corners around the origin.
pub fn random_holed_disk(seed: u64, boundary_vertices: usize, hole_vertices: usize) -> Triangulation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outline = star_polygon(&mut rng, Point2::origin(), boundary_vertices.max(3), 0.6, 1.0, false);
    let hole = star_polygon(&mut rng, Point2::origin(), hole_vertices.max(3), 0.12, 0.35, true);
    let spacing = rng.random_range(0.06..0.12);
    let h = random_height(&mut rng, 0.3);
    planar_patch(vec![resample(&outline, spacing), resample(&hole, spacing)], spacing, 0.6, &mut rng, h)
}

/// Long thin strip of width 1 and the given length, gently bent.
pub fn random_strip(seed: u64, length: f64) -> Triangulation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outline = vec![
        Point2::new(0.0, 0.0),
        Point2::new(length, 0.0),
        Point2::new(length, 1.0),
        Point2::new(0.0, 1.0),
    ];
    let spacing = rng.random_range(0.2..0.35);
    let bend = rng.random_range(0.05..0.3);
    planar_patch(vec![resample(&outline, spacing)], spacing, 0.6, &mut rng, move |x, y| {
        bend * (x * 0.7).sin() + 0.1 * y * y
    })
}

/// Flat plate whose outline has a V notch and which carries a concave
/// five-pointed star hole.
pub fn concave_hole_plate() -> Triangulation {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let outline = vec![
        Point2::new(0.0, 0.0),
        Point2::new(4.0, 0.0),
        Point2::new(4.0, 3.0),
        Point2::new(2.6, 3.0),
        Point2::new(2.0, 2.2),
        Point2::new(1.4, 3.0),
        Point2::new(0.0, 3.0),
    ];
    let center = Point2::new(2.0, 1.2);
    let mut hole: Vec<Point2<f64>> = (0..10)
        .map(|k| {
            let phi = PI / 2.0 + PI * k as f64 / 5.0;
            let r = if k % 2 == 0 { 0.75 } else { 0.3 };
            center + nalgebra::Vector2::new(r * phi.cos(), r * phi.sin())
        })
        .collect();
    hole.reverse();
    let spacing = 0.2;
    planar_patch(
        vec![resample(&outline, spacing), resample(&hole, 0.12)],
        spacing,
        0.5,
        &mut rng,
        |_, _| 0.0,
    )
}

/// Named disk-topology surfaces (some with holes) used by property suites.
pub fn disk_suite() -> Vec<(String, Triangulation)> {
    let mut out = vec![
        ("hexagon-fan".to_string(), hexagon_fan()),
        ("polar-disk".to_string(), disk(6, 24)),
        ("annulus".to_string(), annulus(40, 5, 1.0, 0.3)),
        ("square-frame".to_string(), square_frame(1.0, 0.25)),
        ("cylinder-shell".to_string(), cylinder_shell(16, 1.0, 2.0)),
        ("open-tube".to_string(), tube(12, 8, 1.0, 3.0)),
        ("concave-hole-plate".to_string(), concave_hole_plate()),
    ];
    for s in 0..20 {
        out.push((format!("random-disk-{s}"), random_disk(100 + s, 8 + 2 * s as usize)));
    }
    for s in 0..15 {
        out.push((format!("holed-disk-{s}"), random_holed_disk(200 + s, 12 + s as usize, 5 + 2 * s as usize)));
    }
    for s in 0..10 {
        out.push((format!("strip-{s}"), random_strip(300 + s, 10.0 + 4.0 * s as f64)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{euler_check, validate};

    fn check(m: &Triangulation, b: usize, g: i64) {
        let r = validate(m);
        assert!(r.manifold && r.orientation_consistent, "{r}");
        assert!(r.degenerate_triangles.is_empty());
        let e = euler_check(m).unwrap();
        assert_eq!(e.topology.b as usize, b);
        assert_eq!(e.topology.g, g);
    }

    #[test]
    fn closed_fixtures_are_watertight() {
        for m in [regular_tetrahedron(), cube(1), cube(3), uv_sphere(12, 8, 1.0), torus(12, 8, 2.0, 0.5), capped_cylinder(12, 4, 1.0, 2.0)] {
            assert!(validate(&m).watertight);
            assert!(m.total_area() > 0.0);
        }
        assert_eq!(euler_check(&torus(12, 8, 2.0, 0.5)).unwrap().topology.g, 1);
    }

    #[test]
    fn outward_orientation() {
        // divergence theorem: volume from signed tetrahedra is positive
        for m in [regular_tetrahedron(), cube(2), uv_sphere(10, 6, 1.0), torus(10, 6, 2.0, 0.5), capped_cylinder(10, 2, 1.0, 1.0)] {
            let vol: f64 = m
                .triangles
                .iter()
                .map(|t| {
                    let [a, b, c] = t.map(|v| m.vertices[v].coords);
                    a.dot(&b.cross(&c)) / 6.0
                })
                .sum();
            assert!(vol > 0.0);
        }
        assert!((cube(2).total_area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn open_fixture_topology() {
        check(&disk(3, 8), 1, 0);
        check(&annulus(10, 3, 1.0, 0.5), 2, 0);
        check(&torus_with_hole(10, 6, 2.0, 0.5), 1, 1);
        check(&cylinder_shell(8, 1.0, 1.0), 1, 0);
        check(&tube(10, 50, 1.0, 30.0), 2, 0);
        check(&concave_hole_plate(), 2, 0);
        assert_eq!(tube(10, 50, 1.0, 30.0).num_triangles(), 1000);
    }

    #[test]
    fn suite_is_large_and_disk_like() {
        let suite = disk_suite();
        assert!(suite.len() >= 50);
        for (name, m) in &suite {
            let e = euler_check(m).unwrap();
            assert!(e.parametrizable, "{name}: {:?}", e.topology);
        }
    }

    #[test]
    fn random_fixtures_deterministic() {
        assert_eq!(random_disk(5, 20), random_disk(5, 20));
    }
}
