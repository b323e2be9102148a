//! Indirect remeshing: each face is meshed in its parameter plane under the
//! metric induced by its parametrization, mapped back onto the input
//! triangles and stitched along shared curve discretizations.

mod curve;
mod locator;
mod uvmesh;

use std::collections::HashMap;

use nalgebra::{Point2, Point3};
use serde::Serialize;

pub use curve::{discretize_curve, CurveSample, DiscreteCurve, CURVE_CORNER_ANGLE};
pub use locator::{UVLocator, LOCATE_TOLERANCE};
pub use uvmesh::{mesh_patch_uv, MetricField, RemeshStats, UvMesh, COLLAPSE_LENGTH, DEFAULT_PASSES, SPLIT_LENGTH};

use crate::atlas::{BRep, BRepCurve, BRepPoint, ParametrizedPatch, Patch};
use crate::error::{Error, Result};
use crate::mesh::Triangulation;

/// Uniform target edge length on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeField {
    pub h: f64,
}

impl SizeField {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h.is_finite() {
            Ok(SizeField { h })
        } else {
            Err(Error::InvalidArgument(format!("mesh size {h}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemeshOptions {
    pub size: SizeField,
    pub passes: usize,
}

impl RemeshOptions {
    pub fn new(h: f64) -> Result<Self> {
        Ok(RemeshOptions {
            size: SizeField::new(h)?,
            passes: DEFAULT_PASSES,
        })
    }
}

/// Discretizes every curve of the BRep, raising segment counts until each
/// face loop has at least three points.
pub fn discretize_curves(brep: &BRep, model: &Triangulation, h: f64) -> Vec<DiscreteCurve> {
    let mut min_segments = vec![1; brep.curves.len()];
    loop {
        let curves: Vec<DiscreteCurve> = brep
            .curves
            .iter()
            .zip(&min_segments)
            .map(|(c, &m)| discretize_curve(c, model, h, m))
            .collect();
        let mut grown = false;
        for face in &brep.faces {
            for lp in &face.loops {
                let n: usize = lp.iter().map(|u| curves[u.curve].num_segments()).sum();
                if n < 3 {
                    for u in lp {
                        if curves[u.curve].num_segments() < 2 {
                            min_segments[u.curve] = 2;
                            grown = true;
                        }
                    }
                }
            }
        }
        if !grown {
            return curves;
        }
    }
}

/// Identity of an output vertex lying on a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum CurveNode {
    /// coincides with a model vertex
    Vertex(usize),
    /// sample `k` of curve `c`
    Sample(usize, usize),
}

fn curve_node(curves: &[DiscreteCurve], c: usize, k: usize) -> CurveNode {
    match curves[c].samples[k].vertex() {
        Some(v) => CurveNode::Vertex(v),
        None => CurveNode::Sample(c, k),
    }
}

/// Sample indices along one use of a curve, without the closing sample.
fn use_samples(curve: &DiscreteCurve, reversed: bool) -> Vec<usize> {
    let n = curve.samples.len();
    let mut ks: Vec<usize> = (0..n).collect();
    if curve.closed {
        ks.push(0);
    }
    if reversed {
        ks.reverse();
    }
    ks.pop();
    ks
}

/// Barycentric image of UV point `p` on the patch triangles.
pub fn map_point(patch: &Patch, locator: &UVLocator, p: &Point2<f64>) -> Result<Point3<f64>> {
    let (t, bary) = locator.locate(p).ok_or(Error::LocateFailed { u: p.x, v: p.y })?;
    let tri = patch.mesh.triangles[t];
    for k in 0..3 {
        if bary[k] == 1.0 {
            return Ok(patch.mesh.vertices[tri[k]]);
        }
    }
    let mut q = nalgebra::Vector3::zeros();
    for k in 0..3 {
        q += bary[k] * patch.mesh.vertices[tri[k]].coords;
    }
    Ok(Point3::from(q))
}

/// 3D positions of the free (non-loop) points of a UV mesh.
pub fn map_to_3d(uvmesh: &UvMesh, patch: &Patch, locator: &UVLocator) -> Result<Vec<Point3<f64>>> {
    uvmesh.points[uvmesh.boundary..]
        .iter()
        .map(|p| map_point(patch, locator, p))
        .collect()
}

/// A meshed face before stitching.
#[derive(Debug, Clone)]
pub struct FaceMesh {
    pub face: usize,
    pub uv: UvMesh,
    /// curve node of every loop point
    loop_nodes: Vec<CurveNode>,
    /// 3D positions of the free points
    pub interior: Vec<Point3<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FaceReport {
    pub face: usize,
    pub triangles: usize,
    pub stats: RemeshStats,
}

/// Meshes one BRep face against the shared curve discretizations.
pub fn mesh_face(
    brep: &BRep,
    face: usize,
    patch: &ParametrizedPatch,
    curves: &[DiscreteCurve],
    options: &RemeshOptions,
) -> Result<FaceMesh> {
    let p = &patch.patch;
    let uv = &patch.param.uv;
    let local: HashMap<usize, usize> = p
        .global_vertex
        .iter()
        .enumerate()
        .filter_map(|(l, g)| g.map(|g| (g, l)))
        .collect();
    let lookup = |g: usize| {
        local
            .get(&g)
            .copied()
            .ok_or_else(|| Error::InconsistentBoundary(format!("curve vertex {g} is not in face {face}")))
    };
    let mut loops = Vec::new();
    let mut loop_nodes = Vec::new();
    for lp in &brep.faces[face].loops {
        let mut pts = Vec::new();
        for u in lp {
            let c = &curves[u.curve];
            for k in use_samples(c, u.reversed) {
                let s = c.samples[k];
                let a = lookup(s.a)?;
                let q = if s.t == 0.0 {
                    uv[a]
                } else {
                    let b = lookup(s.b)?;
                    uv[a] + s.t * (uv[b] - uv[a])
                };
                pts.push(q);
                loop_nodes.push(curve_node(curves, u.curve, k));
            }
        }
        loops.push(pts);
    }
    let metric = MetricField::new(p, uv, options.size.h)?;
    let mesh = mesh_patch_uv(&loops, &metric, options.passes)?;
    let interior = map_to_3d(&mesh, p, &metric.locator)?;
    Ok(FaceMesh {
        face,
        uv: mesh,
        loop_nodes,
        interior,
    })
}

/// Merges face meshes into one triangulation; curve points shared by
/// several faces become a single vertex. Triangles are tagged by face.
/// Also returns the output vertices of every curve in sample order.
pub fn stitch(
    faces: &[FaceMesh],
    curves: &[DiscreteCurve],
    model: &Triangulation,
) -> Result<(Triangulation, Vec<Vec<usize>>)> {
    let mut vertices = Vec::new();
    let mut ids: HashMap<CurveNode, usize> = HashMap::new();
    let mut curve_vertices = Vec::with_capacity(curves.len());
    // curve points first, in curve order
    for (c, curve) in curves.iter().enumerate() {
        let mut cv = Vec::with_capacity(curve.samples.len());
        for (k, s) in curve.samples.iter().enumerate() {
            let node = curve_node(curves, c, k);
            let id = *ids.entry(node).or_insert_with(|| {
                vertices.push(s.position(model));
                vertices.len() - 1
            });
            cv.push(id);
        }
        curve_vertices.push(cv);
    }
    let mut triangles = Vec::new();
    let mut tags = Vec::new();
    for f in faces {
        let mut map = Vec::with_capacity(f.uv.points.len());
        for node in &f.loop_nodes {
            map.push(
                *ids.get(node)
                    .ok_or_else(|| Error::InconsistentBoundary(format!("face {} uses an unknown curve point", f.face)))?,
            );
        }
        if map.len() != f.uv.boundary {
            return Err(Error::InconsistentBoundary(format!("face {} loop size mismatch", f.face)));
        }
        for q in &f.interior {
            map.push(vertices.len());
            vertices.push(*q);
        }
        for t in &f.uv.triangles {
            triangles.push(t.map(|v| map[v]));
            tags.push(f.face);
        }
    }
    Ok((Triangulation::new(vertices, triangles)?.with_patch_tags(tags), curve_vertices))
}

/// The model BRep re-expressed on the stitched output vertices.
fn output_brep(brep: &BRep, curve_vertices: &[Vec<usize>], model_vertex: &HashMap<usize, usize>) -> Result<BRep> {
    let points = brep
        .points
        .iter()
        .map(|p| {
            model_vertex
                .get(&p.vertex)
                .map(|&vertex| BRepPoint { vertex })
                .ok_or_else(|| Error::InconsistentBoundary(format!("corner {} is not on a curve", p.vertex)))
        })
        .collect::<Result<_>>()?;
    let curves = brep
        .curves
        .iter()
        .zip(curve_vertices)
        .map(|(c, cv)| BRepCurve {
            vertices: cv.clone(),
            ..c.clone()
        })
        .collect();
    Ok(BRep {
        points,
        curves,
        faces: brep.faces.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct Remeshed {
    pub mesh: Triangulation,
    /// the model BRep on the output vertices
    pub brep: BRep,
    pub curves: Vec<DiscreteCurve>,
    pub faces: Vec<FaceReport>,
}

/// Discretizes the curves, meshes every face in parallel and stitches.
/// `patches[i]` must be the parametrized patch of BRep face `i`.
pub fn remesh_faces(
    model: &Triangulation,
    brep: &BRep,
    patches: &[ParametrizedPatch],
    options: &RemeshOptions,
) -> Result<Remeshed> {
    use rayon::prelude::*;

    let curves = discretize_curves(brep, model, options.size.h);
    let faces: Vec<FaceMesh> = (0..brep.faces.len())
        .into_par_iter()
        .map(|f| mesh_face(brep, f, &patches[brep.faces[f].patch], &curves, options).map_err(|e| e.in_patch(f)))
        .collect::<Result<_>>()?;
    let (mesh, curve_vertices) = stitch(&faces, &curves, model)?;
    let mut model_vertex = HashMap::new();
    for (c, curve) in curves.iter().enumerate() {
        for (k, s) in curve.samples.iter().enumerate() {
            if let Some(v) = s.vertex() {
                model_vertex.insert(v, curve_vertices[c][k]);
            }
        }
    }
    let out_brep = output_brep(brep, &curve_vertices, &model_vertex)?;
    let reports = faces
        .iter()
        .map(|f| FaceReport {
            face: f.face,
            triangles: f.uv.triangles.len(),
            stats: f.uv.stats.clone(),
        })
        .collect();
    Ok(Remeshed {
        mesh,
        brep: out_brep,
        curves,
        faces: reports,
    })
}

/// Distance from `p` to triangle `abc`.
pub fn point_triangle_distance(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let n = ab.cross(&ac);
    let nn = n.norm_squared();
    if nn > 0.0 {
        let s = ap.cross(&ac).dot(&n) / nn;
        let t = ab.cross(&ap).dot(&n) / nn;
        if s >= 0.0 && t >= 0.0 && s + t <= 1.0 {
            return n.dot(&ap).abs() / nn.sqrt();
        }
    }
    let seg = |x: &Point3<f64>, y: &Point3<f64>| {
        let d = y - x;
        let l = d.norm_squared();
        let s = if l > 0.0 { ((p - x).dot(&d) / l).clamp(0.0, 1.0) } else { 0.0 };
        (x + s * d - p).norm()
    };
    seg(a, b).min(seg(b, c)).min(seg(c, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{build_atlas, AtlasOptions};
    use crate::fixtures;
    use crate::mesh::{euler_check, validate};

    fn remesh(model: &Triangulation, h: f64) -> Remeshed {
        let atlas = build_atlas(model, &AtlasOptions::default()).unwrap();
        remesh_faces(model, &atlas.brep, &atlas.patches, &RemeshOptions::new(h).unwrap()).unwrap()
    }

    fn max_distance(out: &Triangulation, model: &Triangulation) -> f64 {
        out.vertices
            .iter()
            .map(|p| {
                (0..model.num_triangles())
                    .map(|t| {
                        let [a, b, c] = model.corners(t);
                        point_triangle_distance(p, &a, &b, &c)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn point_triangle_distance_cases() {
        let (a, b, c) = (Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0));
        assert_eq!(point_triangle_distance(&Point3::new(0.2, 0.2, 0.5), &a, &b, &c), 0.5);
        assert!((point_triangle_distance(&Point3::new(2.0, 0.0, 0.0), &a, &b, &c) - 1.0).abs() < 1e-15);
        assert!((point_triangle_distance(&Point3::new(1.0, 1.0, 0.0), &a, &b, &c) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cube_closed_output() {
        let model = fixtures::cube(2);
        let r = remesh(&model, 0.25);
        let v = validate(&r.mesh);
        assert!(v.manifold && v.orientation_consistent && v.boundary_loops == Some(0));
        assert_eq!(euler_check(&r.mesh).unwrap().topology.euler_characteristic(), 2);
        assert!(max_distance(&r.mesh, &model) <= 1e-12 * model.bbox_diagonal());
        let area = r.mesh.total_area();
        assert!((area - model.total_area()).abs() < 1e-9 * area);
    }

    #[test]
    fn disk_boundary_is_discretized_curve() {
        let model = fixtures::disk(4, 16);
        let r = remesh(&model, 0.2);
        let v = validate(&r.mesh);
        assert!(v.manifold && v.orientation_consistent);
        assert_eq!(v.boundary_loops, Some(1));
        let loops = crate::mesh::Adjacency::new(r.mesh.num_vertices(), &r.mesh.triangles)
            .boundary_loops(&r.mesh.triangles)
            .unwrap();
        assert_eq!(loops[0].len(), r.curves[0].samples.len());
    }

    #[test]
    fn sphere_on_surface() {
        let model = fixtures::uv_sphere(16, 10, 1.0);
        let r = remesh(&model, 0.2);
        let v = validate(&r.mesh);
        assert!(v.manifold && v.orientation_consistent && v.boundary_loops == Some(0));
        assert!(max_distance(&r.mesh, &model) <= 1e-12 * model.bbox_diagonal());
    }
}
