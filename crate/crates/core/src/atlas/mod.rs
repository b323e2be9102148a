//! Splitting a model into parametrizable patches and assembling its
//! boundary representation.

mod bisect;
mod brep;
mod patch;

use serde::Serialize;

pub use bisect::bisect_patch;
pub use brep::{build_brep, BRep, BRepCurve, BRepFace, BRepPoint, CurveKind, CurveUse};
pub use patch::Patch;

use crate::error::{Error, Result};
use crate::features::{detect_feature_edges, segment_patches, DEFAULT_FEATURE_ANGLE};
use crate::mesh::{Adjacency, TopologyInfo, Triangulation};
use crate::param::{parametrize, ParamOptions, Parametrization};

pub const DEFAULT_MAX_TRIANGLES: usize = 100_000;
/// Minimum UV area relative to the mean UV area of the patch.
pub const DEGENERATE_UV_FACTOR: f64 = 1e-12;
pub const MAX_UV_ASPECT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtlasLimits {
    pub max_triangles: usize,
    pub param: ParamOptions,
}

impl Default for AtlasLimits {
    fn default() -> Self {
        AtlasLimits {
            max_triangles: DEFAULT_MAX_TRIANGLES,
            param: ParamOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitReason {
    /// wrong topology: closed, handles, pinched or disconnected
    Genus,
    Size,
    DegenerateArea,
    Aspect,
    NonInjective,
    /// the scheme could not be solved to tolerance
    Solver,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitRecord {
    /// triangles of the patch that was split
    pub triangles: usize,
    pub reason: SplitReason,
}

/// A patch accepted by the atlas, with its trial parametrization.
#[derive(Debug, Clone)]
pub struct ParametrizedPatch {
    pub patch: Patch,
    pub param: Parametrization,
    pub topology: TopologyInfo,
}

enum Verdict {
    Accept(Box<Parametrization>, TopologyInfo),
    Split(SplitReason),
}

fn assess(patch: &Patch, limits: &AtlasLimits) -> Result<Verdict> {
    let check = patch.euler_check()?;
    if !check.parametrizable {
        return Ok(Verdict::Split(SplitReason::Genus));
    }
    if patch.num_triangles() > limits.max_triangles {
        return Ok(Verdict::Split(SplitReason::Size));
    }
    let param = match parametrize(patch, &limits.param) {
        Ok(p) => p,
        Err(Error::SolverFailed { residual }) => {
            log::debug!("trial solve failed with residual {residual:e}");
            return Ok(Verdict::Split(SplitReason::Solver));
        }
        Err(e) => return Err(e),
    };
    if !param.injective {
        return Ok(Verdict::Split(SplitReason::NonInjective));
    }
    let mean = param.total_area() / patch.num_triangles() as f64;
    if param.min_area() < DEGENERATE_UV_FACTOR * mean {
        return Ok(Verdict::Split(SplitReason::DegenerateArea));
    }
    if param.aspect_ratio() > MAX_UV_ASPECT {
        return Ok(Verdict::Split(SplitReason::Aspect));
    }
    Ok(Verdict::Accept(Box::new(param), check.topology))
}

/// Recursively bisects `patch` until every part has disk topology, respects
/// the size limit and admits a non-degenerate one-to-one parametrization.
/// Parts are returned in a deterministic order (first half before second).
pub fn make_parametrizable(patch: Patch, limits: &AtlasLimits) -> Result<(Vec<ParametrizedPatch>, Vec<SplitRecord>)> {
    match assess(&patch, limits)? {
        Verdict::Accept(param, topology) => Ok((
            vec![ParametrizedPatch {
                patch,
                param: *param,
                topology,
            }],
            Vec::new(),
        )),
        Verdict::Split(reason) => {
            let nt = patch.num_triangles();
            log::debug!("splitting patch of {nt} triangles ({reason:?})");
            if nt < 2 {
                return Err(Error::PatchTooSmall(nt));
            }
            let (a, b) = bisect_patch(&patch)?;
            let (ra, rb) = rayon::join(|| make_parametrizable(a, limits), || make_parametrizable(b, limits));
            let (mut pa, mut sa) = ra?;
            let (pb, sb) = rb?;
            pa.extend(pb);
            let mut splits = vec![SplitRecord { triangles: nt, reason }];
            splits.append(&mut sa);
            splits.extend(sb);
            Ok((pa, splits))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtlasOptions {
    pub feature_angle: f64,
    pub limits: AtlasLimits,
}

impl Default for AtlasOptions {
    fn default() -> Self {
        AtlasOptions {
            feature_angle: DEFAULT_FEATURE_ANGLE,
            limits: AtlasLimits::default(),
        }
    }
}

/// The parametrized patches of a model and their boundary representation.
#[derive(Debug, Clone)]
pub struct Atlas {
    pub patches: Vec<ParametrizedPatch>,
    pub brep: BRep,
    /// model triangle -> patch
    pub patch_of_triangle: Vec<usize>,
    pub feature_edges: usize,
    /// model faces found by feature segmentation, before splitting
    pub segments: usize,
    pub splits: Vec<SplitRecord>,
}

impl Atlas {
    /// The model with patch tags set.
    pub fn tagged_model(&self, model: &Triangulation) -> Triangulation {
        model.clone().with_patch_tags(self.patch_of_triangle.clone())
    }
}

/// Feature detection, segmentation, splitting and BRep assembly.
pub fn build_atlas(model: &Triangulation, options: &AtlasOptions) -> Result<Atlas> {
    use rayon::prelude::*;

    let adj = Adjacency::new(model.num_vertices(), &model.triangles);
    if !adj.is_manifold() {
        return Err(Error::NonManifold("model has an edge with more than two triangles".into()));
    }
    let features = detect_feature_edges(model, &adj, options.feature_angle)?;
    let segments = segment_patches(model, &adj, &features)?;
    let results: Vec<Result<(Vec<ParametrizedPatch>, Vec<SplitRecord>)>> = segments
        .members()
        .into_par_iter()
        .enumerate()
        .map(|(i, tris)| {
            let patch = Patch::from_model(model, &tris).map_err(|e| e.in_patch(i))?;
            make_parametrizable(patch, &options.limits).map_err(|e| e.in_patch(i))
        })
        .collect();
    let mut patches = Vec::new();
    let mut splits = Vec::new();
    for r in results {
        let (p, s) = r?;
        patches.extend(p);
        splits.extend(s);
    }
    let mut patch_of_triangle = vec![usize::MAX; model.num_triangles()];
    for (i, p) in patches.iter().enumerate() {
        for &t in &p.patch.source_triangle {
            patch_of_triangle[t] = i;
        }
    }
    let loops: Vec<Vec<Vec<usize>>> = patches
        .iter()
        .map(|p| {
            p.patch
                .loops
                .iter()
                .map(|l| l.iter().map(|&v| p.patch.global_vertex[v].expect("model vertex")).collect())
                .collect()
        })
        .collect();
    let brep = build_brep(model, &adj, &patch_of_triangle, &loops, Some(&features))?;
    Ok(Atlas {
        patches,
        brep,
        patch_of_triangle,
        feature_edges: features.count(),
        segments: segments.count,
        splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::euler_check;

    #[test]
    fn compliant_patch_unchanged() {
        let m = fixtures::disk(2, 5);
        assert_eq!(m.num_triangles(), 15);
        let (parts, splits) = make_parametrizable(Patch::from_mesh(m).unwrap(), &AtlasLimits::default()).unwrap();
        assert_eq!(parts.len(), 1);
        assert!(splits.is_empty());
    }

    #[test]
    fn closed_sphere_is_cut() {
        let m = fixtures::uv_sphere(12, 8, 1.0);
        let (parts, splits) = make_parametrizable(Patch::from_mesh(m).unwrap(), &AtlasLimits::default()).unwrap();
        assert!(parts.len() >= 2);
        assert_eq!(splits[0].reason, SplitReason::Genus);
    }

    #[test]
    fn torus_parts_have_genus_zero() {
        let m = fixtures::torus(16, 8, 2.0, 0.6);
        let (parts, _) = make_parametrizable(Patch::from_mesh(m).unwrap(), &AtlasLimits::default()).unwrap();
        assert!(parts.len() >= 2);
        let mut total = 0;
        for p in &parts {
            let e = euler_check(&p.patch.mesh).unwrap();
            assert_eq!(e.topology.g, 0);
            assert!(e.topology.b >= 1);
            assert!(p.param.injective);
            total += p.patch.num_triangles();
        }
        assert_eq!(total, 256);
    }

    #[test]
    fn size_limit_forces_split() {
        let m = fixtures::disk(4, 12);
        let limits = AtlasLimits {
            max_triangles: 30,
            ..Default::default()
        };
        let (parts, splits) = make_parametrizable(Patch::from_mesh(m).unwrap(), &limits).unwrap();
        assert!(parts.iter().all(|p| p.patch.num_triangles() <= 30));
        assert!(splits.iter().any(|s| s.reason == SplitReason::Size));
    }

    #[test]
    fn idempotent_on_output() {
        let m = fixtures::uv_sphere(10, 6, 1.0);
        let (parts, _) = make_parametrizable(Patch::from_mesh(m).unwrap(), &AtlasLimits::default()).unwrap();
        for p in parts {
            let (again, splits) = make_parametrizable(p.patch.clone(), &AtlasLimits::default()).unwrap();
            assert_eq!(again.len(), 1);
            assert!(splits.is_empty());
        }
    }

    #[test]
    fn cube_atlas() {
        let atlas = build_atlas(&fixtures::cube(2), &AtlasOptions::default()).unwrap();
        assert_eq!(atlas.patches.len(), 6);
        assert_eq!(atlas.segments, 6);
        assert_eq!((atlas.brep.curves.len(), atlas.brep.points.len()), (12, 8));
    }

    #[test]
    fn torus_atlas_partitions_triangles() {
        let m = fixtures::torus(12, 6, 2.0, 0.6);
        let options = AtlasOptions {
            feature_angle: 180.0,
            ..Default::default()
        };
        let atlas = build_atlas(&m, &options).unwrap();
        assert_eq!(atlas.segments, 1);
        assert!(atlas.patch_of_triangle.iter().all(|&p| p < atlas.patches.len()));
        for c in &atlas.brep.curves {
            assert!(c.faces.len() <= 2);
            assert_eq!(c.kind, CurveKind::Cut);
        }
    }
}
