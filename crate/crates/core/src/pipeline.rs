//! End-to-end remeshing: atlas, pre-refinement, per-face meshing and the
//! output checks.

use std::collections::{BTreeMap, HashMap};

use nalgebra::Point3;
use serde::Serialize;

use crate::atlas::{build_atlas, Atlas, BRep, AtlasOptions, ParametrizedPatch, SplitReason};
use crate::error::{Error, Result};
use crate::mesh::{validate, Adjacency, TopologyInfo, Triangulation, ValidationReport};
use crate::param::{parametrize, ParamOptions, SolverMethod};
use crate::quality::quality_report;
use crate::refine::{refine_patch, RefineOptions};
use crate::remesh::{point_triangle_distance, remesh_faces, FaceReport, RemeshOptions, DEFAULT_PASSES};

/// Output vertices must lie this close to the input, relative to its
/// bounding-box diagonal.
pub const SURFACE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineOptions {
    pub atlas: AtlasOptions,
    /// `None` skips pre-refinement
    pub refine: Option<RefineOptions>,
    /// target edge length; `None` uses the mean edge length of the input
    pub size: Option<f64>,
    pub passes: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            atlas: AtlasOptions::default(),
            refine: Some(RefineOptions::default()),
            size: None,
            passes: DEFAULT_PASSES,
        }
    }
}

pub fn mean_edge_length(mesh: &Triangulation) -> f64 {
    let adj = Adjacency::new(mesh.num_vertices(), &mesh.triangles);
    let sum: f64 = adj.edges.iter().map(|e| mesh.edge_length(e.vertices[0], e.vertices[1])).sum();
    sum / adj.edges.len().max(1) as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchRefinement {
    pub patch: usize,
    pub triangles_before: usize,
    pub triangles_after: usize,
    pub rounds: usize,
    pub converged: bool,
    /// false when the refined patch did not admit a one-to-one map
    pub applied: bool,
    pub min_conformity_before: f64,
    pub min_conformity_after: f64,
}

fn min_conformity(p: &ParametrizedPatch) -> Result<f64> {
    Ok(quality_report(&p.patch, &p.param.uv)?.min_conformity)
}

/// Refines the interior of one patch and re-parametrizes it. The original
/// patch is kept when the refined one is not one-to-one.
pub fn refine_parametrized(
    index: usize,
    patch: &ParametrizedPatch,
    refine: &RefineOptions,
    param: &ParamOptions,
) -> Result<(ParametrizedPatch, PatchRefinement)> {
    let before = min_conformity(patch)?;
    let (refined, report) = refine_patch(&patch.patch, refine)?;
    let mut record = PatchRefinement {
        patch: index,
        triangles_before: patch.patch.num_triangles(),
        triangles_after: patch.patch.num_triangles(),
        rounds: report.rounds,
        converged: report.converged,
        applied: false,
        min_conformity_before: before,
        min_conformity_after: before,
    };
    if report.splits == 0 {
        return Ok((patch.clone(), record));
    }
    let candidate = match parametrize(&refined, param) {
        Ok(p) if p.injective && p.min_area() > 0.0 => p,
        Ok(_) | Err(Error::SolverFailed { .. }) => {
            log::warn!("patch {index}: refined parametrization rejected, keeping the original");
            return Ok((patch.clone(), record));
        }
        Err(e) => return Err(e),
    };
    let out = ParametrizedPatch {
        patch: refined,
        param: candidate,
        topology: patch.topology,
    };
    record.triangles_after = out.patch.num_triangles();
    record.applied = true;
    record.min_conformity_after = min_conformity(&out)?;
    Ok((out, record))
}

pub fn refine_atlas(
    atlas: &Atlas,
    refine: &RefineOptions,
    param: &ParamOptions,
) -> Result<(Vec<ParametrizedPatch>, Vec<PatchRefinement>)> {
    use rayon::prelude::*;

    let results: Vec<(ParametrizedPatch, PatchRefinement)> = atlas
        .patches
        .par_iter()
        .enumerate()
        .map(|(i, p)| refine_parametrized(i, p, refine, param).map_err(|e| e.in_patch(i)))
        .collect::<Result<_>>()?;
    Ok(results.into_iter().unzip())
}

/// Bucket grid over the triangles of a surface for near-surface queries.
pub struct SurfaceIndex<'a> {
    mesh: &'a Triangulation,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    tol: f64,
}

impl<'a> SurfaceIndex<'a> {
    /// Triangles are registered in every cell their bounding box, grown
    /// by `tol`, overlaps.
    pub fn new(mesh: &'a Triangulation, tol: f64) -> Self {
        let cell = (mean_edge_length(mesh) * 2.0).max(mesh.bbox_diagonal() * 1e-6).max(f64::MIN_POSITIVE);
        let mut index = SurfaceIndex {
            mesh,
            cell,
            cells: HashMap::new(),
            tol,
        };
        for t in 0..mesh.num_triangles() {
            let c = mesh.corners(t);
            let lo = c[0].inf(&c[1]).inf(&c[2]).map(|x| x - tol);
            let hi = c[0].sup(&c[1]).sup(&c[2]).map(|x| x + tol);
            let (a, b) = (index.key(&lo), index.key(&hi));
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for k in a[2]..=b[2] {
                        index.cells.entry([i, j, k]).or_default().push(t);
                    }
                }
            }
        }
        index
    }

    fn key(&self, p: &Point3<f64>) -> [i64; 3] {
        [0, 1, 2].map(|d| (p[d] / self.cell).floor() as i64)
    }

    /// Distance from `p` to the surface. Exact whenever it is at most the
    /// tolerance; larger values are upper bounds or infinite.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        let Some(tris) = self.cells.get(&self.key(p)) else {
            return f64::INFINITY;
        };
        tris.iter()
            .map(|&t| {
                let [a, b, c] = self.mesh.corners(t);
                point_triangle_distance(p, &a, &b, &c)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }
}

/// Largest distance from a vertex of `mesh` to `surface`, exact up to the
/// on-surface tolerance `SURFACE_TOLERANCE * diag(surface)`.
pub fn max_surface_distance(mesh: &Triangulation, surface: &Triangulation) -> f64 {
    use rayon::prelude::*;

    let index = SurfaceIndex::new(surface, SURFACE_TOLERANCE * surface.bbox_diagonal());
    mesh.vertices
        .par_iter()
        .map(|p| index.distance(p))
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchSummary {
    pub patch: usize,
    pub triangles: usize,
    pub vertices: usize,
    pub topology: TopologyInfo,
    pub injective: bool,
    pub min_uv_area: f64,
    pub residual: f64,
    pub solver: SolverMethod,
    pub holes: usize,
}

impl PatchSummary {
    pub fn new(index: usize, p: &ParametrizedPatch) -> Self {
        PatchSummary {
            patch: index,
            triangles: p.patch.num_triangles(),
            vertices: p.patch.mesh.num_vertices(),
            topology: p.topology,
            injective: p.param.injective,
            min_uv_area: p.param.min_area(),
            residual: p.param.residual,
            solver: p.param.method,
            holes: p.param.holes.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AtlasSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub feature_edges: usize,
    pub segments: usize,
    pub patches: Vec<PatchSummary>,
    pub curves: usize,
    pub points: usize,
    pub splits: BTreeMap<String, usize>,
}

impl AtlasSummary {
    pub fn new(model: &Triangulation, atlas: &Atlas) -> Self {
        let mut splits = BTreeMap::new();
        for s in &atlas.splits {
            *splits.entry(split_name(s.reason).to_string()).or_insert(0) += 1;
        }
        AtlasSummary {
            vertices: model.num_vertices(),
            triangles: model.num_triangles(),
            feature_edges: atlas.feature_edges,
            segments: atlas.segments,
            patches: atlas.patches.iter().enumerate().map(|(i, p)| PatchSummary::new(i, p)).collect(),
            curves: atlas.brep.curves.len(),
            points: atlas.brep.points.len(),
            splits,
        }
    }
}

fn split_name(r: SplitReason) -> &'static str {
    match r {
        SplitReason::Genus => "genus",
        SplitReason::Size => "size",
        SplitReason::DegenerateArea => "degenerate-area",
        SplitReason::Aspect => "aspect",
        SplitReason::NonInjective => "non-injective",
        SplitReason::Solver => "solver",
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub atlas: Atlas,
    /// patches actually meshed, after refinement
    pub patches: Vec<ParametrizedPatch>,
    pub refinements: Vec<PatchRefinement>,
    pub size: f64,
    pub mesh: Triangulation,
    /// the model BRep on the output vertices
    pub brep: BRep,
    pub faces: Vec<FaceReport>,
    pub validation: ValidationReport,
    pub max_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub atlas: AtlasSummary,
    pub refinements: Vec<PatchRefinement>,
    pub size: f64,
    pub output: ValidationReport,
    pub faces: Vec<FaceReport>,
    pub max_distance: f64,
    pub surface_tolerance: f64,
}

impl PipelineRun {
    pub fn summary(&self, model: &Triangulation) -> RunSummary {
        RunSummary {
            atlas: AtlasSummary::new(model, &self.atlas),
            refinements: self.refinements.clone(),
            size: self.size,
            output: self.validation.clone(),
            faces: self.faces.clone(),
            max_distance: self.max_distance,
            surface_tolerance: SURFACE_TOLERANCE * model.bbox_diagonal(),
        }
    }
}

/// Checks that `out` is a valid remesh of `model`: manifold, consistently
/// oriented, same boundary-loop count and every vertex on the input.
pub fn check_output(model: &Triangulation, out: &Triangulation) -> Result<(ValidationReport, f64)> {
    let report = validate(out);
    if !report.manifold || !report.orientation_consistent {
        return Err(Error::OutputCheck(format!("output is not an oriented manifold: {report}")));
    }
    let loops = validate(model).boundary_loops;
    if report.boundary_loops != loops {
        return Err(Error::OutputCheck(format!(
            "boundary loops {:?} differ from input {:?}",
            report.boundary_loops, loops
        )));
    }
    let tol = SURFACE_TOLERANCE * model.bbox_diagonal();
    let d = max_surface_distance(out, model);
    if d > tol {
        return Err(Error::OutputCheck(format!("vertex off the input surface by {d:e} (tolerance {tol:e})")));
    }
    Ok((report, d))
}

/// Runs the whole pipeline on a validated model.
pub fn remesh_model(model: &Triangulation, options: &PipelineOptions) -> Result<PipelineRun> {
    let input = validate(model);
    if !input.is_valid() {
        return Err(Error::InvalidArgument(format!("input mesh rejected: {input}")));
    }
    let atlas = build_atlas(model, &options.atlas)?;
    let (patches, refinements) = match &options.refine {
        Some(r) => refine_atlas(&atlas, r, &options.atlas.limits.param)?,
        None => (atlas.patches.clone(), Vec::new()),
    };
    let size = options.size.unwrap_or_else(|| mean_edge_length(model));
    let mut remesh = RemeshOptions::new(size)?;
    remesh.passes = options.passes;
    let remeshed = remesh_faces(model, &atlas.brep, &patches, &remesh)?;
    let (validation, max_distance) = check_output(model, &remeshed.mesh)?;
    Ok(PipelineRun {
        atlas,
        patches,
        refinements,
        size,
        mesh: remeshed.mesh,
        brep: remeshed.brep,
        faces: remeshed.faces,
        validation,
        max_distance,
    })
}
