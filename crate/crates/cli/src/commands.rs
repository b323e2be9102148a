use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use surfatlas::atlas::{build_atlas, AtlasLimits, AtlasOptions, ParametrizedPatch};
use surfatlas::mesh::{euler_check, load_surface_with, validate, write_mesh, write_mesh_with_data, ElementData, LoadOptions, SurfaceFormat, TopologyInfo, ValidationReport};
use surfatlas::param::ParamOptions;
use surfatlas::pipeline::{remesh_model, AtlasSummary, PipelineOptions, RunSummary};
use surfatlas::quality::{quality_report, QualityReport};
use surfatlas::refine::RefineOptions;
use surfatlas::verify::{convergence_study, ConvergenceResult};
use surfatlas::Triangulation;

use crate::{AtlasArgs, AtlasCmd, ConvergenceCmd, InputArgs, QualityCmd, RefineArgs, RefineThreshold, RemeshCmd};

fn load(args: &InputArgs) -> Result<Triangulation> {
    let format = match &args.format {
        Some(f) => SurfaceFormat::parse(f)?,
        None => SurfaceFormat::from_path(&args.input)?,
    };
    let options = LoadOptions {
        weld_tolerance: args.weld,
    };
    let mesh = load_surface_with(&args.input, format, &options)?;
    log::info!("loaded {} vertices, {} triangles", mesh.num_vertices(), mesh.num_triangles());
    Ok(mesh)
}

fn atlas_options(a: &AtlasArgs) -> AtlasOptions {
    AtlasOptions {
        feature_angle: a.angle,
        limits: AtlasLimits {
            max_triangles: a.max_triangles,
            param: ParamOptions {
                scheme: a.scheme,
                hole_policy: a.hole_policy,
                hole_threshold: a.hole_threshold,
            },
        },
    }
}

fn refine_options(r: &RefineArgs) -> Option<RefineOptions> {
    (r.refine_rounds > 0).then(|| RefineOptions {
        threshold: match r.refine_threshold {
            RefineThreshold::Auto => None,
            RefineThreshold::Length(x) => Some(x),
        },
        max_rounds: r.refine_rounds,
        split_boundary: false,
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    Ok(text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn summary_path(output: &Path) -> PathBuf {
    output.with_extension("json")
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// One `id u v` line per patch vertex. Vertices added by refinement are
/// numbered after the model vertices.
fn dump_uv(dir: &Path, model_vertices: usize, patches: &[ParametrizedPatch]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (i, p) in patches.iter().enumerate() {
        let mut s = String::new();
        for (l, uv) in p.param.uv.iter().enumerate() {
            let id = p.patch.global_vertex[l].unwrap_or(model_vertices + l);
            let _ = writeln!(s, "{id} {} {}", uv.x, uv.y);
        }
        write_text(&dir.join(format!("patch-{i}.uv")), &s)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct InfoSummary {
    command: &'static str,
    input: PathBuf,
    validation: ValidationReport,
    topology: Option<TopologyInfo>,
    parametrizable: Option<bool>,
    area: f64,
    bbox_diagonal: f64,
}

pub fn info(args: &InputArgs) -> Result<()> {
    let mesh = load(args)?;
    let validation = validate(&mesh);
    let check = if validation.manifold { Some(euler_check(&mesh)?) } else { None };
    print_json(&InfoSummary {
        command: "info",
        input: args.input.clone(),
        validation,
        topology: check.map(|c| c.topology),
        parametrizable: check.map(|c| c.parametrizable),
        area: mesh.total_area(),
        bbox_diagonal: mesh.bbox_diagonal(),
    })?;
    Ok(())
}

fn reject_invalid(mesh: &Triangulation) -> Result<()> {
    let report = validate(mesh);
    if !report.is_valid() {
        return Err(surfatlas::Error::InvalidArgument(format!("input mesh rejected: {report}")).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct AtlasRun {
    command: &'static str,
    input: PathBuf,
    options: AtlasOptions,
    atlas: AtlasSummary,
    faces: usize,
    elapsed_ms: f64,
}

pub fn atlas(args: &AtlasCmd) -> Result<()> {
    let start = Instant::now();
    let model = load(&args.input)?;
    reject_invalid(&model)?;
    let options = atlas_options(&args.atlas);
    let atlas = build_atlas(&model, &options)?;
    if let Some(out) = &args.output {
        write_mesh(&atlas.tagged_model(&model), Some(&atlas.brep), out, SurfaceFormat::Msh)?;
    }
    if let Some(dir) = &args.uv_dump {
        dump_uv(dir, model.num_vertices(), &atlas.patches)?;
    }
    let text = print_json(&AtlasRun {
        command: "atlas",
        input: args.input.input.clone(),
        options,
        atlas: AtlasSummary::new(&model, &atlas),
        faces: atlas.brep.faces.len(),
        elapsed_ms: elapsed_ms(start),
    })?;
    if let Some(out) = &args.output {
        write_text(&summary_path(out), &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RemeshRun {
    command: &'static str,
    input: PathBuf,
    output: PathBuf,
    options: PipelineOptions,
    #[serde(flatten)]
    run: RunSummary,
    elapsed_ms: f64,
}

pub fn remesh(args: &RemeshCmd) -> Result<()> {
    let start = Instant::now();
    let model = load(&args.input)?;
    let format = match &args.output_format {
        Some(f) => SurfaceFormat::parse(f)?,
        None => match args.output.extension().and_then(|e| e.to_str()) {
            Some("stl") => SurfaceFormat::StlBinary,
            _ => SurfaceFormat::from_path(&args.output)?,
        },
    };
    let options = PipelineOptions {
        atlas: atlas_options(&args.atlas),
        refine: refine_options(&args.refine),
        size: args.size,
        passes: args.passes,
    };
    let run = remesh_model(&model, &options)?;
    let brep = (format == SurfaceFormat::Msh).then_some(&run.brep);
    write_mesh(&run.mesh, brep, &args.output, format)?;
    if let Some(dir) = &args.uv_dump {
        dump_uv(dir, model.num_vertices(), &run.patches)?;
    }
    let text = print_json(&RemeshRun {
        command: "remesh",
        input: args.input.input.clone(),
        output: args.output.clone(),
        options,
        run: run.summary(&model),
        elapsed_ms: elapsed_ms(start),
    })?;
    write_text(&summary_path(&args.output), &text)?;
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceRun<'a> {
    command: &'static str,
    #[serde(flatten)]
    result: &'a ConvergenceResult,
    elapsed_ms: f64,
}

pub fn convergence(args: &ConvergenceCmd) -> Result<()> {
    let start = Instant::now();
    let result = convergence_study(args.scheme, args.mesh, &args.levels, args.seed)?;
    if let Some(path) = &args.csv {
        write_text(path, &result.to_csv())?;
    }
    print_json(&ConvergenceRun {
        command: "convergence",
        result: &result,
        elapsed_ms: elapsed_ms(start),
    })?;
    Ok(())
}

#[derive(Serialize)]
struct PatchQuality {
    patch: usize,
    triangles: usize,
    min_conformity: f64,
    max_conformity: f64,
    mean_conformity: f64,
    histogram: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_triangle: Option<QualityReport>,
}

#[derive(Serialize)]
struct QualityRun {
    command: &'static str,
    input: PathBuf,
    patches: Vec<PatchQuality>,
    min_conformity: f64,
    elapsed_ms: f64,
}

pub fn quality(args: &QualityCmd) -> Result<()> {
    let start = Instant::now();
    let model = load(&args.input)?;
    reject_invalid(&model)?;
    let atlas = build_atlas(&model, &atlas_options(&args.atlas))?;
    let nt = model.num_triangles();
    let mut fields = [vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]];
    let mut patches = Vec::new();
    for (i, p) in atlas.patches.iter().enumerate() {
        let q = quality_report(&p.patch, &p.param.uv).map_err(|e| surfatlas::Error::Patch {
            patch: i,
            source: Box::new(e),
        })?;
        for (t, tq) in q.triangles.iter().enumerate() {
            let m = p.patch.source_triangle[t];
            fields[0][m] = tq.conformity;
            fields[1][m] = tq.sigma1;
            fields[2][m] = tq.sigma2;
        }
        patches.push(PatchQuality {
            patch: i,
            triangles: q.triangles.len(),
            min_conformity: q.min_conformity,
            max_conformity: q.max_conformity,
            mean_conformity: q.mean_conformity,
            histogram: q.histogram.to_vec(),
            per_triangle: args.per_triangle.then_some(q),
        });
    }
    if let Some(out) = &args.output {
        let [conformity, sigma1, sigma2] = fields;
        let data = [
            ElementData {
                name: "conformity".into(),
                values: conformity,
            },
            ElementData {
                name: "sigma1".into(),
                values: sigma1,
            },
            ElementData {
                name: "sigma2".into(),
                values: sigma2,
            },
        ];
        write_mesh_with_data(&atlas.tagged_model(&model), Some(&atlas.brep), &data, out, SurfaceFormat::Msh)?;
    }
    let min_conformity = patches.iter().map(|p| p.min_conformity).fold(f64::INFINITY, f64::min);
    print_json(&QualityRun {
        command: "quality",
        input: args.input.input.clone(),
        patches,
        min_conformity,
        elapsed_ms: elapsed_ms(start),
    })?;
    Ok(())
}
