use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use surfatlas::fixtures::{cube, uv_sphere};
use surfatlas::mesh::{load_surface, validate, write_mesh, SurfaceFormat};
use surfatlas::Triangulation;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_surfatlas"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn save(dir: &Path, name: &str, mesh: &Triangulation) -> PathBuf {
    let p = dir.join(name);
    write_mesh(mesh, None, &p, SurfaceFormat::from_path(&p).unwrap()).unwrap();
    p
}

#[test]
fn info_reports_closed_cube() {
    let dir = tempfile::tempdir().unwrap();
    let p = save(dir.path(), "cube.obj", &cube(2));
    let out = run(&["info", p.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["validation"]["watertight"], true);
    assert_eq!(v["validation"]["boundary_loops"], 0);
    assert_eq!(v["parametrizable"], false);
}

#[test]
fn atlas_of_cube_has_six_faces() {
    let dir = tempfile::tempdir().unwrap();
    let p = save(dir.path(), "cube.stl", &cube(3));
    let out_mesh = dir.path().join("atlas.msh");
    let uv = dir.path().join("uv");
    let out = run(&[
        "atlas",
        p.to_str().unwrap(),
        "--angle",
        "40",
        "-o",
        out_mesh.to_str().unwrap(),
        "--uv-dump",
        uv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["faces"], 6);
    assert_eq!(v["atlas"]["segments"], 6);
    let tagged = load_surface(&out_mesh, SurfaceFormat::Msh).unwrap();
    let tags = tagged.patch_tags.unwrap();
    assert_eq!(tags.iter().max(), Some(&5));
    assert!(dir.path().join("atlas.json").exists());
    let dump = std::fs::read_to_string(uv.join("patch-0.uv")).unwrap();
    let first: Vec<&str> = dump.lines().next().unwrap().split(' ').collect();
    assert_eq!(first.len(), 3);
}

#[test]
fn remesh_sphere_is_watertight() {
    let dir = tempfile::tempdir().unwrap();
    let p = save(dir.path(), "sphere.stl", &uv_sphere(24, 12, 1.0));
    let out_mesh = dir.path().join("out.msh");
    let out = run(&["remesh", p.to_str().unwrap(), "--size", "0.1", "-o", out_mesh.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["output"]["watertight"], true);
    let m = load_surface(&out_mesh, SurfaceFormat::Msh).unwrap();
    let r = validate(&m);
    assert!(r.watertight && r.orientation_consistent);
    assert!(v["max_distance"].as_f64().unwrap() <= v["surface_tolerance"].as_f64().unwrap());
}

#[test]
fn remesh_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let p = save(dir.path(), "cube.obj", &cube(3));
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let o = dir.path().join(format!("out{threads}.msh"));
        let out = run(&["--threads", threads, "remesh", p.to_str().unwrap(), "--size", "0.2", "-o", o.to_str().unwrap()]);
        assert!(out.status.success());
        outputs.push(std::fs::read(&o).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn convergence_structured_mvc_does_not_converge() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let out = run(&[
        "convergence",
        "--scheme",
        "mvc",
        "--mesh",
        "structured",
        "--levels",
        "8,16,32,64",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["l2_slope"].as_f64().unwrap() < 0.5);
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next(), Some("n,h,l2,h1"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn quality_writes_element_data() {
    let dir = tempfile::tempdir().unwrap();
    let p = save(dir.path(), "cube.obj", &cube(2));
    let o = dir.path().join("q.msh");
    let out = run(&["quality", p.to_str().unwrap(), "-o", o.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["patches"].as_array().unwrap().len(), 6);
    assert!(v["min_conformity"].as_f64().unwrap() > 0.0);
    let text = std::fs::read_to_string(o).unwrap();
    assert_eq!(text.matches("$ElementData").count(), 3);
}

#[test]
fn errors_are_json() {
    let out = run(&["info", "/nonexistent/model.obj"]);
    assert!(!out.status.success());
    assert_eq!(json(&out)["error"]["kind"], "io");

    let out = run(&["remesh", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "usage");

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("nan.stl");
    std::fs::write(&p, "solid x\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 nan\nvertex 0 1 0\nendloop\nendfacet\nendsolid x\n").unwrap();
    let out = run(&["info", p.to_str().unwrap()]);
    assert_eq!(json(&out)["error"]["kind"], "non-finite");
}
