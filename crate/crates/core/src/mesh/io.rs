//! Readers and writers for STL (ASCII and binary), OBJ and the MSH subset.
//!
//! The MSH subset is the ASCII 4.1 layout restricted to what the atlas needs:
//! point/curve/surface entities, a single node block, triangle blocks per
//! surface entity, line blocks per curve entity and optional per-triangle
//! `$ElementData` sections. See `docs/msh-subset.md`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::Point3;

use super::Triangulation;
use crate::atlas::BRep;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceFormat {
    StlAscii,
    StlBinary,
    Obj,
    Msh,
}

impl SurfaceFormat {
    /// Picks a format from the file extension. For `.stl` the content decides
    /// between ASCII and binary when the file exists; binary is assumed otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "obj" => Ok(SurfaceFormat::Obj),
            "msh" => Ok(SurfaceFormat::Msh),
            "stl" => match fs::read(path) {
                Ok(bytes) if is_ascii_stl(&bytes) => Ok(SurfaceFormat::StlAscii),
                _ => Ok(SurfaceFormat::StlBinary),
            },
            _ => Err(Error::InvalidArgument(format!(
                "cannot infer mesh format from '{}'",
                path.display()
            ))),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "stl-ascii" => Ok(SurfaceFormat::StlAscii),
            "stl-binary" | "stl" => Ok(SurfaceFormat::StlBinary),
            "obj" => Ok(SurfaceFormat::Obj),
            "msh" | "msh-subset" => Ok(SurfaceFormat::Msh),
            _ => Err(Error::InvalidArgument(format!("unknown mesh format '{name}'"))),
        }
    }
}

fn is_ascii_stl(bytes: &[u8]) -> bool {
    if !bytes.starts_with(b"solid") {
        return false;
    }
    if bytes.len() >= 84 {
        let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        if 84 + 50 * n == bytes.len() {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Merge STL vertices closer than this distance. `None` merges only
    /// bit-identical coordinates.
    pub weld_tolerance: Option<f64>,
}

pub fn load_surface(path: &Path, format: SurfaceFormat) -> Result<Triangulation> {
    load_surface_with(path, format, &LoadOptions::default())
}

pub fn load_surface_with(
    path: &Path,
    format: SurfaceFormat,
    options: &LoadOptions,
) -> Result<Triangulation> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        SurfaceFormat::StlAscii => {
            let text = String::from_utf8_lossy(&bytes);
            let soup = parse_stl_ascii(&text)?;
            weld(soup, options.weld_tolerance)
        }
        SurfaceFormat::StlBinary => weld(parse_stl_binary(&bytes)?, options.weld_tolerance),
        SurfaceFormat::Obj => parse_obj(&String::from_utf8_lossy(&bytes)),
        SurfaceFormat::Msh => parse_msh(&String::from_utf8_lossy(&bytes)),
    }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: "missing coordinate".into(),
    })?;
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid number '{tok}'"),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(v)
}

fn parse_stl_ascii(text: &str) -> Result<Vec<[Point3<f64>; 3]>> {
    let mut soup = Vec::new();
    let mut corners = Vec::with_capacity(3);
    for (i, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("vertex") => {
                let x = parse_f64(tok.next(), i + 1)?;
                let y = parse_f64(tok.next(), i + 1)?;
                let z = parse_f64(tok.next(), i + 1)?;
                corners.push(Point3::new(x, y, z));
            }
            Some("endloop") => {
                if corners.len() != 3 {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("facet with {} vertices", corners.len()),
                    });
                }
                soup.push([corners[0], corners[1], corners[2]]);
                corners.clear();
            }
            _ => {}
        }
    }
    if soup.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(soup)
}

fn parse_stl_binary(bytes: &[u8]) -> Result<Vec<[Point3<f64>; 3]>> {
    if bytes.len() < 84 {
        return Err(Error::Parse {
            line: 0,
            message: "binary STL shorter than its header".into(),
        });
    }
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    if bytes.len() < 84 + 50 * n {
        return Err(Error::Parse {
            line: 0,
            message: format!("binary STL truncated: {n} facets declared"),
        });
    }
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    let f = |off: usize| f32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]]) as f64;
    let mut soup = Vec::with_capacity(n);
    for i in 0..n {
        let base = 84 + 50 * i + 12;
        let mut c = [Point3::origin(); 3];
        for (k, p) in c.iter_mut().enumerate() {
            let o = base + 12 * k;
            *p = Point3::new(f(o), f(o + 4), f(o + 8));
            if !p.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        soup.push(c);
    }
    Ok(soup)
}

fn bits_key(p: &Point3<f64>) -> [u64; 3] {
    // +0.0 folds -0.0 onto 0.0
    [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()]
}

fn weld(soup: Vec<[Point3<f64>; 3]>, tolerance: Option<f64>) -> Result<Triangulation> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles = Vec::with_capacity(soup.len());
    match tolerance {
        None => {
            let mut index: HashMap<[u64; 3], usize> = HashMap::new();
            for facet in &soup {
                let mut t = [0; 3];
                for (k, p) in facet.iter().enumerate() {
                    t[k] = *index.entry(bits_key(p)).or_insert_with(|| {
                        vertices.push(*p);
                        vertices.len() - 1
                    });
                }
                triangles.push(t);
            }
        }
        Some(tol) => {
            let cell = tol.max(f64::MIN_POSITIVE);
            let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
            let key = |p: &Point3<f64>| {
                [
                    (p.x / cell).floor() as i64,
                    (p.y / cell).floor() as i64,
                    (p.z / cell).floor() as i64,
                ]
            };
            for facet in &soup {
                let mut t = [0; 3];
                for (k, p) in facet.iter().enumerate() {
                    let c = key(p);
                    let mut found = None;
                    'search: for dx in -1..=1 {
                        for dy in -1..=1 {
                            for dz in -1..=1 {
                                if let Some(list) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                                    for &v in list {
                                        if (vertices[v] - p).norm() <= tol {
                                            found = Some(v);
                                            break 'search;
                                        }
                                    }
                                }
                            }
                        }
                    }
                    t[k] = found.unwrap_or_else(|| {
                        vertices.push(*p);
                        grid.entry(c).or_default().push(vertices.len() - 1);
                        vertices.len() - 1
                    });
                }
                triangles.push(t);
            }
        }
    }
    Triangulation::new(vertices, triangles)
}

fn parse_obj(text: &str) -> Result<Triangulation> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let x = parse_f64(tok.next(), i + 1)?;
                let y = parse_f64(tok.next(), i + 1)?;
                let z = parse_f64(tok.next(), i + 1)?;
                vertices.push(Point3::new(x, y, z));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in tok {
                    let first = t.split('/').next().unwrap_or("");
                    let raw: i64 = first.parse().map_err(|_| Error::Parse {
                        line: i + 1,
                        message: format!("invalid face index '{t}'"),
                    })?;
                    let v = if raw < 0 {
                        vertices.len() as i64 + raw
                    } else {
                        raw - 1
                    };
                    if v < 0 {
                        return Err(Error::Parse {
                            line: i + 1,
                            message: format!("face index {raw} out of range"),
                        });
                    }
                    idx.push(v as usize);
                }
                if idx.len() < 3 {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "face with fewer than 3 vertices".into(),
                    });
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Triangulation::new(vertices, triangles)
}

fn parse_msh(text: &str) -> Result<Triangulation> {
    let lines: Vec<&str> = text.lines().collect();
    let err = |line: usize, message: &str| Error::Parse {
        line: line + 1,
        message: message.to_string(),
    };
    let mut vertices = Vec::new();
    let mut node_index: HashMap<usize, usize> = HashMap::new();
    let mut elements: Vec<(usize, [usize; 3], usize)> = Vec::new();
    let mut surface_tags: Vec<usize> = Vec::new();
    let mut i = 0;
    let nums = |line: &str| -> Vec<String> { line.split_whitespace().map(str::to_string).collect() };
    let int = |s: &str, line: usize| -> Result<usize> {
        s.parse::<usize>().map_err(|_| err(line, &format!("invalid integer '{s}'")))
    };
    let line_at = |k: usize| -> Result<&str> { lines.get(k).copied().ok_or_else(|| err(k, "unexpected end of file")) };
    while i < lines.len() {
        match lines[i].trim() {
            "$Nodes" => {
                let head = nums(lines.get(i + 1).ok_or_else(|| err(i, "truncated $Nodes"))?);
                let blocks = int(head.first().ok_or_else(|| err(i + 1, "bad header"))?, i + 1)?;
                i += 2;
                for _ in 0..blocks {
                    let bh = nums(lines.get(i).ok_or_else(|| err(i, "truncated node block"))?);
                    if bh.len() < 4 {
                        return Err(err(i, "bad node block header"));
                    }
                    let n = int(&bh[3], i)?;
                    i += 1;
                    let tags: Vec<usize> = (0..n).map(|k| int(line_at(i + k)?.trim(), i + k)).collect::<Result<_>>()?;
                    i += n;
                    for (k, tag) in tags.into_iter().enumerate() {
                        let mut tok = line_at(i + k)?.split_whitespace();
                        let x = parse_f64(tok.next(), i + k + 1)?;
                        let y = parse_f64(tok.next(), i + k + 1)?;
                        let z = parse_f64(tok.next(), i + k + 1)?;
                        node_index.insert(tag, vertices.len());
                        vertices.push(Point3::new(x, y, z));
                    }
                    i += n;
                }
            }
            "$Elements" => {
                let head = nums(lines.get(i + 1).ok_or_else(|| err(i, "truncated $Elements"))?);
                let blocks = int(head.first().ok_or_else(|| err(i + 1, "bad header"))?, i + 1)?;
                i += 2;
                for _ in 0..blocks {
                    let bh = nums(lines.get(i).ok_or_else(|| err(i, "truncated element block"))?);
                    if bh.len() < 4 {
                        return Err(err(i, "bad element block header"));
                    }
                    let (dim, tag, ty, n) = (int(&bh[0], i)?, int(&bh[1], i)?, int(&bh[2], i)?, int(&bh[3], i)?);
                    i += 1;
                    if dim == 2 && ty == 2 {
                        if !surface_tags.contains(&tag) {
                            surface_tags.push(tag);
                        }
                        for k in 0..n {
                            let f = nums(line_at(i + k)?);
                            if f.len() < 4 {
                                return Err(err(i + k, "short triangle record"));
                            }
                            let mut t = [0; 3];
                            for j in 0..3 {
                                let node = int(&f[j + 1], i + k)?;
                                t[j] = *node_index.get(&node).ok_or_else(|| err(i + k, "unknown node tag"))?;
                            }
                            elements.push((int(&f[0], i + k)?, t, tag));
                        }
                    }
                    i += n;
                }
            }
            _ => i += 1,
        }
    }
    elements.sort_by_key(|e| e.0);
    let triangles = elements.iter().map(|e| e.1).collect();
    let mut mesh = Triangulation::new(vertices, triangles)?;
    if surface_tags.len() > 1 {
        mesh.patch_tags = Some(elements.iter().map(|e| e.2 - 1).collect());
    }
    Ok(mesh)
}

/// A named per-triangle scalar written as an `$ElementData` section.
#[derive(Debug, Clone)]
pub struct ElementData {
    pub name: String,
    pub values: Vec<f64>,
}

pub fn write_mesh(
    mesh: &Triangulation,
    brep: Option<&BRep>,
    path: &Path,
    format: SurfaceFormat,
) -> Result<()> {
    write_mesh_with_data(mesh, brep, &[], path, format)
}

pub fn write_mesh_with_data(
    mesh: &Triangulation,
    brep: Option<&BRep>,
    data: &[ElementData],
    path: &Path,
    format: SurfaceFormat,
) -> Result<()> {
    let bytes = match format {
        SurfaceFormat::Msh => msh_string(mesh, brep, data)?.into_bytes(),
        SurfaceFormat::Obj => obj_string(mesh).into_bytes(),
        SurfaceFormat::StlBinary => stl_binary_bytes(mesh),
        SurfaceFormat::StlAscii => stl_ascii_string(mesh).into_bytes(),
    };
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn obj_string(mesh: &Triangulation) -> String {
    let mut s = String::new();
    for p in &mesh.vertices {
        let _ = writeln!(s, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn stl_binary_bytes(mesh: &Triangulation) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * mesh.num_triangles());
    let mut header = [0u8; 80];
    let tag = b"binary STL";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.num_triangles() as u32).to_le_bytes());
    for t in 0..mesh.num_triangles() {
        let n = mesh.unit_normal(t);
        for c in n.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        for p in mesh.corners(t) {
            for c in p.iter() {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

pub fn stl_ascii_string(mesh: &Triangulation) -> String {
    let mut s = String::from("solid mesh\n");
    for t in 0..mesh.num_triangles() {
        let n = mesh.unit_normal(t);
        let _ = writeln!(s, "facet normal {} {} {}\nouter loop", n.x, n.y, n.z);
        for p in mesh.corners(t) {
            let _ = writeln!(s, "vertex {} {} {}", p.x, p.y, p.z);
        }
        s.push_str("endloop\nendfacet\n");
    }
    s.push_str("endsolid mesh\n");
    s
}

fn bbox_of<'a>(pts: impl Iterator<Item = &'a Point3<f64>>) -> String {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    format!("{} {} {} {} {} {}", lo[0], lo[1], lo[2], hi[0], hi[1], hi[2])
}

pub fn msh_string(mesh: &Triangulation, brep: Option<&BRep>, data: &[ElementData]) -> Result<String> {
    let nt = mesh.num_triangles();
    for d in data {
        if d.values.len() != nt {
            return Err(Error::InvalidArgument(format!(
                "element data '{}' has {} values for {} triangles",
                d.name,
                d.values.len(),
                nt
            )));
        }
    }
    let tags: Vec<usize> = match (&mesh.patch_tags, brep) {
        (Some(t), _) => t.clone(),
        (None, Some(_)) => {
            return Err(Error::InvalidArgument(
                "a boundary representation requires patch-tagged triangles".into(),
            ))
        }
        (None, None) => vec![0; nt],
    };
    let num_surfaces = match brep {
        Some(b) => b.faces.len(),
        None => tags.iter().max().map_or(0, |m| m + 1),
    };
    if tags.iter().any(|&t| t >= num_surfaces) {
        return Err(Error::InvalidArgument("patch tag without a matching face".into()));
    }

    let mut s = String::from("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n$Entities\n");
    let surface_tris: Vec<Vec<usize>> = {
        let mut v = vec![Vec::new(); num_surfaces];
        for (t, &tag) in tags.iter().enumerate() {
            v[tag].push(t);
        }
        v
    };
    match brep {
        Some(b) => {
            let _ = writeln!(s, "{} {} {} 0", b.points.len(), b.curves.len(), b.faces.len());
            for (i, p) in b.points.iter().enumerate() {
                let x = mesh.vertices[p.vertex];
                let _ = writeln!(s, "{} {:?} {:?} {:?} 0", i + 1, x.x, x.y, x.z);
            }
            for (i, c) in b.curves.iter().enumerate() {
                let bb = bbox_of(c.vertices.iter().map(|&v| &mesh.vertices[v]));
                match (c.start, c.end) {
                    (Some(a), Some(e)) if !c.closed => {
                        let _ = writeln!(s, "{} {} 0 2 {} -{}", i + 1, bb, a + 1, e + 1);
                    }
                    _ => {
                        let _ = writeln!(s, "{} {} 0 0", i + 1, bb);
                    }
                }
            }
            for (i, f) in b.faces.iter().enumerate() {
                let bb = bbox_of(
                    surface_tris[i]
                        .iter()
                        .flat_map(|&t| mesh.triangles[t].iter())
                        .map(|&v| &mesh.vertices[v]),
                );
                let uses: Vec<String> = f
                    .loops
                    .iter()
                    .flatten()
                    .map(|u| {
                        if u.reversed {
                            format!("-{}", u.curve + 1)
                        } else {
                            format!("{}", u.curve + 1)
                        }
                    })
                    .collect();
                let _ = writeln!(s, "{} {} 0 {} {}", i + 1, bb, uses.len(), uses.join(" "));
            }
        }
        None => {
            let _ = writeln!(s, "0 0 {} 0", num_surfaces);
            for (i, tris) in surface_tris.iter().enumerate() {
                let bb = bbox_of(tris.iter().flat_map(|&t| mesh.triangles[t].iter()).map(|&v| &mesh.vertices[v]));
                let _ = writeln!(s, "{} {} 0 0", i + 1, bb);
            }
        }
    }
    s.push_str("$EndEntities\n$Nodes\n");
    let nv = mesh.num_vertices();
    let _ = writeln!(s, "1 {nv} 1 {nv}\n2 1 0 {nv}");
    for i in 0..nv {
        let _ = writeln!(s, "{}", i + 1);
    }
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let curve_segments: Vec<Vec<(usize, usize)>> = brep
        .map(|b| b.curves.iter().map(|c| (0..c.num_segments()).map(|k| c.segment(k)).collect()).collect())
        .unwrap_or_default();
    let num_lines: usize = curve_segments.iter().map(Vec::len).sum();
    let blocks = surface_tris.iter().filter(|t| !t.is_empty()).count() + curve_segments.iter().filter(|c| !c.is_empty()).count();
    let total = nt + num_lines;
    let _ = writeln!(s, "{} {} 1 {}", blocks, total, total);
    for (i, tris) in surface_tris.iter().enumerate() {
        if tris.is_empty() {
            continue;
        }
        let _ = writeln!(s, "2 {} 2 {}", i + 1, tris.len());
        for &t in tris {
            let [a, b, c] = mesh.triangles[t];
            let _ = writeln!(s, "{} {} {} {}", t + 1, a + 1, b + 1, c + 1);
        }
    }
    let mut tag = nt;
    for (i, segs) in curve_segments.iter().enumerate() {
        if segs.is_empty() {
            continue;
        }
        let _ = writeln!(s, "1 {} 1 {}", i + 1, segs.len());
        for &(a, b) in segs {
            tag += 1;
            let _ = writeln!(s, "{} {} {}", tag, a + 1, b + 1);
        }
    }
    s.push_str("$EndElements\n");
    for d in data {
        let _ = writeln!(s, "$ElementData\n1\n\"{}\"\n1\n0.0\n3\n0\n1\n{}", d.name, nt);
        for (t, v) in d.values.iter().enumerate() {
            let _ = writeln!(s, "{} {}", t + 1, v);
        }
        s.push_str("$EndElementData\n");
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> Triangulation {
        Triangulation::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.1, 0.2, 0.7),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap()
    }

    fn stl_ascii_of(mesh: &Triangulation) -> String {
        stl_ascii_string(mesh)
    }

    #[test]
    fn stl_ascii_tetra_is_welded() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.stl");
        fs::write(&p, stl_ascii_of(&tetra())).unwrap();
        assert_eq!(SurfaceFormat::from_path(&p).unwrap(), SurfaceFormat::StlAscii);
        let m = load_surface(&p, SurfaceFormat::StlAscii).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_triangles(), 4);
    }

    #[test]
    fn stl_binary_round_trip_connectivity() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.stl");
        write_mesh(&tetra(), None, &p, SurfaceFormat::StlBinary).unwrap();
        assert_eq!(SurfaceFormat::from_path(&p).unwrap(), SurfaceFormat::StlBinary);
        let m = load_surface(&p, SurfaceFormat::StlBinary).unwrap();
        // welding numbers vertices by first appearance; compare through coordinates
        let t = tetra();
        let original = |q: &Point3<f64>| t.vertices.iter().position(|v| (v - q).norm() < 1e-6).unwrap();
        let mapped: Vec<[usize; 3]> = m.triangles.iter().map(|tri| tri.map(|v| original(&m.vertices[v]))).collect();
        assert_eq!(mapped, t.triangles);
    }

    #[test]
    fn stl_nan_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.stl");
        fs::write(
            &p,
            "solid x\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex nan 0 0\nvertex 0 1 0\nendloop\nendfacet\nendsolid x\n",
        )
        .unwrap();
        let e = load_surface(&p, SurfaceFormat::StlAscii).unwrap_err();
        assert_eq!(e.to_string(), "non-finite coordinate");
    }

    #[test]
    fn obj_square() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sq.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n").unwrap();
        let m = load_surface(&p, SurfaceFormat::Obj).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles()), (4, 2));
    }

    #[test]
    fn tolerance_welding_merges_near_duplicates() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let b2 = Point3::new(1.0 + 1e-9, 0.0, 0.0);
        let d = Point3::new(1.0, 1.0, 0.0);
        let soup = vec![[a, b, c], [b2, d, c]];
        assert_eq!(weld(soup.clone(), None).unwrap().num_vertices(), 5);
        assert_eq!(weld(soup, Some(1e-6)).unwrap().num_vertices(), 4);
    }

    #[test]
    fn msh_and_obj_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = tetra();
        m.vertices[3] = Point3::new(0.1 + 0.2, 1.0 / 3.0, -1e-300);
        for fmt in [SurfaceFormat::Msh, SurfaceFormat::Obj] {
            let p = dir.path().join(format!("t.{fmt:?}"));
            write_mesh(&m, None, &p, fmt).unwrap();
            let back = load_surface(&p, fmt).unwrap();
            assert_eq!(back.triangles, m.triangles);
            for (x, y) in back.vertices.iter().zip(&m.vertices) {
                for k in 0..3 {
                    assert_eq!(x[k].to_bits(), y[k].to_bits());
                }
            }
        }
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let e = write_mesh(&tetra(), None, Path::new("/nonexistent/dir/x.msh"), SurfaceFormat::Msh).unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
    }

    #[test]
    fn closed_curves_keep_their_closing_segment() {
        use crate::atlas::{build_atlas, AtlasOptions};

        let model = crate::fixtures::disk(3, 12);
        let atlas = build_atlas(&model, &AtlasOptions::default()).unwrap();
        let text = msh_string(&atlas.tagged_model(&model), Some(&atlas.brep), &[]).unwrap();
        let lines: usize = atlas.brep.curves.iter().map(|c| c.num_segments()).sum();
        let boundary_edges = crate::mesh::Adjacency::new(model.num_vertices(), &model.triangles).boundary_edge_count();
        assert_eq!(lines, boundary_edges);
        let header = text.lines().skip_while(|l| *l != "$Elements").nth(1).unwrap();
        let total: usize = header.split(' ').nth(1).unwrap().parse().unwrap();
        assert_eq!(total, model.num_triangles() + boundary_edges);
    }

    #[test]
    fn truncated_msh_is_parse_error() {
        let text = msh_string(&tetra(), None, &[]).unwrap();
        let cut: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_msh(&cut), Err(Error::Parse { .. })));
    }
}
