use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// Indexed triangle surface: 3D vertices and counter-clockwise triangles.
///
/// `patch_tags`, when present, assigns every triangle to a model face.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Triangulation {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub patch_tags: Option<Vec<usize>>,
}

impl Triangulation {
    /// Builds a triangulation after checking indices and coordinates.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if vertices.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite);
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidTriangle {
                    triangle: i,
                    reason: "vertex index out of range".into(),
                });
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidTriangle {
                    triangle: i,
                    reason: "repeated vertex index".into(),
                });
            }
        }
        Ok(Triangulation {
            vertices,
            triangles,
            patch_tags: None,
        })
    }

    pub fn with_patch_tags(mut self, tags: Vec<usize>) -> Self {
        debug_assert_eq!(tags.len(), self.triangles.len());
        self.patch_tags = Some(tags);
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Area-weighted normal (twice the area in magnitude).
    pub fn scaled_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn unit_normal(&self, t: usize) -> Vector3<f64> {
        let n = self.scaled_normal(t);
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            n
        }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.scaled_normal(t).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        (self.vertices[a] - self.vertices[b]).norm()
    }

    /// Drops vertices not referenced by any triangle and renumbers the rest,
    /// keeping their relative order. Returns the old index of each kept vertex.
    pub fn compact(&mut self) -> Vec<usize> {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut kept = Vec::new();
        for (i, u) in used.iter().enumerate() {
            if *u {
                remap[i] = kept.len();
                kept.push(i);
            }
        }
        self.vertices = kept.iter().map(|&i| self.vertices[i]).collect();
        for t in &mut self.triangles {
            for v in t.iter_mut() {
                *v = remap[*v];
            }
        }
        kept
    }
}

/// Copies the listed triangles into a standalone triangulation.
/// Returns the new mesh and, per local vertex, its index in `mesh`.
/// Local vertices are numbered by increasing global index.
pub fn extract_submesh(mesh: &Triangulation, triangles: &[usize]) -> (Triangulation, Vec<usize>) {
    let mut global: Vec<usize> = triangles.iter().flat_map(|&t| mesh.triangles[t]).collect();
    global.sort_unstable();
    global.dedup();
    let local_of = |g: usize| global.binary_search(&g).unwrap();
    let tris = triangles
        .iter()
        .map(|&t| {
            let [a, b, c] = mesh.triangles[t];
            [local_of(a), local_of(b), local_of(c)]
        })
        .collect();
    let vertices = global.iter().map(|&g| mesh.vertices[g]).collect();
    (
        Triangulation {
            vertices,
            triangles: tris,
            patch_tags: None,
        },
        global,
    )
}
