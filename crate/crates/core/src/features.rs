//! Feature-edge detection by normal angle and segmentation into model faces.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{extract_submesh, Adjacency, Triangulation};

pub const DEFAULT_FEATURE_ANGLE: f64 = 40.0;

/// Feature flags per adjacency edge.
#[derive(Debug, Clone)]
pub struct FeatureEdgeSet {
    pub threshold_deg: f64,
    /// indexed like `Adjacency::edges`
    pub tagged: Vec<bool>,
    /// angle between the adjacent unit normals in degrees; `None` on boundary edges
    pub angles: Vec<Option<f64>>,
}

impl FeatureEdgeSet {
    pub fn count(&self) -> usize {
        self.tagged.iter().filter(|&&t| t).count()
    }

    pub fn interior_count(&self) -> usize {
        self.tagged
            .iter()
            .zip(&self.angles)
            .filter(|(t, a)| **t && a.is_some())
            .count()
    }

    pub fn is_feature(&self, edge: usize) -> bool {
        self.tagged[edge]
    }
}

/// Tags every boundary edge and every interior edge whose adjacent triangle
/// normals differ by more than `threshold_deg`. Convex and concave creases
/// are treated alike. A threshold of 180 disables interior detection.
pub fn detect_feature_edges(
    mesh: &Triangulation,
    adj: &Adjacency,
    threshold_deg: f64,
) -> Result<FeatureEdgeSet> {
    if !(threshold_deg > 0.0 && threshold_deg <= 180.0) {
        return Err(Error::InvalidArgument(format!(
            "feature angle {threshold_deg} outside (0, 180]"
        )));
    }
    let mut tagged = Vec::with_capacity(adj.edges.len());
    let mut angles = Vec::with_capacity(adj.edges.len());
    for e in &adj.edges {
        match e.triangles.as_slice() {
            [t0, t1] => {
                let n0 = mesh.unit_normal(*t0);
                let n1 = mesh.unit_normal(*t1);
                let a = n0.cross(&n1).norm().atan2(n0.dot(&n1)).to_degrees();
                tagged.push(a > threshold_deg);
                angles.push(Some(a));
            }
            _ => {
                tagged.push(true);
                angles.push(None);
            }
        }
    }
    Ok(FeatureEdgeSet {
        threshold_deg,
        tagged,
        angles,
    })
}

/// Partition of the triangles into model faces bounded by feature edges.
#[derive(Debug, Clone, Serialize)]
pub struct PatchSet {
    pub patch_of_triangle: Vec<usize>,
    pub count: usize,
    /// per patch, boundary loops as global vertex sequences
    pub loops: Vec<Vec<Vec<usize>>>,
}

impl PatchSet {
    pub fn triangles_of(&self, patch: usize) -> Vec<usize> {
        self.patch_of_triangle
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == patch)
            .map(|(t, _)| t)
            .collect()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (t, &p) in self.patch_of_triangle.iter().enumerate() {
            out[p].push(t);
        }
        out
    }
}

/// Flood-fills triangles across non-feature edges. Patch ids follow the
/// smallest triangle id of each patch.
pub fn segment_patches(
    mesh: &Triangulation,
    adj: &Adjacency,
    features: &FeatureEdgeSet,
) -> Result<PatchSet> {
    let nt = mesh.num_triangles();
    let mut patch = vec![usize::MAX; nt];
    let mut count = 0;
    let mut stack = Vec::new();
    for seed in 0..nt {
        if patch[seed] != usize::MAX {
            continue;
        }
        patch[seed] = count;
        stack.push(seed);
        while let Some(t) = stack.pop() {
            for k in 0..3 {
                if features.is_feature(adj.triangle_edges[t][k]) {
                    continue;
                }
                if let Some(n) = adj.neighbor(t, k) {
                    if patch[n] == usize::MAX {
                        patch[n] = count;
                        stack.push(n);
                    }
                }
            }
        }
        count += 1;
    }

    let mut members = vec![Vec::new(); count];
    for (t, &p) in patch.iter().enumerate() {
        members[p].push(t);
    }
    let loops = members
        .iter()
        .map(|tris| {
            let (sub, global) = extract_submesh(mesh, tris);
            let a = Adjacency::new(sub.num_vertices(), &sub.triangles);
            let loops = a.boundary_loops(&sub.triangles)?;
            Ok(loops
                .into_iter()
                .map(|l| l.into_iter().map(|v| global[v]).collect())
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatchSet {
        patch_of_triangle: patch,
        count,
        loops,
    })
}
