use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::boundary::apply_boundary;
use super::weights::{corner_angle, fem_weight, mvc_weight};
use crate::atlas::Patch;
use crate::error::{Error, Result};
use crate::mesh::Triangulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// mean value coordinates, positive and non-symmetric
    Mvc,
    /// cotangent weights of linear finite elements, symmetric
    Fem,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mvc" => Ok(Scheme::Mvc),
            "fem" => Ok(Scheme::Fem),
            _ => Err(Error::InvalidArgument(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Treatment of boundary loops other than the outer one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HolePolicy {
    /// fill holes up to the vertex threshold, free (Neumann) above it
    Auto,
    Neumann,
    Fill,
}

impl std::str::FromStr for HolePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(HolePolicy::Auto),
            "neumann" => Ok(HolePolicy::Neumann),
            "fill" => Ok(HolePolicy::Fill),
            _ => Err(Error::InvalidArgument(format!("unknown hole policy '{s}'"))),
        }
    }
}

/// A triangle feeding the stencil. Virtual triangles (hole filling) carry
/// prescribed angles and lengths instead of coordinates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StencilTriangle {
    pub nodes: [usize; 3],
    /// angle at `nodes[k]`
    pub angles: [f64; 3],
    /// length of the edge `nodes[k] -> nodes[k + 1]`
    pub lengths: [f64; 3],
}

pub(crate) fn mesh_stencil_triangles(mesh: &Triangulation) -> Result<Vec<StencilTriangle>> {
    mesh.triangles
        .iter()
        .map(|&nodes| {
            let p = nodes.map(|v| mesh.vertices[v]);
            let mut lengths = [0.0; 3];
            for k in 0..3 {
                lengths[k] = (p[(k + 1) % 3] - p[k]).norm();
                if !(lengths[k] > 0.0) {
                    return Err(Error::Degenerate(format!(
                        "zero-length edge ({}, {})",
                        nodes[k],
                        nodes[(k + 1) % 3]
                    )));
                }
            }
            let angles = [
                corner_angle(&p[0], &p[1], &p[2]),
                corner_angle(&p[1], &p[2], &p[0]),
                corner_angle(&p[2], &p[0], &p[1]),
            ];
            Ok(StencilTriangle {
                nodes,
                angles,
                lengths,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectedWeight {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Directed edge weights, sorted by `(from, to)`.
pub(crate) fn stencil_weights(scheme: Scheme, tris: &[StencilTriangle]) -> Result<Vec<DirectedWeight>> {
    let mut out = Vec::new();
    match scheme {
        Scheme::Mvc => {
            // angles at the tail vertex on each side of the directed edge
            let mut acc: BTreeMap<(usize, usize), (Vec<f64>, f64)> = BTreeMap::new();
            for t in tris {
                for k in 0..3 {
                    let (i, j) = (t.nodes[k], t.nodes[(k + 1) % 3]);
                    let l = t.lengths[k];
                    acc.entry((i, j)).or_insert_with(|| (Vec::new(), l)).0.push(t.angles[k]);
                    acc.entry((j, i))
                        .or_insert_with(|| (Vec::new(), l))
                        .0
                        .push(t.angles[(k + 1) % 3]);
                }
            }
            for ((from, to), (angles, l)) in acc {
                if angles.len() > 2 {
                    return Err(Error::NonManifold(format!("edge ({from}, {to}) in more than two triangles")));
                }
                let weight = mvc_weight(angles[0], angles.get(1).copied(), l)?;
                out.push(DirectedWeight { from, to, weight });
            }
        }
        Scheme::Fem => {
            let mut acc: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
            for t in tris {
                for k in 0..3 {
                    let (i, j) = (t.nodes[k], t.nodes[(k + 1) % 3]);
                    let key = (i.min(j), i.max(j));
                    acc.entry(key).or_default().push(t.angles[(k + 2) % 3]);
                }
            }
            let mut sym = Vec::with_capacity(acc.len() * 2);
            for ((a, b), angles) in acc {
                if angles.len() > 2 {
                    return Err(Error::NonManifold(format!("edge ({a}, {b}) in more than two triangles")));
                }
                let weight = fem_weight(angles[0], angles.get(1).copied())?;
                sym.push(DirectedWeight { from: a, to: b, weight });
                sym.push(DirectedWeight { from: b, to: a, weight });
            }
            sym.sort_by_key(|w| (w.from, w.to));
            out = sym;
        }
    }
    Ok(out)
}

/// Directed scheme weights of every mesh edge, sorted by `(from, to)`.
pub fn mesh_weights(mesh: &Triangulation, scheme: Scheme) -> Result<Vec<DirectedWeight>> {
    stencil_weights(scheme, &mesh_stencil_triangles(mesh)?)
}

/// How one inner boundary loop was treated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum HoleTreatment {
    Neumann,
    PseudoCenter {
        /// node id of the auxiliary unknown (after the patch vertices)
        node: usize,
        /// radius of the circle whose circumference equals the hole perimeter
        radius: f64,
        /// angle at the center subtended by each hole edge, `l_j / r`
        angles: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoleInfo {
    pub loop_index: usize,
    pub vertex_count: usize,
    pub treatment: HoleTreatment,
}

/// The assembled difference scheme of a patch.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeWeights {
    pub scheme: Scheme,
    pub weights: Vec<DirectedWeight>,
    pub outer_loop: usize,
    pub holes: Vec<HoleInfo>,
}

impl SchemeWeights {
    pub fn pseudo_centers(&self) -> impl Iterator<Item = usize> + '_ {
        self.holes.iter().filter_map(|h| match h.treatment {
            HoleTreatment::PseudoCenter { node, .. } => Some(node),
            HoleTreatment::Neumann => None,
        })
    }

    /// Weights leaving `node`.
    pub fn row(&self, node: usize) -> &[DirectedWeight] {
        let lo = self.weights.partition_point(|w| w.from < node);
        let hi = self.weights.partition_point(|w| w.from <= node);
        &self.weights[lo..hi]
    }
}

/// Sparse system `A x = b` over the free nodes, two right-hand sides
/// (one per parametric coordinate).
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub size: usize,
    /// `(row, col, value)`; duplicates are summed
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: [Vec<f64>; 2],
    pub node_of_unknown: Vec<usize>,
    pub unknown_of_node: Vec<Option<usize>>,
    /// Dirichlet values of the fixed nodes
    pub fixed: Vec<Option<[f64; 2]>>,
}

impl LinearSystem {
    /// Builds one row `sum_j w_ij (x_i - x_j) = 0` per free node.
    pub fn from_weights(num_nodes: usize, weights: &[DirectedWeight], fixed: Vec<Option<[f64; 2]>>) -> Self {
        let mut unknown_of_node = vec![None; num_nodes];
        let mut node_of_unknown = Vec::new();
        for (n, f) in fixed.iter().enumerate() {
            if f.is_none() {
                unknown_of_node[n] = Some(node_of_unknown.len());
                node_of_unknown.push(n);
            }
        }
        let size = node_of_unknown.len();
        let mut entries = Vec::with_capacity(weights.len() + size);
        let mut rhs = [vec![0.0; size], vec![0.0; size]];
        let mut diag = vec![0.0; size];
        for w in weights {
            let Some(row) = unknown_of_node[w.from] else {
                continue;
            };
            diag[row] += w.weight;
            match (unknown_of_node[w.to], fixed[w.to]) {
                (Some(col), _) => entries.push((row, col, -w.weight)),
                (None, Some(x)) => {
                    rhs[0][row] += w.weight * x[0];
                    rhs[1][row] += w.weight * x[1];
                }
                (None, None) => unreachable!(),
            }
        }
        for (r, d) in diag.into_iter().enumerate() {
            entries.push((r, r, d));
        }
        LinearSystem {
            size,
            entries,
            rhs,
            node_of_unknown,
            unknown_of_node,
            fixed,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Infinity norm of the matrix.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.size];
        for &(r, _, v) in &self.entries {
            rows[r] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.size];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    /// Node values with the unknowns filled in from `x`.
    pub fn scatter(&self, x: &[Vec<f64>; 2]) -> Vec<[f64; 2]> {
        (0..self.fixed.len())
            .map(|n| match (self.fixed[n], self.unknown_of_node[n]) {
                (Some(v), _) => v,
                (None, Some(u)) => [x[0][u], x[1][u]],
                (None, None) => unreachable!(),
            })
            .collect()
    }
}

/// Evaluates `sum_j w_ij (x_i - x_j)` at every node that owns a row.
pub fn scheme_residual(weights: &[DirectedWeight], values: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; values.len()];
    for w in weights {
        r[w.from] += w.weight * (values[w.from] - values[w.to]);
    }
    r
}

/// Assembles the difference scheme of a disk-like patch: the outer loop is
/// fixed on the unit circle, every other vertex is unknown. Holes with at
/// most `hole_threshold` vertices (policy `Auto`) or all holes (policy
/// `Fill`) receive a pseudo-center unknown coupled through virtual isosceles
/// triangles; the others keep the free (Neumann) treatment.
pub fn assemble_system(
    patch: &Patch,
    scheme: Scheme,
    hole_policy: HolePolicy,
    hole_threshold: usize,
) -> Result<(SchemeWeights, LinearSystem)> {
    if patch.loops.is_empty() {
        return Err(Error::NoBoundary);
    }
    let boundary = apply_boundary(patch)?;
    let nv = patch.mesh.num_vertices();
    let mut tris = mesh_stencil_triangles(&patch.mesh)?;
    let mut holes = Vec::new();
    let mut next_node = nv;
    for (li, lp) in patch.loops.iter().enumerate() {
        if li == boundary.outer_loop {
            continue;
        }
        let fill = match hole_policy {
            HolePolicy::Neumann => false,
            HolePolicy::Fill => true,
            HolePolicy::Auto => lp.len() <= hole_threshold,
        };
        if !fill {
            holes.push(HoleInfo {
                loop_index: li,
                vertex_count: lp.len(),
                treatment: HoleTreatment::Neumann,
            });
            continue;
        }
        let center = next_node;
        next_node += 1;
        let n = lp.len();
        let lengths: Vec<f64> = (0..n).map(|j| patch.mesh.edge_length(lp[j], lp[(j + 1) % n])).collect();
        let perimeter: f64 = lengths.iter().sum();
        let radius = perimeter / (2.0 * PI);
        let angles: Vec<f64> = lengths.iter().map(|l| l / radius).collect();
        for j in 0..n {
            let apex = angles[j];
            let base = 0.5 * (PI - apex);
            tris.push(StencilTriangle {
                nodes: [lp[j], lp[(j + 1) % n], center],
                angles: [base, base, apex],
                lengths: [lengths[j], radius, radius],
            });
        }
        holes.push(HoleInfo {
            loop_index: li,
            vertex_count: n,
            treatment: HoleTreatment::PseudoCenter {
                node: center,
                radius,
                angles,
            },
        });
    }
    let weights = stencil_weights(scheme, &tris)?;
    let mut fixed = vec![None; next_node];
    for &(v, uv) in &boundary.assignments {
        fixed[v] = Some([uv.x, uv.y]);
    }
    let system = LinearSystem::from_weights(next_node, &weights, fixed);
    Ok((
        SchemeWeights {
            scheme,
            weights,
            outer_loop: boundary.outer_loop,
            holes,
        },
        system,
    ))
}
