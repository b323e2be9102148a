use std::collections::HashMap;

use crate::error::{Error, Result};

/// An undirected edge keyed by its sorted vertex pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub triangles: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles.len() == 1
    }

    pub fn is_manifold(&self) -> bool {
        self.triangles.len() <= 2
    }
}

/// Edge table, vertex stars and per-triangle edge references.
///
/// Edges are stored sorted by vertex pair so every traversal over them is
/// deterministic.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub edges: Vec<Edge>,
    pub triangle_edges: Vec<[usize; 3]>,
    pub vertex_triangles: Vec<Vec<usize>>,
    index: HashMap<(usize, usize), usize>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Adjacency {
    pub fn new(num_vertices: usize, triangles: &[[usize; 3]]) -> Self {
        let mut half: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(triangles.len() * 3);
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = key(tri[k], tri[(k + 1) % 3]);
                half.push((a, b, t, k));
            }
        }
        half.sort_unstable();

        let mut edges: Vec<Edge> = Vec::new();
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        let mut index = HashMap::with_capacity(half.len() / 2 + 1);
        for (a, b, t, k) in half {
            if edges.last().map(|e| e.vertices) != Some([a, b]) {
                index.insert((a, b), edges.len());
                edges.push(Edge {
                    vertices: [a, b],
                    triangles: Vec::with_capacity(2),
                });
            }
            let e = edges.len() - 1;
            edges[e].triangles.push(t);
            triangle_edges[t][k] = e;
        }

        let mut vertex_triangles = vec![Vec::new(); num_vertices];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_triangles[v].push(t);
            }
        }

        Adjacency {
            edges,
            triangle_edges,
            vertex_triangles,
            index,
        }
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.index.get(&key(a, b)).copied()
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&Edge> {
        self.edge_id(a, b).map(|e| &self.edges[e])
    }

    pub fn is_manifold(&self) -> bool {
        self.edges.iter().all(Edge::is_manifold)
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    /// Triangle across edge slot `k` of triangle `t`, if any.
    pub fn neighbor(&self, t: usize, k: usize) -> Option<usize> {
        let e = &self.edges[self.triangle_edges[t][k]];
        match e.triangles.as_slice() {
            [a, b] if *a == t => Some(*b),
            [a, b] if *b == t => Some(*a),
            _ => None,
        }
    }

    /// Vertices connected to `v` by an edge, sorted.
    pub fn vertex_neighbors(&self, v: usize, triangles: &[[usize; 3]]) -> Vec<usize> {
        let mut out: Vec<usize> = self.vertex_triangles[v]
            .iter()
            .flat_map(|&t| triangles[t])
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Number of edge-connected triangle components.
    pub fn component_count(&self, num_triangles: usize) -> usize {
        let mut seen = vec![false; num_triangles];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..num_triangles {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(t) = stack.pop() {
                for k in 0..3 {
                    if let Some(n) = self.neighbor(t, k) {
                        if !seen[n] {
                            seen[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
        count
    }

    /// Traces the boundary loops, each as the ordered vertex sequence with the
    /// surface on the left of the walking direction.
    ///
    /// At a pinched vertex the walk rotates through the fan of the incoming
    /// triangle, so the vertex appears once per fan. Each loop starts at its
    /// smallest vertex; loops are sorted by that vertex.
    pub fn boundary_loops(&self, triangles: &[[usize; 3]]) -> Result<Vec<Vec<usize>>> {
        if let Some(e) = self.edges.iter().find(|e| !e.is_manifold()) {
            return Err(Error::NonManifold(format!(
                "edge ({}, {}) has {} adjacent triangles",
                e.vertices[0],
                e.vertices[1],
                e.triangles.len()
            )));
        }
        let mut visited = vec![false; self.edges.len()];
        let mut loops = Vec::new();
        for start in 0..self.edges.len() {
            if !self.edges[start].is_boundary() || visited[start] {
                continue;
            }
            let t0 = self.edges[start].triangles[0];
            let k0 = (0..3).find(|&k| self.triangle_edges[t0][k] == start).unwrap();
            let (mut t, mut k) = (t0, k0);
            let mut lp = Vec::new();
            loop {
                let e = self.triangle_edges[t][k];
                if visited[e] {
                    return Err(Error::NonManifold(
                        "boundary walk revisited an edge".into(),
                    ));
                }
                visited[e] = true;
                lp.push(triangles[t][k]);
                // rotate around the head vertex until the next boundary edge
                let head = triangles[t][(k + 1) % 3];
                let (mut ct, mut ck) = (t, (k + 1) % 3);
                let mut guard = 0;
                loop {
                    let ce = self.triangle_edges[ct][ck];
                    if self.edges[ce].is_boundary() {
                        break;
                    }
                    let other = self.neighbor(ct, ck).unwrap();
                    // in `other` the shared edge runs into `head`; step to the edge leaving it
                    let pos = (0..3).find(|&j| triangles[other][j] == head).unwrap();
                    ct = other;
                    ck = pos;
                    guard += 1;
                    if guard > self.vertex_triangles[head].len() + 1 {
                        return Err(Error::NonManifold(format!(
                            "inconsistent orientation around vertex {head}"
                        )));
                    }
                }
                t = ct;
                k = ck;
                if self.triangle_edges[t][k] == start {
                    break;
                }
            }
            // rotate to start at the smallest vertex
            let (pos, _) = lp.iter().enumerate().min_by_key(|(_, &v)| v).unwrap();
            lp.rotate_left(pos);
            loops.push(lp);
        }
        loops.sort_by_key(|l| l[0]);
        Ok(loops)
    }
}
