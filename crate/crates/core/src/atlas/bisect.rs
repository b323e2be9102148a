use std::collections::VecDeque;

use super::Patch;
use crate::error::{Error, Result};
use crate::mesh::Adjacency;

/// Edge-neighbors of every triangle, sorted.
fn dual_graph(patch: &Patch) -> Vec<Vec<usize>> {
    let adj: Adjacency = patch.adjacency();
    (0..patch.num_triangles())
        .map(|t| {
            let mut n: Vec<usize> = (0..3).filter_map(|k| adj.neighbor(t, k)).collect();
            n.sort_unstable();
            n
        })
        .collect()
}

/// Farthest triangle from `seed` in the dual graph (smallest id on ties)
/// and the BFS distances.
fn farthest(graph: &[Vec<usize>], seed: usize) -> (usize, Vec<usize>) {
    let mut dist = vec![usize::MAX; graph.len()];
    dist[seed] = 0;
    let mut queue = VecDeque::from([seed]);
    let mut best = seed;
    while let Some(t) = queue.pop_front() {
        if dist[t] > dist[best] || (dist[t] == dist[best] && t < best) {
            best = t;
        }
        for &n in &graph[t] {
            if dist[n] == usize::MAX {
                dist[n] = dist[t] + 1;
                queue.push_back(n);
            }
        }
    }
    (best, dist)
}

/// Assigns every triangle to part 0 or 1.
pub(crate) fn bisect_labels(patch: &Patch) -> Result<Vec<u8>> {
    let nt = patch.num_triangles();
    if nt < 2 {
        return Err(Error::PatchTooSmall(nt));
    }
    let graph = dual_graph(patch);
    let (a, dist0) = farthest(&graph, 0);
    if dist0.iter().any(|&d| d == usize::MAX) {
        // disconnected input: the component of triangle 0 against the rest
        return Ok(dist0.iter().map(|&d| u8::from(d == usize::MAX)).collect());
    }
    let (b, _) = farthest(&graph, a);
    let mut label = vec![u8::MAX; nt];
    let mut size = [1usize, 1];
    label[a] = 0;
    label[b] = 1;
    let mut frontier: [VecDeque<usize>; 2] = [
        graph[a].iter().copied().collect(),
        graph[b].iter().copied().collect(),
    ];
    let mut assigned = 2;
    while assigned < nt {
        // the smaller part grows unless its frontier is exhausted
        let order = if size[0] <= size[1] { [0, 1] } else { [1, 0] };
        let mut grew = false;
        for p in order {
            while let Some(t) = frontier[p].pop_front() {
                if label[t] != u8::MAX {
                    continue;
                }
                label[t] = p as u8;
                size[p] += 1;
                assigned += 1;
                frontier[p].extend(graph[t].iter().copied().filter(|&n| label[n] == u8::MAX));
                grew = true;
                break;
            }
            if grew {
                break;
            }
        }
        if !grew {
            break;
        }
    }
    Ok(label)
}

/// Splits a patch into two edge-connected parts of nearly equal size by
/// balanced breadth-first growth from an approximate diameter pair.
pub fn bisect_patch(patch: &Patch) -> Result<(Patch, Patch)> {
    let label = bisect_labels(patch)?;
    let part = |p: u8| -> Vec<usize> { (0..label.len()).filter(|&t| label[t] == p).collect() };
    Ok((patch.subpatch(&part(0))?, patch.subpatch(&part(1))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn quad_splits_in_halves() {
        let m = fixtures::square_frame(1.0, 0.5);
        let quad = Patch::from_mesh(m).unwrap().subpatch(&[0, 1]).unwrap();
        let (a, b) = bisect_patch(&quad).unwrap();
        assert_eq!((a.num_triangles(), b.num_triangles()), (1, 1));
    }

    #[test]
    fn single_triangle_rejected() {
        let p = Patch::from_mesh(fixtures::hexagon_fan()).unwrap().subpatch(&[3]).unwrap();
        assert!(matches!(bisect_patch(&p), Err(Error::PatchTooSmall(1))));
    }

    #[test]
    fn tube_cut_once() {
        let p = Patch::from_mesh(fixtures::tube(10, 50, 1.0, 30.0)).unwrap();
        let (a, b) = bisect_patch(&p).unwrap();
        let (ta, tb) = (a.num_triangles(), b.num_triangles());
        assert_eq!(ta + tb, 1000);
        assert!(ta.abs_diff(tb) <= 200);
        for part in [&a, &b] {
            let e = part.euler_check().unwrap();
            assert_eq!(e.topology.components, 1);
            // one original rim plus exactly one cut loop
            assert_eq!(e.topology.b, 2);
            assert!(e.parametrizable);
        }
    }

    #[test]
    fn sphere_halves_are_disks() {
        let p = Patch::from_mesh(fixtures::uv_sphere(16, 10, 1.0)).unwrap();
        let (a, b) = bisect_patch(&p).unwrap();
        assert!(a.num_triangles().abs_diff(b.num_triangles()) <= p.num_triangles() / 5);
        assert!(a.euler_check().unwrap().parametrizable);
        assert!(b.euler_check().unwrap().parametrizable);
    }
}
