//! Shared test oracles, all deliberately independent of the engine code
//! they check: plain scans with explicit masks, and a selection-based
//! Dijkstra over the materialized full graph.

#![allow(dead_code)]

use graph_dbd::{lp_distance, PointSet};

/// Edge weight computed through the general power path only, independent of
/// the library's fast paths: `(Σ|Δ|^p)^(1/p·q)` step by step.
pub fn oracle_edge_weight(a: &[f64], b: &[f64], p: f64, q: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.len() {
        sum += (a[i] - b[i]).abs().powf(p);
    }
    sum.powf(1.0 / p).powf(q)
}

/// Multi-goal shortest paths on the explicit full graph, selection-based
/// (no heap): O(n²) scans, nothing shared with the engines.
pub fn full_graph_dijkstra(
    points: &PointSet,
    goal_points: &[usize],
    p: f64,
    q: f64,
) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    for &g in goal_points {
        dist[g] = 0.0;
    }
    loop {
        let mut u: Option<usize> = None;
        for i in 0..n {
            if !done[i] && dist[i].is_finite() {
                u = match u {
                    None => Some(i),
                    Some(j) if dist[i] < dist[j] => Some(i),
                    keep => keep,
                };
            }
        }
        let Some(u) = u else { break };
        done[u] = true;
        for v in 0..n {
            if !done[v] {
                let w = oracle_edge_weight(points.point(u), points.point(v), p, q);
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                }
            }
        }
    }
    dist
}

/// Dijkstra over an explicit edge list (undirected), selection-based.
pub fn edge_list_dijkstra(n: usize, edges: &[(usize, usize, f64)], goal_points: &[usize]) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b, w) in edges {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    for &g in goal_points {
        dist[g] = 0.0;
    }
    loop {
        let mut u: Option<usize> = None;
        for i in 0..n {
            if !done[i] && dist[i].is_finite() {
                u = match u {
                    None => Some(i),
                    Some(j) if dist[i] < dist[j] => Some(i),
                    keep => keep,
                };
            }
        }
        let Some(u) = u else { break };
        done[u] = true;
        for &(v, w) in &adj[u] {
            if !done[v] && dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
            }
        }
    }
    dist
}

/// Masked brute-force nearest neighbor: the index contract, restated as a
/// scan. Shares only the public distance function with the library.
pub fn masked_nearest(
    points: &PointSet,
    closed: &[bool],
    p: f64,
    query: usize,
) -> Option<(usize, f64)> {
    let mut best: Option<(f64, usize)> = None;
    for i in 0..points.len() {
        if i == query || closed[i] {
            continue;
        }
        let d = lp_distance(points.point(query), points.point(i), p).unwrap();
        let take = match best {
            None => true,
            Some((bd, bi)) => d < bd || (d == bd && i < bi),
        };
        if take {
            best = Some((d, i));
        }
    }
    best.map(|(d, i)| (i, d))
}

/// Brute-force k-NN: full sort by (distance, index).
pub fn brute_knn(points: &PointSet, p: f64, query: usize, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = (0..points.len())
        .filter(|&i| i != query)
        .map(|i| {
            (
                i,
                lp_distance(points.point(query), points.point(i), p).unwrap(),
            )
        })
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Brute-force union-symmetrized k-NN edge set as sorted (a, b) pairs.
pub fn brute_knn_union_edges(points: &PointSet, p: f64, k: usize) -> Vec<(usize, usize)> {
    let mut edges = std::collections::BTreeSet::new();
    for i in 0..points.len() {
        for (j, _) in brute_knn(points, p, i, k) {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    edges.into_iter().collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Deterministic xorshift-style stream for plain (non-proptest) randomized
/// tests.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform grid value in [-1, 1] with step 1/8 — coarse enough to
    /// produce genuine distance ties.
    pub fn grid_f64(&mut self) -> f64 {
        (self.below(17) as f64 - 8.0) / 8.0
    }

    pub fn uniform_points(&mut self, n: usize, d: usize) -> PointSet {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| self.unit_f64()).collect())
            .collect();
        PointSet::new(rows).unwrap()
    }

    pub fn distinct_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.below(n - i);
            all.swap(i, j);
        }
        let mut picked = all[..count].to_vec();
        picked.sort_unstable();
        picked
    }
}
