//! Explicit k-NN graph construction and classic multi-goal Dijkstra over it.
//!
//! These are the baselines the full-graph engine is compared against: the
//! graph is an approximation (points in components with no goal stay
//! unreached), but Dijkstra on it is exact for the graph it is given.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Result};
use crate::metric::{pow_weight, MetricParams, PointSet};
use crate::nn_index::NnIndex;

use super::{GoalSet, ShortestPathResult};

/// Undirected weighted graph in CSR form; both directions stored.
#[derive(Debug, Clone)]
pub struct SparseGraph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseGraph {
    /// Builds from undirected edges (each pair listed once).
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a}, {b}) out of range for n={n}")));
            }
            if a == b {
                return Err(invalid(format!("self-loop on vertex {a}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(invalid(format!("edge ({a}, {b}) has invalid weight {w}")));
            }
        }
        let mut counts = vec![0usize; n];
        for &(a, b, _) in edges {
            counts[a] += 1;
            counts[b] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        offsets.push(0);
        for c in &counts {
            acc += c;
            offsets.push(acc);
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0usize; acc];
        let mut weights = vec![0.0f64; acc];
        for &(a, b, w) in edges {
            targets[cursor[a]] = b;
            weights[cursor[a]] = w;
            cursor[a] += 1;
            targets[cursor[b]] = a;
            weights[cursor[b]] = w;
            cursor[b] += 1;
        }
        // Deterministic neighbor order within each vertex.
        let mut graph = Self {
            n,
            offsets,
            targets,
            weights,
        };
        graph.sort_adjacency();
        Ok(graph)
    }

    fn sort_adjacency(&mut self) {
        for v in 0..self.n {
            let lo = self.offsets[v];
            let hi = self.offsets[v + 1];
            let mut pairs: Vec<(usize, f64)> = (lo..hi)
                .map(|e| (self.targets[e], self.weights[e]))
                .collect();
            pairs.sort_by(|a, b| a.0.cmp(&b.0));
            for (slot, (t, w)) in (lo..hi).zip(pairs) {
                self.targets[slot] = t;
                self.weights[slot] = w;
            }
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.offsets[v];
        let hi = self.offsets[v + 1];
        (lo..hi).map(move |e| (self.targets[e], self.weights[e]))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).any(|(t, _)| t == b)
    }
}

/// Builds the k-NN graph with weights `‖x_i − x_j‖_p^q`.
///
/// With `symmetrize` the edge (i, j) is present iff `j ∈ knn(i, k)` OR
/// `i ∈ knn(j, k)` (union); without it both memberships are required
/// (mutual k-NN).
pub fn build_knn_graph(
    points: &PointSet,
    k: usize,
    params: &MetricParams,
    symmetrize: bool,
) -> Result<SparseGraph> {
    let n = points.len();
    if k == 0 || k > n.saturating_sub(1) {
        return Err(invalid(format!(
            "k must satisfy 1 <= k <= n-1 (k={k}, n={n})"
        )));
    }
    let index = NnIndex::build(points, params.p())?;
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(n * k);
    for i in 0..n {
        for (j, dist) in index.knn(i, k)? {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            pairs.push((a, b, pow_weight(dist, params.q())));
        }
    }
    pairs.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(pairs.len());
    let mut i = 0;
    while i < pairs.len() {
        let (a, b, w) = pairs[i];
        let dup = i + 1 < pairs.len() && pairs[i + 1].0 == a && pairs[i + 1].1 == b;
        if symmetrize || dup {
            edges.push((a, b, w));
        }
        i += if dup { 2 } else { 1 };
    }
    SparseGraph::from_edges(n, &edges)
}

struct HeapEntry {
    cost: f64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact multi-goal shortest paths on an explicit graph. Points in
/// components containing no goal are left unreached and counted.
pub fn dijkstra_knn(graph: &SparseGraph, goals: &GoalSet) -> Result<ShortestPathResult> {
    let n = graph.vertex_count();
    goals.validate_for(n)?;
    let mut costs = vec![f64::INFINITY; n];
    let mut predecessors: Vec<Option<usize>> = vec![None; n];
    let mut sources: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let goal_point = |g: usize| goals.get(g).point;

    for (g, goal) in goals.iter().enumerate() {
        costs[goal.point] = 0.0;
        sources[goal.point] = Some(g);
        heap.push(HeapEntry {
            cost: 0.0,
            node: goal.point,
        });
    }

    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if settled[node] || cost > costs[node] {
            continue;
        }
        settled[node] = true;
        let source = sources[node].expect("reached nodes carry a source");
        for (next, w) in graph.neighbors(node) {
            let candidate = cost + w;
            if candidate < costs[next] {
                costs[next] = candidate;
                predecessors[next] = Some(node);
                sources[next] = Some(source);
                heap.push(HeapEntry {
                    cost: candidate,
                    node: next,
                });
            } else if candidate == costs[next] && !settled[next] {
                // Equal-cost race between goals: the lower goal point wins.
                let cur = sources[next].expect("finite cost implies a source");
                if goal_point(source) < goal_point(cur) {
                    predecessors[next] = Some(node);
                    sources[next] = Some(source);
                }
            }
        }
    }

    let unreachable_count = costs.iter().filter(|c| !c.is_finite()).count();
    Ok(ShortestPathResult {
        costs,
        predecessors,
        sources,
        unreachable_count,
    })
}

/// Geodesic-style distances: the k-NN graph carries plain ℓp edge lengths
/// (`q` forced to 1), so path costs approximate manifold distances without
/// density weighting.
pub fn isomap_distances(
    points: &PointSet,
    goals: &GoalSet,
    k: usize,
    p: f64,
) -> Result<ShortestPathResult> {
    let params = MetricParams::new(p, 1.0)?;
    let graph = build_knn_graph(points, k, &params, true)?;
    dijkstra_knn(&graph, goals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::dijkstra_star;

    fn one_d(values: &[f64]) -> PointSet {
        PointSet::new(values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn knn_graph_union_symmetrization() {
        // Points {0, 1, 3}, k=1: point 2's NN is point 1, so the union
        // contains (0,1) and (1,2).
        let points = one_d(&[0.0, 1.0, 3.0]);
        let params = MetricParams::new(2.0, 1.0).unwrap();
        let graph = build_knn_graph(&points, 1, &params, true).unwrap();
        assert_eq!(graph.edge_count(), 2);
        assert!(graph.has_edge(0, 1));
        assert!(graph.has_edge(1, 2));
        assert!(!graph.has_edge(0, 2));
    }

    #[test]
    fn knn_graph_mutual_variant_is_sparser() {
        let points = one_d(&[0.0, 1.0, 3.0]);
        let params = MetricParams::new(2.0, 1.0).unwrap();
        let graph = build_knn_graph(&points, 1, &params, false).unwrap();
        // Only (0,1) is mutual: 0 and 1 are each other's nearest neighbor.
        assert_eq!(graph.edge_count(), 1);
        assert!(graph.has_edge(0, 1));
    }

    #[test]
    fn knn_graph_full_when_k_is_n_minus_1() {
        let points = one_d(&[0.0, 1.0, 3.0, 7.0]);
        let params = MetricParams::new(2.0, 2.0).unwrap();
        let graph = build_knn_graph(&points, 3, &params, true).unwrap();
        assert_eq!(graph.edge_count(), 6);
    }

    #[test]
    fn knn_graph_rejects_bad_k() {
        let points = one_d(&[0.0, 1.0, 3.0]);
        let params = MetricParams::new(2.0, 2.0).unwrap();
        assert!(build_knn_graph(&points, 0, &params, true).is_err());
        assert!(build_knn_graph(&points, 3, &params, true).is_err());
    }

    #[test]
    fn path_graph_costs() {
        let graph = SparseGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let result = dijkstra_knn(&graph, &GoalSet::single(0, 0)).unwrap();
        assert_eq!(result.costs(), &[0.0, 1.0, 2.0]);
        assert_eq!(result.unreachable_count(), 0);
    }

    #[test]
    fn disconnected_component_is_unreached() {
        // Two triangles, goal in the first.
        let graph = SparseGraph::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
            ],
        )
        .unwrap();
        let result = dijkstra_knn(&graph, &GoalSet::single(0, 0)).unwrap();
        assert_eq!(result.unreachable_count(), 3);
        for i in 3..6 {
            assert!(!result.is_reached(i));
            assert_eq!(result.source(i), None);
            assert!(result.reconstruct_path(i).is_err());
        }
    }

    #[test]
    fn full_graph_matches_star_engine() {
        let points = one_d(&[0.0, 1.0, 2.0, 10.0]);
        let params = MetricParams::new(2.0, 2.0).unwrap();
        let goals = GoalSet::single(0, 0);
        let graph = build_knn_graph(&points, 3, &params, true).unwrap();
        let via_graph = dijkstra_knn(&graph, &goals).unwrap();
        let via_star = dijkstra_star(&points, &goals, &params).unwrap();
        assert_eq!(via_graph.costs(), via_star.costs());
    }

    #[test]
    fn collinear_isomap_telescopes() {
        let points = one_d(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let goals = GoalSet::single(0, 0);
        let result = isomap_distances(&points, &goals, 2, 2.0).unwrap();
        let end = result.cost(4);
        assert!((end - 4.0).abs() <= 1e-12, "cost {end}");
    }

    #[test]
    fn graph_rejects_malformed_edges() {
        assert!(SparseGraph::from_edges(2, &[(0, 2, 1.0)]).is_err());
        assert!(SparseGraph::from_edges(2, &[(0, 0, 1.0)]).is_err());
        assert!(SparseGraph::from_edges(2, &[(0, 1, -1.0)]).is_err());
        assert!(SparseGraph::from_edges(2, &[(0, 1, f64::NAN)]).is_err());
    }
}
