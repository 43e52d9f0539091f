//! Dijkstra*: exact multi-goal shortest paths through the implicit
//! fully-connected graph.
//!
//! Classic Dijkstra would push every neighbor of a popped vertex; on a
//! fully-connected graph that is O(n) pushes per pop. Dijkstra* pushes only
//! the single best extension of each closed path — the nearest *open* point
//! to its terminal — and re-extends the path's prefix lazily whenever one of
//! its extensions is consumed. Popped paths therefore arrive in optimal
//! order, and each pop costs one or two nearest-neighbor queries instead of
//! a full expansion.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::Result;
use crate::metric::{pow_weight, MetricParams, PointSet};
use crate::nn_index::NnIndex;

use super::{GoalSet, SearchStats, ShortestPathResult};

/// Index into the closed-path arena.
pub type ArenaId = usize;

/// A finalized path, identified by its terminal point. The parent chain
/// walks back to a goal entry with cost 0.
#[derive(Debug, Clone, Copy)]
pub struct ClosedPath {
    pub terminal: usize,
    pub parent: Option<ArenaId>,
    pub cost: f64,
    /// Goal ordinal the path starts from.
    pub source: usize,
}

/// A candidate extension: the closed prefix path plus one open point.
struct QueueEntry {
    cost: f64,
    candidate: usize,
    /// Point index of the prefix's goal; deterministic tie-breaking so an
    /// equal-cost race between goals resolves to the lowest goal point.
    source_point: usize,
    prefix: ArenaId,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the cheapest entry,
        // ties by candidate index, then source point, then prefix.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.candidate.cmp(&self.candidate))
            .then_with(|| other.source_point.cmp(&self.source_point))
            .then_with(|| other.prefix.cmp(&self.prefix))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An in-flight Dijkstra* run. Owns its index, arena, and queue exclusively.
pub struct StarSearch<'a> {
    params: MetricParams,
    index: NnIndex<'a>,
    arena: Vec<ClosedPath>,
    queue: BinaryHeap<QueueEntry>,
    goal_points: Vec<usize>,
    costs: Vec<f64>,
    predecessors: Vec<Option<usize>>,
    sources: Vec<Option<usize>>,
    stats: SearchStats,
    last_finalized_cost: f64,
}

impl<'a> StarSearch<'a> {
    /// Initializes the queue with the goals' zero-length paths: each goal is
    /// closed immediately (goals are never discovered as interior nodes) and
    /// its best extension pushed.
    pub fn new(points: &'a PointSet, goals: &GoalSet, params: &MetricParams) -> Result<Self> {
        goals.validate_for(points.len())?;
        let n = points.len();
        let mut search = Self {
            params: *params,
            index: NnIndex::build(points, params.p())?,
            arena: Vec::with_capacity(n),
            queue: BinaryHeap::with_capacity(2 * goals.len() + 2),
            goal_points: goals.iter().map(|g| g.point).collect(),
            costs: vec![f64::INFINITY; n],
            predecessors: vec![None; n],
            sources: vec![None; n],
            stats: SearchStats {
                monotone_pops: true,
                ..SearchStats::default()
            },
            last_finalized_cost: 0.0,
        };
        for (g, goal) in goals.iter().enumerate() {
            search.arena.push(ClosedPath {
                terminal: goal.point,
                parent: None,
                cost: 0.0,
                source: g,
            });
            search.costs[goal.point] = 0.0;
            search.sources[goal.point] = Some(g);
            search.index.remove(goal.point)?;
        }
        for id in 0..goals.len() {
            search.push_next(id);
        }
        Ok(search)
    }

    /// Extends the closed path `prefix` by the nearest open point to its
    /// terminal, pushing exactly one queue entry. No-op once every point is
    /// closed.
    pub fn push_next(&mut self, prefix: ArenaId) {
        self.stats.nn_queries += 1;
        let path = self.arena[prefix];
        if let Some((neighbor, dist)) = self.index.nearest(path.terminal) {
            self.queue.push(QueueEntry {
                cost: path.cost + pow_weight(dist, self.params.q()),
                candidate: neighbor,
                source_point: self.goal_points[path.source],
                prefix,
            });
        }
    }

    /// Pops until one fresh path is finalized; returns its terminal and
    /// cost, or `None` when the queue drains.
    ///
    /// A stale pop (candidate already closed by a cheaper path) still
    /// re-extends its prefix before being discarded — that keeps every
    /// closed path's next-best extension pending, which completeness
    /// depends on.
    pub fn step(&mut self) -> Option<(usize, f64)> {
        while let Some(entry) = self.queue.pop() {
            self.stats.pops += 1;
            let len_at_pop = self.queue.len() + 1;
            self.stats.queue_len_sum += len_at_pop as u64;
            self.stats.max_queue_len = self.stats.max_queue_len.max(len_at_pop);

            if self.index.is_closed(entry.candidate) {
                self.stats.stale_pops += 1;
                self.push_next(entry.prefix);
                continue;
            }

            if entry.cost < self.last_finalized_cost {
                self.stats.monotone_pops = false;
            }
            self.last_finalized_cost = entry.cost;

            let parent = self.arena[entry.prefix];
            self.arena.push(ClosedPath {
                terminal: entry.candidate,
                parent: Some(entry.prefix),
                cost: entry.cost,
                source: parent.source,
            });
            self.costs[entry.candidate] = entry.cost;
            self.predecessors[entry.candidate] = Some(parent.terminal);
            self.sources[entry.candidate] = Some(parent.source);
            self.index
                .remove(entry.candidate)
                .expect("candidate verified open");

            let new_id = self.arena.len() - 1;
            self.push_next(new_id);
            self.push_next(entry.prefix);
            return Some((entry.candidate, entry.cost));
        }
        None
    }

    /// Drains the queue and returns the per-point result with run counters.
    pub fn run(mut self) -> (ShortestPathResult, SearchStats) {
        while self.step().is_some() {}
        let mut stats = self.stats;
        stats.points_examined = self.index.points_examined();
        let unreachable_count = self.costs.iter().filter(|c| !c.is_finite()).count();
        (
            ShortestPathResult {
                costs: self.costs,
                predecessors: self.predecessors,
                sources: self.sources,
                unreachable_count,
            },
            stats,
        )
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Snapshot of pending extensions as (cost, candidate) pairs, unordered.
    pub fn pending(&self) -> Vec<(f64, usize)> {
        self.queue
            .iter()
            .map(|e| (e.cost, e.candidate))
            .collect()
    }

    pub fn open_count(&self) -> usize {
        self.index.open_count()
    }

    pub fn arena(&self) -> &[ClosedPath] {
        &self.arena
    }
}

/// Exact shortest-path costs from every point to its nearest goal in the
/// fully-connected graph with weights `‖x_i − x_j‖_p^q`.
pub fn dijkstra_star(
    points: &PointSet,
    goals: &GoalSet,
    params: &MetricParams,
) -> Result<ShortestPathResult> {
    Ok(StarSearch::new(points, goals, params)?.run().0)
}

/// As [`dijkstra_star`], also returning operation counts.
pub fn dijkstra_star_with_stats(
    points: &PointSet,
    goals: &GoalSet,
    params: &MetricParams,
) -> Result<(ShortestPathResult, SearchStats)> {
    Ok(StarSearch::new(points, goals, params)?.run())
}
