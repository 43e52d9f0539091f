//! Shortest-path engines over point sets, all multi-goal from the labeled
//! set: Dijkstra* through the implicit fully-connected graph, classic
//! Dijkstra over explicit k-NN graphs, and geodesic (unweighted-exponent)
//! distances on the same graphs.

mod knn;
mod star;

pub use knn::{build_knn_graph, dijkstra_knn, isomap_distances, SparseGraph};
pub use star::{dijkstra_star, dijkstra_star_with_stats, ArenaId, ClosedPath, StarSearch};

use crate::error::{invalid, DbdError, Result};
use crate::metric::{lp_dist_raw, MetricParams, PointSet};

/// A labeled goal: the point index a search terminates at, plus its class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Goal {
    pub point: usize,
    pub label: usize,
}

/// The set of goals (the labeled points). Point indices are distinct;
/// the set is nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalSet {
    goals: Vec<Goal>,
}

impl GoalSet {
    pub fn new(goals: Vec<(usize, usize)>) -> Result<Self> {
        if goals.is_empty() {
            return Err(invalid("goal set must not be empty"));
        }
        let mut seen = goals.iter().map(|&(pt, _)| pt).collect::<Vec<_>>();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(
                "multiple goals map to the same point index (ambiguous label)",
            ));
        }
        Ok(Self {
            goals: goals
                .into_iter()
                .map(|(point, label)| Goal { point, label })
                .collect(),
        })
    }

    pub fn single(point: usize, label: usize) -> Self {
        Self {
            goals: vec![Goal { point, label }],
        }
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn get(&self, ordinal: usize) -> Goal {
        self.goals[ordinal]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Goal> {
        self.goals.iter()
    }

    pub(crate) fn validate_for(&self, point_count: usize) -> Result<()> {
        for goal in &self.goals {
            if goal.point >= point_count {
                return Err(invalid(format!(
                    "goal point index {} out of range for {} points",
                    goal.point, point_count
                )));
            }
        }
        Ok(())
    }
}

/// Per-point outcome of a multi-goal search: the cost to the cheapest goal,
/// the predecessor on that path, and which goal it was.
///
/// Unreached points (possible only on k-NN graphs) carry infinite cost and
/// no predecessor or source.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathResult {
    pub(crate) costs: Vec<f64>,
    pub(crate) predecessors: Vec<Option<usize>>,
    pub(crate) sources: Vec<Option<usize>>,
    pub(crate) unreachable_count: usize,
}

impl ShortestPathResult {
    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// Cost to the nearest goal; `+inf` when unreached.
    pub fn cost(&self, idx: usize) -> f64 {
        self.costs[idx]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn is_reached(&self, idx: usize) -> bool {
        self.costs[idx].is_finite()
    }

    /// Predecessor point on the optimal path; `None` for goals and
    /// unreached points.
    pub fn predecessor(&self, idx: usize) -> Option<usize> {
        self.predecessors[idx]
    }

    /// Ordinal of the goal this point was reached from.
    pub fn source(&self, idx: usize) -> Option<usize> {
        self.sources[idx]
    }

    pub fn unreachable_count(&self) -> usize {
        self.unreachable_count
    }

    /// The optimal path as point indices from the goal to `idx`.
    pub fn reconstruct_path(&self, idx: usize) -> Result<Vec<usize>> {
        if idx >= self.costs.len() {
            return Err(invalid(format!("point index {idx} out of range")));
        }
        if !self.is_reached(idx) {
            return Err(DbdError::NotReached(idx));
        }
        let mut path = vec![idx];
        let mut at = idx;
        while let Some(prev) = self.predecessors[at] {
            path.push(prev);
            at = prev;
            if path.len() > self.costs.len() {
                return Err(DbdError::ContractViolation(
                    "predecessor chain does not terminate".into(),
                ));
            }
        }
        path.reverse();
        Ok(path)
    }
}

/// Operation counts from one search run.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchStats {
    /// Queue pops, including stale ones.
    pub pops: u64,
    /// Pops whose candidate was already closed by a cheaper path.
    pub stale_pops: u64,
    /// Nearest-neighbor queries issued.
    pub nn_queries: u64,
    /// Candidate points examined inside the NN index.
    pub points_examined: u64,
    pub max_queue_len: usize,
    pub(crate) queue_len_sum: u64,
    /// Whether finalized costs were observed in non-decreasing order.
    pub monotone_pops: bool,
}

impl SearchStats {
    pub fn mean_queue_len(&self) -> f64 {
        if self.pops == 0 {
            0.0
        } else {
            self.queue_len_sum as f64 / self.pops as f64
        }
    }
}

/// Which distance machinery backs a classification or export run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Exact DBD through the implicit fully-connected graph (Dijkstra*).
    Dbd,
    /// DBD approximated on an explicit k-NN graph.
    DbdKnn(usize),
    /// Geodesic distances: k-NN graph with un-exponentiated ℓp weights.
    Isomap(usize),
    /// Plain ℓp distance to the nearest goal; no graph at all.
    Euclid,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Dbd => "dbd",
            Engine::DbdKnn(_) => "dbd-knn",
            Engine::Isomap(_) => "isomap",
            Engine::Euclid => "euclid",
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Engine::DbdKnn(k) | Engine::Isomap(k) => Some(*k),
            _ => None,
        }
    }
}

/// Runs the engine's multi-goal search and returns per-point results.
pub fn search_to_goals(
    points: &PointSet,
    goals: &GoalSet,
    params: &MetricParams,
    engine: Engine,
) -> Result<ShortestPathResult> {
    match engine {
        Engine::Dbd => dijkstra_star(points, goals, params),
        Engine::DbdKnn(k) => {
            let graph = build_knn_graph(points, k, params, true)?;
            dijkstra_knn(&graph, goals)
        }
        Engine::Isomap(k) => isomap_distances(points, goals, k, params.p()),
        Engine::Euclid => euclid_to_goals_with_p(points, goals, params.p()),
    }
}

/// Direct-distance "search": each point's cost is its ℓp distance to the
/// nearest goal, ties to the lowest goal point index.
pub(crate) fn euclid_to_goals_with_p(
    points: &PointSet,
    goals: &GoalSet,
    p: f64,
) -> Result<ShortestPathResult> {
    goals.validate_for(points.len())?;
    let n = points.len();
    let mut costs = vec![f64::INFINITY; n];
    let mut predecessors = vec![None; n];
    let mut sources = vec![None; n];
    let goal_of_point: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        for (g, goal) in goals.iter().enumerate() {
            v[goal.point] = Some(g);
        }
        v
    };
    for i in 0..n {
        if let Some(g) = goal_of_point[i] {
            costs[i] = 0.0;
            sources[i] = Some(g);
            continue;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (g, goal) in goals.iter().enumerate() {
            let d = lp_dist_raw(points.point(i), points.point(goal.point), p);
            let take = match best {
                None => true,
                Some((bd, bpt, _)) => d < bd || (d == bd && goal.point < bpt),
            };
            if take {
                best = Some((d, goal.point, g));
            }
        }
        let (d, goal_pt, g) = best.expect("goal set is nonempty");
        costs[i] = d;
        predecessors[i] = Some(goal_pt);
        sources[i] = Some(g);
    }
    Ok(ShortestPathResult {
        costs,
        predecessors,
        sources,
        unreachable_count: 0,
    })
}

/// Dense matrix of costs from every point to every goal, one single-goal
/// search per goal.
#[derive(Debug, Clone)]
pub struct GoalCostMatrix {
    n: usize,
    costs: Vec<f64>,
    goals: Vec<Goal>,
}

impl GoalCostMatrix {
    pub fn point_count(&self) -> usize {
        self.n
    }

    pub fn goal_count(&self) -> usize {
        self.goals.len()
    }

    pub fn goal(&self, g: usize) -> Goal {
        self.goals[g]
    }

    /// Cost from point `i` to goal ordinal `g`; `+inf` when unreached.
    pub fn cost(&self, i: usize, g: usize) -> f64 {
        self.costs[i * self.goals.len() + g]
    }
}

/// Runs one single-goal search per goal and collects the columns.
/// Graph engines build their k-NN graph once and reuse it per goal.
pub fn all_pairs_to_goals(
    points: &PointSet,
    goals: &GoalSet,
    params: &MetricParams,
    engine: Engine,
) -> Result<GoalCostMatrix> {
    goals.validate_for(points.len())?;
    let n = points.len();
    let g_count = goals.len();
    let mut costs = vec![f64::INFINITY; n * g_count];

    let prebuilt = match engine {
        Engine::DbdKnn(k) => Some(build_knn_graph(points, k, params, true)?),
        Engine::Isomap(k) => {
            let iso_params = MetricParams::new(params.p(), 1.0)?;
            Some(build_knn_graph(points, k, &iso_params, true)?)
        }
        _ => None,
    };

    for (g, goal) in goals.iter().enumerate() {
        let single = GoalSet::single(goal.point, goal.label);
        let column = match (engine, &prebuilt) {
            (Engine::Dbd, _) => dijkstra_star(points, &single, params)?,
            (Engine::DbdKnn(_), Some(graph)) | (Engine::Isomap(_), Some(graph)) => {
                dijkstra_knn(graph, &single)?
            }
            (Engine::Euclid, _) => euclid_to_goals_with_p(points, &single, params.p())?,
            _ => unreachable!("graph engines always prebuild"),
        };
        for i in 0..n {
            costs[i * g_count + g] = column.cost(i);
        }
    }
    Ok(GoalCostMatrix {
        n,
        costs,
        goals: goals.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_set_rejects_duplicates_and_empty() {
        assert!(GoalSet::new(vec![]).is_err());
        assert!(GoalSet::new(vec![(0, 0), (0, 1)]).is_err());
        assert!(GoalSet::new(vec![(0, 0), (1, 0)]).is_ok());
    }

    #[test]
    fn reconstruct_path_of_goal_is_single_element() {
        let points = PointSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let goals = GoalSet::single(0, 0);
        let params = MetricParams::new(2.0, 2.0).unwrap();
        let result = dijkstra_star(&points, &goals, &params).unwrap();
        assert_eq!(result.reconstruct_path(0).unwrap(), vec![0]);
        assert_eq!(result.cost(0), 0.0);
    }

    #[test]
    fn euclid_ties_break_to_lower_goal_point() {
        // Point 1 sits exactly between goal points 0 and 2.
        let points = PointSet::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let goals = GoalSet::new(vec![(2, 1), (0, 0)]).unwrap();
        let result = search_to_goals(
            &points,
            &goals,
            &MetricParams::new(2.0, 1.0).unwrap(),
            Engine::Euclid,
        )
        .unwrap();
        // Goal listed second has the lower point index and wins the tie.
        assert_eq!(result.source(1), Some(1));
        assert_eq!(result.predecessor(1), Some(0));
    }

    #[test]
    fn all_pairs_single_goal_matches_star() {
        let points =
            PointSet::new(vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0]]).unwrap();
        let goals = GoalSet::single(0, 0);
        let params = MetricParams::new(2.0, 2.0).unwrap();
        let matrix = all_pairs_to_goals(&points, &goals, &params, Engine::Dbd).unwrap();
        let direct = dijkstra_star(&points, &goals, &params).unwrap();
        for i in 0..points.len() {
            assert_eq!(matrix.cost(i, 0), direct.cost(i));
        }
    }

    #[test]
    fn all_pairs_goal_row_is_zero() {
        let points = PointSet::new(vec![vec![0.0], vec![3.0], vec![7.0]]).unwrap();
        let goals = GoalSet::new(vec![(1, 0), (2, 1)]).unwrap();
        let params = MetricParams::new(2.0, 4.0).unwrap();
        for engine in [Engine::Dbd, Engine::DbdKnn(2), Engine::Isomap(2), Engine::Euclid] {
            let matrix = all_pairs_to_goals(&points, &goals, &params, engine).unwrap();
            assert_eq!(matrix.cost(1, 0), 0.0, "engine {engine:?}");
            assert_eq!(matrix.cost(2, 1), 0.0, "engine {engine:?}");
        }
    }
}
