//! Graph-based density-based distances (Graph-DBD) and semi-supervised
//! nearest-neighbor classification.
//!
//! The distance between two points is the cost of the cheapest path through
//! the sample, where each hop `(x_i, x_j)` costs `‖x_i − x_j‖_p^q`. With
//! `q > 1` long hops are penalized, so optimal paths thread through densely
//! sampled regions — short nearest-neighbor distances are a proxy for high
//! local density. Distances to the labeled points then drive a 1-NN
//! classifier.
//!
//! The implicit graph is fully connected; [`search::dijkstra_star`] searches
//! it exactly without materializing it, by fusing nearest-neighbor queries
//! into the priority-queue loop. Explicit k-NN graph baselines
//! ([`search::build_knn_graph`] + [`search::dijkstra_knn`]) and geodesic
//! distances ([`search::isomap_distances`]) share the same result shape.

pub mod classify;
pub mod data;
pub mod error;
pub mod metric;
pub mod nn_index;
pub mod search;

pub use classify::{
    cross_validate_pq, error_rate, predict_1nn_dbd, CvConfig, CvTable, LabeledDataset, Prediction,
};
pub use error::{DbdError, Result};
pub use metric::{
    edge_weight, lp_ball_volume, lp_distance, nn_density_estimate, DensityEstimate, MetricParams,
    PointSet,
};
pub use nn_index::NnIndex;
pub use search::{
    all_pairs_to_goals, build_knn_graph, dijkstra_knn, dijkstra_star, dijkstra_star_with_stats,
    isomap_distances, search_to_goals, Engine, GoalSet, SearchStats, ShortestPathResult,
    SparseGraph, StarSearch,
};
