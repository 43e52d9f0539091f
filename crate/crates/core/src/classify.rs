//! Distance-based semi-supervised classification: a 1-nearest-neighbor rule
//! on top of multi-goal search results, error metrics, and (p, q) grid
//! cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::metric::{MetricParams, PointSet};
use crate::search::{search_to_goals, Engine, GoalSet};

/// A point set with a partial labeling: `None` marks unlabeled points.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    points: PointSet,
    labels: Vec<Option<usize>>,
    label_count: usize,
}

impl LabeledDataset {
    pub fn new(points: PointSet, labels: Vec<Option<usize>>, label_count: usize) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(invalid(format!(
                "label vector length {} does not match point count {}",
                labels.len(),
                points.len()
            )));
        }
        if label_count == 0 {
            return Err(invalid("label_count must be >= 1"));
        }
        for (i, label) in labels.iter().enumerate() {
            if let Some(l) = label {
                if *l >= label_count {
                    return Err(invalid(format!(
                        "label {l} at point {i} outside [0, {label_count})"
                    )));
                }
            }
        }
        Ok(Self {
            points,
            labels,
            label_count,
        })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|_| i))
            .collect()
    }

    /// The labeled points as a goal set, in point-index order.
    pub fn goal_set(&self) -> Result<GoalSet> {
        let goals: Vec<(usize, usize)> = self
            .labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|label| (i, label)))
            .collect();
        if goals.is_empty() {
            return Err(invalid("dataset has no labeled points"));
        }
        GoalSet::new(goals)
    }

    /// Copy with the given points' labels removed (used by cross-validation
    /// to hold out labeled points as unlabeled graph nodes).
    fn with_labels_hidden(&self, hidden: &[usize]) -> Self {
        let mut labels = self.labels.clone();
        for &i in hidden {
            labels[i] = None;
        }
        Self {
            points: self.points.clone(),
            labels,
            label_count: self.label_count,
        }
    }
}

/// Prediction for one unlabeled point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedPoint {
    pub point: usize,
    /// Predicted class: the label of the decisive point, or the majority
    /// label when the point was unreached.
    pub label: usize,
    /// Search cost to the decisive labeled point; `+inf` for fallbacks.
    pub cost: f64,
    /// Index of the labeled point that decided the class.
    pub decisive: usize,
    /// True when the point was unreached and got the majority label.
    pub fallback: bool,
}

/// 1-NN predictions for every unlabeled point of a dataset.
#[derive(Debug, Clone)]
pub struct Prediction {
    point_count: usize,
    items: Vec<PredictedPoint>,
}

impl Prediction {
    pub fn items(&self) -> &[PredictedPoint] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn fallback_count(&self) -> usize {
        self.items.iter().filter(|i| i.fallback).count()
    }
}

/// Most frequent label among labeled points, ties to the lowest label id,
/// plus the lowest labeled point index carrying it.
fn majority_label(dataset: &LabeledDataset) -> Result<(usize, usize)> {
    let mut counts = vec![0usize; dataset.label_count()];
    for label in dataset.labels().iter().flatten() {
        counts[*label] += 1;
    }
    let best = (0..counts.len())
        .filter(|&l| counts[l] > 0)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
        .ok_or_else(|| invalid("dataset has no labeled points"))?;
    let holder = dataset
        .labels()
        .iter()
        .position(|l| *l == Some(best))
        .expect("majority label has a holder");
    Ok((best, holder))
}

/// Labels every unlabeled point with the class of its minimum-cost goal
/// under the chosen engine. Unreached points (possible only on k-NN graphs)
/// get the majority label, flagged as fallback.
pub fn predict_1nn_dbd(
    dataset: &LabeledDataset,
    params: &MetricParams,
    engine: Engine,
) -> Result<Prediction> {
    let goals = dataset.goal_set()?;
    let result = search_to_goals(dataset.points(), &goals, params, engine)?;
    let fallback = if result.unreachable_count() > 0 {
        Some(majority_label(dataset)?)
    } else {
        None
    };
    let mut items = Vec::new();
    for (i, label) in dataset.labels().iter().enumerate() {
        if label.is_some() {
            continue;
        }
        let item = match result.source(i) {
            Some(g) => {
                let goal = goals.get(g);
                PredictedPoint {
                    point: i,
                    label: goal.label,
                    cost: result.cost(i),
                    decisive: goal.point,
                    fallback: false,
                }
            }
            None => {
                let (label, holder) = fallback.expect("unreached points imply fallback");
                PredictedPoint {
                    point: i,
                    label,
                    cost: f64::INFINITY,
                    decisive: holder,
                    fallback: true,
                }
            }
        };
        items.push(item);
    }
    Ok(Prediction {
        point_count: dataset.points().len(),
        items,
    })
}

/// Fraction of predicted (unlabeled) points whose label disagrees with the
/// truth. Zero when there was nothing to predict.
pub fn error_rate(prediction: &Prediction, truth: &[usize]) -> Result<f64> {
    if truth.len() != prediction.point_count() {
        return Err(invalid(format!(
            "truth length {} does not match point count {}",
            truth.len(),
            prediction.point_count()
        )));
    }
    if prediction.is_empty() {
        return Ok(0.0);
    }
    let wrong = prediction
        .items()
        .iter()
        .filter(|item| item.label != truth[item.point])
        .count();
    Ok(wrong as f64 / prediction.len() as f64)
}

/// Grid and fold counts for (p, q) selection.
#[derive(Debug, Clone)]
pub struct CvConfig {
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub folds: usize,
    /// Independent fold shuffles averaged together.
    pub trials: usize,
}

impl CvConfig {
    fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() || self.q_grid.is_empty() {
            return Err(invalid("cross-validation grids must be nonempty"));
        }
        if self.folds < 2 {
            return Err(invalid("cross-validation requires folds >= 2"));
        }
        if self.trials == 0 {
            return Err(invalid("cross-validation requires trials >= 1"));
        }
        Ok(())
    }
}

/// One grid cell of the cross-validation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvCell {
    pub p: f64,
    pub q: f64,
    pub mean_error: f64,
}

/// Full (p, q) error table; nothing is selected silently — the winning pair
/// is returned alongside every cell.
#[derive(Debug, Clone)]
pub struct CvTable {
    pub cells: Vec<CvCell>,
}

/// K-fold cross-validation over the labeled points: each fold's labels are
/// hidden (the points stay in the graph as unlabeled nodes), the rest
/// classify them, and the fold's error is averaged per grid cell. Returns
/// the argmin pair, ties broken toward smaller q then smaller p.
pub fn cross_validate_pq(
    dataset: &LabeledDataset,
    config: &CvConfig,
    seed: u64,
) -> Result<(MetricParams, CvTable)> {
    config.validate()?;
    let labeled = dataset.labeled_indices();
    if config.folds > labeled.len() {
        return Err(invalid(format!(
            "folds ({}) exceed labeled point count ({})",
            config.folds,
            labeled.len()
        )));
    }

    let cells: Vec<(f64, f64)> = config
        .p_grid
        .iter()
        .flat_map(|&p| config.q_grid.iter().map(move |&q| (p, q)))
        .collect();
    for &(p, q) in &cells {
        MetricParams::new(p, q)?;
    }

    let mut sums = vec![0.0f64; cells.len()];
    let mut counts = vec![0usize; cells.len()];
    for trial in 0..config.trials {
        let mut order = labeled.clone();
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9)));
        order.shuffle(&mut rng);
        for fold in 0..config.folds {
            let held: Vec<usize> = order
                .iter()
                .copied()
                .enumerate()
                .filter_map(|(pos, idx)| (pos % config.folds == fold).then_some(idx))
                .collect();
            if held.is_empty() || held.len() == labeled.len() {
                continue;
            }
            let masked = dataset.with_labels_hidden(&held);
            for (c, &(p, q)) in cells.iter().enumerate() {
                let params = MetricParams::new(p, q)?;
                let prediction = predict_1nn_dbd(&masked, &params, Engine::Dbd)?;
                let wrong = prediction
                    .items()
                    .iter()
                    .filter(|item| {
                        held.contains(&item.point)
                            && dataset.labels()[item.point] != Some(item.label)
                    })
                    .count();
                sums[c] += wrong as f64 / held.len() as f64;
                counts[c] += 1;
            }
        }
    }

    let table = CvTable {
        cells: cells
            .iter()
            .zip(sums.iter().zip(counts.iter()))
            .map(|(&(p, q), (&sum, &count))| CvCell {
                p,
                q,
                mean_error: if count == 0 { 0.0 } else { sum / count as f64 },
            })
            .collect(),
    };
    let winner = table
        .cells
        .iter()
        .min_by(|a, b| {
            a.mean_error
                .total_cmp(&b.mean_error)
                .then(a.q.total_cmp(&b.q))
                .then(a.p.total_cmp(&b.p))
        })
        .expect("grid is nonempty");
    Ok((MetricParams::new(winner.p, winner.q)?, table))
}
