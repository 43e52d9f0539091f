//! Seeded synthetic data: uniform cubes for convergence and timing studies,
//! and a two-arm construction whose boundary points are Euclidean-closer to
//! the wrong label (the geometry density-based distances are built for).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classify::LabeledDataset;
use crate::error::{invalid, Result};
use crate::metric::PointSet;

/// `n` i.i.d. uniform points in `[0,1]^d`, deterministic per seed.
pub fn gen_uniform_square(n: usize, d: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(invalid("uniform sample requires n >= 1 and d >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    PointSet::from_flat(coords, d)
}

/// A two-cluster dataset with one labeled anchor per cluster, plus the full
/// ground truth.
#[derive(Debug, Clone)]
pub struct TwoClusters {
    pub dataset: LabeledDataset,
    /// True cluster id per point.
    pub truth: Vec<usize>,
    /// Indices of the two labeled anchor points.
    pub anchors: [usize; 2],
}

const ARM_LENGTH: f64 = 4.0;

/// Two horizontal arms of length 4 separated vertically by `separation`,
/// with Gaussian y-jitter of scale `noise`. Arm 0 is anchored (and labeled)
/// at its left end `(0, 0)`; arm 1 at its right end `(4, separation)`. The
/// diagonal anchor placement makes each arm's far end Euclidean-closer to
/// the other arm's label while the within-arm path stays dense.
pub fn gen_two_clusters(n: usize, separation: f64, noise: f64, seed: u64) -> Result<TwoClusters> {
    if n < 2 {
        return Err(invalid("two-cluster data requires n >= 2"));
    }
    if !separation.is_finite() || separation <= 0.0 {
        return Err(invalid(format!("separation must be positive, got {separation}")));
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(invalid(format!("noise must be non-negative, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n0 = n / 2 + n % 2;
    let n1 = n / 2;
    let jitter_dist = Normal::new(0.0, noise).map_err(|e| invalid(e.to_string()))?;
    let jitter = |rng: &mut ChaCha8Rng| -> f64 { jitter_dist.sample(rng) };

    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    rows.push(vec![0.0, 0.0]);
    truth.push(0);
    for _ in 1..n0 {
        let x = rng.random::<f64>() * ARM_LENGTH;
        let y = jitter(&mut rng);
        rows.push(vec![x, y]);
        truth.push(0);
    }
    let anchor1 = rows.len();
    if n1 > 0 {
        rows.push(vec![ARM_LENGTH, separation]);
        truth.push(1);
        for _ in 1..n1 {
            let x = rng.random::<f64>() * ARM_LENGTH;
            let y = separation + jitter(&mut rng);
            rows.push(vec![x, y]);
            truth.push(1);
        }
    }

    let mut labels = vec![None; rows.len()];
    labels[0] = Some(0);
    if n1 > 0 {
        labels[anchor1] = Some(1);
    }
    let dataset = LabeledDataset::new(PointSet::new(rows)?, labels, 2)?;
    Ok(TwoClusters {
        dataset,
        truth,
        anchors: [0, anchor1],
    })
}
