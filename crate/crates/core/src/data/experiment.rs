//! Experiment runners and their machine-readable reports.
//!
//! Reports are flat records, one per (trial, configuration), each carrying
//! the full run configuration plus a metric map. Timing uses a monotonic
//! clock around the search call only; graph construction is timed
//! separately. Everything except wall time is bit-reproducible per seed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, DbdError, Result};
use crate::metric::{nn_density_estimate, MetricParams, PointSet};
use crate::search::{
    build_knn_graph, dijkstra_knn, dijkstra_star_with_stats, GoalSet, SearchStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// One record per (trial, configuration). Aggregate rows use the trial
/// labels `mean`, `median`, or `summary`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRecord {
    pub experiment: String,
    pub engine: String,
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub q: f64,
    /// 0 means the full implicit graph.
    pub k: usize,
    pub seed: u64,
    pub trial: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct ExperimentReport {
    pub records: Vec<ReportRecord>,
}

impl ExperimentReport {
    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        writeln!(w, "{text}")
    }

    /// CSV with fixed configuration columns followed by the sorted union of
    /// metric keys; absent metrics stay empty. Numbers use the shortest
    /// round-trip decimal form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let keys: BTreeSet<&str> = self
            .records
            .iter()
            .flat_map(|r| r.metrics.keys().map(String::as_str))
            .collect();
        write!(w, "experiment,engine,n,d,p,q,k,seed,trial")?;
        for key in &keys {
            write!(w, ",{key}")?;
        }
        writeln!(w)?;
        for r in &self.records {
            write!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.experiment, r.engine, r.n, r.d, r.p, r.q, r.k, r.seed, r.trial
            )?;
            for key in &keys {
                match r.metrics.get(*key) {
                    Some(v) => write!(w, ",{v}")?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, w: W, format: ReportFormat) -> std::io::Result<()> {
        match format {
            ReportFormat::Csv => self.write_csv(w),
            ReportFormat::Json => self.write_json(w),
        }
    }

    pub fn to_path(&self, path: &std::path::Path, format: ReportFormat) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| DbdError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.write(std::io::BufWriter::new(file), format)
            .map_err(|e| DbdError::Io {
                path: path.to_path_buf(),
                source: e,
            })
    }
}

fn stats_metrics(metrics: &mut BTreeMap<String, f64>, stats: &SearchStats) {
    metrics.insert("pops".into(), stats.pops as f64);
    metrics.insert("stale_pops".into(), stats.stale_pops as f64);
    metrics.insert("nn_queries".into(), stats.nn_queries as f64);
    metrics.insert("points_examined".into(), stats.points_examined as f64);
    metrics.insert("queue_mean".into(), stats.mean_queue_len());
    metrics.insert("queue_max".into(), stats.max_queue_len as f64);
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Sample standard deviation; 0 for fewer than two values.
fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

/// Linear-interpolation percentile of a sorted slice, `frac` in [0, 1].
fn percentile(sorted: &[f64], frac: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = frac * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let t = pos - lo as f64;
        sorted[lo] * (1.0 - t) + sorted[hi] * t
    }
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile(&sorted, 0.5)
}

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    seed.wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Density-estimator percentiles and scaled-DBD convergence on uniform data.
///
/// For each `n`: the density estimate at a fixed interior point over
/// `trials` independent samples (quartiles reported), and mean/std of
/// `√n · DBD(corner, corner)` with the two unit-square corners appended to
/// each sample.
pub fn run_convergence_experiment(
    ns: &[usize],
    trials: usize,
    params: &MetricParams,
    seed: u64,
) -> Result<ExperimentReport> {
    if ns.is_empty() {
        return Err(invalid("convergence experiment needs at least one n"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("ns must be strictly ascending"));
    }
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    let probe = [0.3, 0.7];
    let corners = [vec![0.0, 0.0], vec![1.0, 1.0]];
    let mut report = ExperimentReport::default();
    for &n in ns {
        let mut densities = Vec::with_capacity(trials);
        let mut scaled_dbd = Vec::with_capacity(trials);
        for trial in 0..trials {
            let sample = super::gen_uniform_square(n, 2, mix_seed(seed, n as u64, trial as u64))?;
            let est = nn_density_estimate(&probe, &sample, params.p())?;
            densities.push(est.value);

            let with_corners = sample.with_appended(&corners)?;
            let goals = GoalSet::single(n, 0);
            let (result, _) = dijkstra_star_with_stats(&with_corners, &goals, params)?;
            let dbd = result.cost(n + 1);
            scaled_dbd.push((n as f64).sqrt() * dbd);

            let mut metrics = BTreeMap::new();
            metrics.insert("density".into(), est.value);
            metrics.insert("dbd_scaled".into(), (n as f64).sqrt() * dbd);
            report.records.push(ReportRecord {
                experiment: "converge".into(),
                engine: "dbd".into(),
                n,
                d: 2,
                p: params.p(),
                q: params.q(),
                k: 0,
                seed,
                trial: trial.to_string(),
                metrics,
            });
        }
        let mut sorted = densities.clone();
        sorted.sort_by(f64::total_cmp);
        let mut metrics = BTreeMap::new();
        metrics.insert("density_p25".into(), percentile(&sorted, 0.25));
        metrics.insert("density_median".into(), percentile(&sorted, 0.5));
        metrics.insert("density_p75".into(), percentile(&sorted, 0.75));
        metrics.insert("dbd_scaled_mean".into(), mean(&scaled_dbd));
        metrics.insert("dbd_scaled_std".into(), std_dev(&scaled_dbd));
        report.records.push(ReportRecord {
            experiment: "converge".into(),
            engine: "dbd".into(),
            n,
            d: 2,
            p: params.p(),
            q: params.q(),
            k: 0,
            seed,
            trial: "summary".into(),
            metrics,
        });
    }
    Ok(report)
}

/// Wall time and operation counts: Dijkstra* through the full graph versus
/// k-NN graph construction plus classic Dijkstra, per k, with goal sets
/// re-sampled each trial.
pub fn run_timing_experiment(
    points: &PointSet,
    ks: &[usize],
    goal_count: usize,
    trials: usize,
    params: &MetricParams,
    seed: u64,
) -> Result<ExperimentReport> {
    let n = points.len();
    if ks.is_empty() {
        return Err(invalid("timing experiment needs at least one k"));
    }
    for &k in ks {
        if k == 0 || k > n.saturating_sub(1) {
            return Err(invalid(format!("k={k} out of range for n={n}")));
        }
    }
    if goal_count == 0 || goal_count > n {
        return Err(invalid(format!("goal_count={goal_count} out of range for n={n}")));
    }
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }

    let mut report = ExperimentReport::default();
    // (engine, k) → wall times and unreachable counts across trials.
    let mut star_walls = Vec::with_capacity(trials);
    let mut knn_walls: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut knn_builds: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut knn_unreachable: BTreeMap<usize, Vec<f64>> = BTreeMap::new();

    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, trial as u64, 1));
        let mut goal_idx: Vec<usize> = sample(&mut rng, n, goal_count).into_vec();
        goal_idx.sort_unstable();
        let goals = GoalSet::new(goal_idx.iter().map(|&i| (i, 0)).collect())?;

        let start = Instant::now();
        let (star_result, stats) = dijkstra_star_with_stats(points, &goals, params)?;
        let star_wall = start.elapsed().as_secs_f64();
        star_walls.push(star_wall);

        let mut metrics = BTreeMap::new();
        metrics.insert("wall_time_s".into(), star_wall);
        metrics.insert("unreachable".into(), star_result.unreachable_count() as f64);
        stats_metrics(&mut metrics, &stats);
        report.records.push(ReportRecord {
            experiment: "bench".into(),
            engine: "dbd".into(),
            n,
            d: points.dim(),
            p: params.p(),
            q: params.q(),
            k: 0,
            seed,
            trial: trial.to_string(),
            metrics,
        });

        for &k in ks {
            let start = Instant::now();
            let graph = build_knn_graph(points, k, params, true)?;
            let build_wall = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let knn_result = dijkstra_knn(&graph, &goals)?;
            let search_wall = start.elapsed().as_secs_f64();

            knn_walls.entry(k).or_default().push(build_wall + search_wall);
            knn_builds.entry(k).or_default().push(build_wall);
            knn_unreachable
                .entry(k)
                .or_default()
                .push(knn_result.unreachable_count() as f64);

            let mut metrics = BTreeMap::new();
            metrics.insert("wall_time_s".into(), search_wall);
            metrics.insert("graph_build_s".into(), build_wall);
            metrics.insert("unreachable".into(), knn_result.unreachable_count() as f64);
            metrics.insert("edges".into(), graph.edge_count() as f64);
            report.records.push(ReportRecord {
                experiment: "bench".into(),
                engine: "dbd-knn".into(),
                n,
                d: points.dim(),
                p: params.p(),
                q: params.q(),
                k,
                seed,
                trial: trial.to_string(),
                metrics,
            });
        }
    }

    let mut aggregate = |engine: &str, k: usize, name: &str, values: &[f64]| {
        for (label, value) in [("mean", mean(values)), ("median", median(values))] {
            let record = report
                .records
                .iter_mut()
                .find(|r| r.engine == engine && r.k == k && r.trial == label);
            match record {
                Some(r) => {
                    r.metrics.insert(name.into(), value);
                }
                None => {
                    let mut metrics = BTreeMap::new();
                    metrics.insert(name.to_string(), value);
                    report.records.push(ReportRecord {
                        experiment: "bench".into(),
                        engine: engine.into(),
                        n,
                        d: points.dim(),
                        p: params.p(),
                        q: params.q(),
                        k,
                        seed,
                        trial: label.into(),
                        metrics,
                    });
                }
            }
        }
    };
    aggregate("dbd", 0, "wall_time_s", &star_walls);
    for &k in ks {
        aggregate("dbd-knn", k, "wall_time_s", &knn_walls[&k]);
        aggregate("dbd-knn", k, "graph_build_s", &knn_builds[&k]);
        aggregate("dbd-knn", k, "unreachable", &knn_unreachable[&k]);
    }
    Ok(report)
}
