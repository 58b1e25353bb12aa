use serde::{Deserialize, Serialize};

use super::{train_one, TrainConfig};
use crate::error::{Error, Result};
use crate::graphio::{DatasetBundle, Splits};
use crate::metrics::{evaluate, EvalReport};
use crate::numkit::Rng;

const FOLD_STREAM: u64 = 13;

/// Metrics of one (seed, fold) run on the fixed test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub fold: usize,
    pub metrics: EvalReport,
    pub theta: Option<[f64; 3]>,
    pub alpha: Option<[f64; 3]>,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub sensitivity: f64,
    pub roc_auc: f64,
}

impl MetricSummary {
    fn of(r: &EvalReport) -> Self {
        Self { accuracy: r.accuracy, macro_f1: r.macro_f1, sensitivity: r.sensitivity, roc_auc: r.roc_auc }
    }

    fn values(&self) -> [f64; 4] {
        [self.accuracy, self.macro_f1, self.sensitivity, self.roc_auc]
    }

    fn from_values(v: [f64; 4]) -> Self {
        Self { accuracy: v[0], macro_f1: v[1], sensitivity: v[2], roc_auc: v[3] }
    }
}

/// Runs plus mean and population standard deviation of each metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub runs: Vec<RunResult>,
    pub mean: MetricSummary,
    pub std: MetricSummary,
    /// Mean learned θ over runs that have one.
    pub theta_mean: Option<[f64; 3]>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    (mean, var.sqrt())
}

/// Aggregates runs (order-independent up to rounding).
pub fn aggregate(runs: Vec<RunResult>) -> Result<CvResult> {
    if runs.is_empty() {
        return Err(Error::Empty("cross-validation runs"));
    }
    let mut mean = [0.0; 4];
    let mut std = [0.0; 4];
    for i in 0..4 {
        let xs: Vec<f64> = runs.iter().map(|r| MetricSummary::of(&r.metrics).values()[i]).collect();
        (mean[i], std[i]) = mean_std(&xs);
    }
    let thetas: Vec<[f64; 3]> = runs.iter().filter_map(|r| r.theta).collect();
    let theta_mean = (!thetas.is_empty()).then(|| {
        let mut t = [0.0; 3];
        for th in &thetas {
            for i in 0..3 {
                t[i] += th[i] / thetas.len() as f64;
            }
        }
        t
    });
    Ok(CvResult { runs, mean: MetricSummary::from_values(mean), std: MetricSummary::from_values(std), theta_mean })
}

/// Shuffles `pool` with `seed` and cuts it into `folds` contiguous parts
/// whose sizes differ by at most one.
pub fn fold_assignment(pool: &[usize], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > pool.len() {
        return Err(Error::Validation(format!("{folds} folds for a pool of {} nodes", pool.len())));
    }
    let mut order = pool.to_vec();
    Rng::stream(seed, FOLD_STREAM).shuffle(&mut order);
    let (base, extra) = (order.len() / folds, order.len() % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

/// The bundle re-split for one fold: the held-out fold becomes validation,
/// the other folds training; the test split is untouched.
pub fn fold_bundle(bundle: &DatasetBundle, folds: &[Vec<usize>], held_out: usize) -> Result<DatasetBundle> {
    let train = folds.iter().enumerate().filter(|&(i, _)| i != held_out).flat_map(|(_, f)| f.iter().copied()).collect();
    let splits = Splits { train, val: folds[held_out].clone(), test: bundle.splits.test.clone() };
    DatasetBundle::new(bundle.features.clone(), bundle.labels.clone(), splits, bundle.edges.clone())
}

/// Trains on one fold and scores the test split.
pub fn run_fold(bundle: &DatasetBundle, cfg: &TrainConfig, seed: u64, fold: usize) -> Result<RunResult> {
    let pool: Vec<usize> = bundle.splits.train.iter().chain(&bundle.splits.val).copied().collect();
    let folds = fold_assignment(&pool, cfg.folds, seed)?;
    let fb = fold_bundle(bundle, &folds, fold)?;
    let out = train_one(&fb, cfg, seed)?;
    let test = &bundle.splits.test;
    if test.is_empty() {
        return Err(Error::Validation("cross-validation needs a non-empty test split".into()));
    }
    let pred = out.predict(&fb)?;
    let truth: Vec<usize> = test.iter().map(|&u| bundle.labels[u]).collect();
    let labels: Vec<usize> = test.iter().map(|&u| pred.labels[u]).collect();
    let scores = pred.probs.select_rows(test);
    Ok(RunResult {
        seed,
        fold,
        metrics: evaluate(&labels, &scores, &truth, out.model.num_classes)?,
        theta: out.params.theta(),
        alpha: out.params.alpha(),
        final_loss: out.log.records.last().map(|r| r.loss),
    })
}

/// `folds × seeds` runs over the pool `train ∪ val`, sequentially.
pub fn cross_validate(bundle: &DatasetBundle, cfg: &TrainConfig) -> Result<CvResult> {
    cross_validate_parallel(bundle, cfg, 1)
}

/// As [`cross_validate`], spreading runs over up to `threads` threads.
/// Results are identical for every thread count.
pub fn cross_validate_parallel(bundle: &DatasetBundle, cfg: &TrainConfig, threads: usize) -> Result<CvResult> {
    cfg.validate()?;
    let jobs: Vec<(u64, usize)> = cfg.seeds.iter().flat_map(|&s| (0..cfg.folds).map(move |f| (s, f))).collect();
    let pool = bundle.splits.train.len() + bundle.splits.val.len();
    if cfg.folds > pool {
        return Err(Error::Validation(format!("{} folds for a pool of {pool} nodes", cfg.folds)));
    }
    let threads = threads.clamp(1, jobs.len());
    let results: Vec<Result<RunResult>> = if threads == 1 {
        jobs.iter().map(|&(s, f)| run_fold(bundle, cfg, s, f)).collect()
    } else {
        let mut slots: Vec<Option<Result<RunResult>>> = (0..jobs.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let jobs = &jobs;
                    scope.spawn(move || {
                        (t..jobs.len())
                            .step_by(threads)
                            .map(|i| (i, run_fold(bundle, cfg, jobs[i].0, jobs[i].1)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("cross-validation worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().map(|r| r.expect("every job ran")).collect()
    };
    aggregate(results.into_iter().collect::<Result<_>>()?)
}
