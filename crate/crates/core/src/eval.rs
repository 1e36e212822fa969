//! Link-prediction and reciprocity experiments.

use std::cmp::Ordering;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{fit, fit_masked, FitResult};
use crate::error::{Error, Result};
use crate::generator::{generate, resample, GeneratorConfig};
use crate::graph::{reciprocity, TemporalNetwork};
use crate::model::{expected_edge, rate_matrix};
use crate::params::{Hyperparams, ModelParams, RecLag, Variant};
use crate::terms::TermMask;

/// Mann-Whitney estimate of `P(score of a positive > score of a negative)`,
/// with ties counted as one half.
pub fn auc(scores: &[(f64, bool)]) -> Result<f64> {
    let n_pos = scores.iter().filter(|s| s.1).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    if scores.iter().any(|s| s.0.is_nan()) {
        return Err(Error::Validation("NaN score".into()));
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    // sum over positives of (#negatives below + half the tied negatives)
    let mut wins = 0.0;
    let mut neg_below = 0usize;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start;
        while end < sorted.len() && sorted[end].0 == sorted[start].0 {
            end += 1;
        }
        let pos_tied = sorted[start..end].iter().filter(|s| s.1).count();
        let neg_tied = (end - start) - pos_tied;
        wins += pos_tied as f64 * (neg_below as f64 + 0.5 * neg_tied as f64);
        neg_below += neg_tied;
        start = end;
    }
    Ok(wins / (n_pos as f64 * n_neg as f64))
}

/// Scores every ordered pair `i != j` of snapshot `t >= 1` given snapshot
/// `t - 1`, labelled by whether the edge is present at `t`.
pub fn forecast_scores(net: &TemporalNetwork, params: &ModelParams, t: usize) -> Result<Vec<(f64, bool)>> {
    if t == 0 {
        return Err(Error::Unsupported("the first snapshot has no predecessor to forecast from".into()));
    }
    if t >= net.n_steps() {
        return Err(Error::StepOutOfRange {
            step: t,
            n_steps: net.n_steps(),
        });
    }
    let n = net.n_nodes();
    if params.n_nodes() != n {
        return Err(Error::DimensionMismatch(format!(
            "parameters have {} nodes, network has {n}",
            params.n_nodes()
        )));
    }
    let (prev, cur) = (net.snapshot(t - 1), net.snapshot(t));
    let lambda = rate_matrix(params, t);
    let beta = params.beta_at(t);
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let score = if prev.has_edge(i, j) {
                1.0 - beta
            } else {
                let rec = if prev.has_edge(j, i) { params.eta } else { 0.0 };
                (beta * (lambda[[i, j]] + rec)).clamp(0.0, 1.0)
            };
            out.push((score, cur.has_edge(i, j)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Forecast {
    pub t: usize,
    pub auc: f64,
    pub fit: FitResult,
}

/// Fits on snapshots `0..t` and scores snapshot `t`.
pub fn forecast_auc(
    net: &TemporalNetwork,
    hyper: &Hyperparams,
    variant: Variant,
    rec_lag: RecLag,
    t: usize,
) -> Result<Forecast> {
    if t == 0 {
        return Err(Error::Unsupported("AUC cannot be computed for the first snapshot".into()));
    }
    if t >= net.n_steps() {
        return Err(Error::StepOutOfRange {
            step: t,
            n_steps: net.n_steps(),
        });
    }
    let train = net.prefix(t)?;
    let fit = fit(&train, hyper, variant, rec_lag)?;
    let auc = auc(&forecast_scores(net, &fit.params, t)?)?;
    Ok(Forecast { t, auc, fit })
}

/// Assignment of every entry `(t, i, j)`, `i != j`, to one of `n_folds` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvMask {
    n_nodes: usize,
    n_steps: usize,
    n_folds: usize,
    fold: Vec<u32>,
}

impl CvMask {
    /// Uniformly random balanced folds: sizes differ by at most one.
    pub fn new(n_nodes: usize, n_steps: usize, n_folds: usize, seed: u64) -> Result<Self> {
        if n_folds < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 folds, got {n_folds}")));
        }
        let per_step = n_nodes * n_nodes.saturating_sub(1);
        let total = per_step * n_steps;
        if total < n_folds {
            return Err(Error::InvalidConfig(format!("{total} entries cannot fill {n_folds} folds")));
        }
        let mut order: Vec<u32> = (0..total as u32).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut fold = vec![0u32; total];
        for (pos, &entry) in order.iter().enumerate() {
            fold[entry as usize] = (pos % n_folds) as u32;
        }
        Ok(Self {
            n_nodes,
            n_steps,
            n_folds,
            fold,
        })
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn n_entries(&self) -> usize {
        self.fold.len()
    }

    fn entry(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n_nodes;
        let per_step = n * (n - 1);
        let (t, r) = (idx / per_step, idx % per_step);
        let (i, c) = (r / (n - 1), r % (n - 1));
        let j = if c >= i { c + 1 } else { c };
        (t, i, j)
    }

    pub fn fold_of(&self, t: usize, i: usize, j: usize) -> usize {
        debug_assert!(i != j);
        let n = self.n_nodes;
        let c = if j > i { j - 1 } else { j };
        self.fold[t * n * (n - 1) + i * (n - 1) + c] as usize
    }

    /// Entries `(t, i, j)` of fold `f`, in lexicographic order.
    pub fn entries(&self, f: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.fold
            .iter()
            .enumerate()
            .filter(move |(_, &g)| g as usize == f)
            .map(|(idx, _)| self.entry(idx))
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        self.fold.iter().for_each(|&f| sizes[f as usize] += 1);
        sizes
    }

    pub fn term_mask(&self, f: usize) -> TermMask {
        TermMask::from_entries(self.n_steps, self.entries(f))
    }
}

/// Expected value of a single held-out entry: `lambda_ij(0)` for the initial
/// snapshot, the forecast score given the previous snapshot otherwise.
pub fn entry_score(net: &TemporalNetwork, params: &ModelParams, t: usize, i: usize, j: usize) -> Result<f64> {
    if t == 0 {
        return crate::model::lambda0(params, i, j, 0);
    }
    let prev = net.snapshot(t - 1);
    expected_edge(params, prev.has_edge(i, j), prev.has_edge(j, i) as u8 as f64, i, j, t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub variant: Variant,
    /// `None` for a fold whose held-out entries are all of one class.
    pub fold_auc: Vec<Option<f64>>,
    pub mean_auc: Option<f64>,
}

/// Held-out link prediction: each fold in turn is masked out of training and
/// its entries are scored by the fitted model.
pub fn cross_validate(
    net: &TemporalNetwork,
    hyper: &Hyperparams,
    variant: Variant,
    rec_lag: RecLag,
    n_folds: usize,
    seed: u64,
) -> Result<CvReport> {
    let mask = CvMask::new(net.n_nodes(), net.n_steps(), n_folds, seed)?;
    let fold_auc = (0..n_folds)
        .map(|f| {
            let fit = fit_masked(net, hyper, variant, rec_lag, Some(&mask.term_mask(f)))?;
            let scores = mask
                .entries(f)
                .map(|(t, i, j)| Ok((entry_score(net, &fit.params, t, i, j)?, net.snapshot(t).has_edge(i, j))))
                .collect::<Result<Vec<_>>>()?;
            match auc(&scores) {
                Ok(a) => Ok(Some(a)),
                Err(Error::UndefinedAuc) => {
                    warn!("fold {f} holds a single class; skipped");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let valid: Vec<f64> = fold_auc.iter().flatten().copied().collect();
    let mean_auc = (!valid.is_empty()).then(|| mean_std(&valid).0);
    Ok(CvReport {
        k: hyper.k,
        variant,
        fold_auc,
        mean_auc,
    })
}

/// Mean and population standard deviation, with compensated summation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = kahan_sum(xs.iter().copied()) / n;
    let var = kahan_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / n;
    (mean, var.max(0.0).sqrt())
}

fn kahan_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0, 0.0);
    for x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Share of trials where `a` beats `b`; ties count one half to each side.
pub fn win_rate(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples");
    if a.is_empty() {
        return f64::NAN;
    }
    let wins: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| match x.partial_cmp(y) {
            Some(Ordering::Greater) => 1.0,
            Some(Ordering::Equal) => 0.5,
            _ => 0.0,
        })
        .sum();
    wins / a.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityRow {
    pub t: usize,
    pub real: f64,
    pub sample_mean: f64,
    pub sample_std: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityReport {
    pub rows: Vec<ReciprocityRow>,
    /// The fit put `beta` at its floor: resampled networks are frozen.
    pub beta_floored: bool,
}

impl ReciprocityReport {
    /// Steps where the real value lies outside `mean +- z std`.
    pub fn outside(&self, z: f64) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| (r.real - r.sample_mean).abs() > z * r.sample_std)
            .map(|r| r.t)
            .collect()
    }
}

fn sample_seed(seed: u64, sample: usize) -> u64 {
    seed.wrapping_add((sample as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Compares the reciprocity of `net` with networks resampled from `params`.
pub fn reciprocity_from_params(
    net: &TemporalNetwork,
    params: &ModelParams,
    n_samples: usize,
    seed: u64,
) -> Result<ReciprocityReport> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|s| resample(params, net.n_steps(), sample_seed(seed, s)))
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..net.n_steps())
        .map(|t| {
            let values = samples.iter().map(|s| reciprocity(s, t)).collect::<Result<Vec<_>>>()?;
            let (sample_mean, sample_std) = mean_std(&values);
            Ok(ReciprocityRow {
                t,
                real: reciprocity(net, t)?,
                sample_mean,
                sample_std,
                samples: values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let beta_floored = params.beta.iter().any(|&b| b <= crate::em::BETA_FLOOR);
    Ok(ReciprocityReport { rows, beta_floored })
}

/// Fits `net` and compares its reciprocity with `n_samples` resampled networks.
pub fn reciprocity_study(
    net: &TemporalNetwork,
    hyper: &Hyperparams,
    variant: Variant,
    rec_lag: RecLag,
    n_samples: usize,
) -> Result<ReciprocityReport> {
    let fit = fit(net, hyper, variant, rec_lag)?;
    let mut report = reciprocity_from_params(net, &fit.params, n_samples, hyper.seed)?;
    report.beta_floored |= fit.warnings.beta_floored;
    if report.beta_floored {
        warn!("beta sits at its floor; resampled networks do not evolve");
    }
    Ok(report)
}

/// Forecast AUC of the full model and of the `eta = 0` ablation on sampled
/// benchmark networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub experiment: String,
    pub steps: Vec<usize>,
    /// `full[s][n]`: AUC of sample `n` at `steps[s]`.
    pub full: Vec<Vec<f64>>,
    pub ablation: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucSummary {
    pub t: usize,
    pub full_mean: f64,
    pub full_std: f64,
    pub ablation_mean: f64,
    pub ablation_std: f64,
    /// Share of samples where the full model has the higher AUC.
    pub win_rate: f64,
}

/// One long-format record: `experiment, t, sample, metric, value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    /// `None` for records that span every snapshot.
    pub t: Option<usize>,
    pub sample: Option<usize>,
    pub metric: String,
    pub value: f64,
}

impl AucReport {
    pub fn summary(&self) -> Vec<AucSummary> {
        self.steps
            .iter()
            .enumerate()
            .map(|(s, &t)| {
                let (full_mean, full_std) = mean_std(&self.full[s]);
                let (ablation_mean, ablation_std) = mean_std(&self.ablation[s]);
                AucSummary {
                    t,
                    full_mean,
                    full_std,
                    ablation_mean,
                    ablation_std,
                    win_rate: win_rate(&self.full[s], &self.ablation[s]),
                }
            })
            .collect()
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        for (s, &t) in self.steps.iter().enumerate() {
            for (metric, values) in [("auc", &self.full[s]), ("auc_eta0", &self.ablation[s])] {
                for (n, &value) in values.iter().enumerate() {
                    rows.push(ReportRow {
                        experiment: self.experiment.clone(),
                        t: Some(t),
                        sample: Some(n),
                        metric: metric.into(),
                        value,
                    });
                }
            }
        }
        rows
    }
}

impl ReciprocityReport {
    pub fn rows(&self, experiment: &str) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        for r in &self.rows {
            let row = |sample, metric: &str, value| ReportRow {
                experiment: experiment.into(),
                t: Some(r.t),
                sample,
                metric: metric.into(),
                value,
            };
            rows.push(row(None, "real", r.real));
            rows.extend(r.samples.iter().enumerate().map(|(n, &v)| row(Some(n), "sample", v)));
            rows.push(row(None, "sample_mean", r.sample_mean));
            rows.push(row(None, "sample_std", r.sample_std));
        }
        rows
    }
}

/// Samples `n_samples` benchmark networks (sample `n` uses seed
/// `cfg.seed + n`) and records the forecast AUC at each of `steps` for the full
/// model and for the `eta = 0` ablation.
pub fn forecast_benchmark(
    cfg: &GeneratorConfig,
    hyper: &Hyperparams,
    variant: Variant,
    n_samples: usize,
    steps: &[usize],
) -> Result<AucReport> {
    if let Some(&t) = steps.iter().find(|&&t| t == 0 || t > cfg.n_steps) {
        return Err(Error::InvalidConfig(format!("forecast step {t} outside 1..={}", cfg.n_steps)));
    }
    let ablated = Hyperparams {
        eta_zero: true,
        ..hyper.clone()
    };
    let per_sample = (0..n_samples)
        .into_par_iter()
        .map(|n| {
            let sample_cfg = GeneratorConfig {
                seed: cfg.seed.wrapping_add(n as u64),
                ..cfg.clone()
            };
            let (net, _) = generate(&sample_cfg)?;
            steps
                .iter()
                .map(|&t| {
                    let full = forecast_auc(&net, hyper, variant, RecLag::Previous, t)?.auc;
                    let ablation = forecast_auc(&net, &ablated, variant, RecLag::Previous, t)?.auc;
                    Ok((full, ablation))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let full = (0..steps.len()).map(|s| per_sample.iter().map(|r| r[s].0).collect()).collect();
    let ablation = (0..steps.len()).map(|s| per_sample.iter().map(|r| r[s].1).collect()).collect();
    Ok(AucReport {
        experiment: format!("forecast-{variant}-eta{}", cfg.eta),
        steps: steps.to_vec(),
        full,
        ablation,
    })
}
