// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Learned noisy-to-noiseless regression for staggered-magnetization series.
//!
//! A small sigmoid MLP is fit on a random subset of time steps, where the
//! noiseless value is known, and then applied to every step.

mod checkpoint;
mod mlp;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use mlp::{
    adam_step, forward, loss_and_gradients, sigmoid, AdamState, MlpParams, ADAM_BETA1, ADAM_BETA2,
    ADAM_EPS,
};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{rmse, TimeSeries, Variant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MitigatorError {
    #[error("feature vector has {got} entries, model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("series do not share a time grid: {0}")]
    GridMismatch(String),
    #[error("{variant} value {value} at step {step} outside [-1-eps, 1+eps] or not finite")]
    OutOfRange {
        variant: &'static str,
        step: usize,
        value: f64,
    },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },
    #[error("learning-curve size {size} must be in 1..{available}")]
    BadSize { size: usize, available: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub train_fraction: f64,
    pub hidden: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Epochs before early stopping starts watching the validation loss.
    pub warmup_epochs: usize,
    /// Fraction of the training rows held back for early stopping.
    pub val_split: f64,
    pub seed: u64,
    /// Adds Trotter-index parity as a fifth feature.
    pub parity_feature: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.30,
            hidden: 16,
            lr: 0.01,
            max_epochs: 5000,
            patience: 100,
            warmup_epochs: 500,
            val_split: 0.1,
            seed: 0,
            parity_feature: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), MitigatorError> {
        let bad = |m: String| Err(MitigatorError::InvalidConfig(m));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction = {} not in (0, 1)",
                self.train_fraction
            ));
        }
        if self.hidden == 0 {
            return bad("hidden must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr = {} must be positive", self.lr));
        }
        if self.patience >= self.max_epochs {
            return bad(format!(
                "patience {} must be below max_epochs {}",
                self.patience, self.max_epochs
            ));
        }
        if self.warmup_epochs >= self.max_epochs {
            return bad(format!(
                "warmup_epochs {} must be below max_epochs {}",
                self.warmup_epochs, self.max_epochs
            ));
        }
        if !(0.0..1.0).contains(&self.val_split) {
            return bad(format!("val_split = {} not in [0, 1)", self.val_split));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        if self.parity_feature {
            5
        } else {
            4
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    /// CSV label. Validation rows are part of the fitted subset.
    pub fn label(&self) -> &'static str {
        match self {
            Split::Train | Split::Val => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub n_spins: usize,
    pub step: usize,
    pub t: f64,
    pub ms_fc_noisy: f64,
    pub ms_pc_noisy: f64,
    /// `t / T`.
    pub t_norm: f64,
    pub target_ms_noiseless: f64,
}

impl FeatureRow {
    /// `[fc, pc, t/T, N/10]`, plus step parity when requested.
    pub fn features(&self, parity: bool) -> Vec<f64> {
        let mut x = vec![
            self.ms_fc_noisy,
            self.ms_pc_noisy,
            self.t_norm,
            self.n_spins as f64 / 10.0,
        ];
        if parity {
            x.push((self.step % 2) as f64);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<FeatureRow>,
    pub split: Vec<Split>,
    /// Tolerance used for the magnitude checks.
    pub epsilon: f64,
    pub parity_feature: bool,
}

fn range_epsilon(shots: Option<u64>) -> f64 {
    match shots {
        Some(s) if s > 0 => 3.0 / (s as f64).sqrt(),
        _ => 1e-9,
    }
}

/// Picks `n_fit` of `n` rows at random, then sends `round(val_split * n_fit)`
/// of those to validation, keeping at least one row for the gradient.
fn draw_split(n: usize, n_fit: usize, val_split: f64, rng: &mut ChaCha8Rng) -> Vec<Split> {
    let mut split = vec![Split::Test; n];
    let mut n_val = (val_split * n_fit as f64).round() as usize;
    if val_split > 0.0 && n_fit >= 2 {
        n_val = n_val.max(1);
    }
    n_val = n_val.min(n_fit.saturating_sub(1));
    for (k, i) in sample(rng, n, n_fit).into_iter().enumerate() {
        split[i] = if k < n_val { Split::Val } else { Split::Train };
    }
    split
}

/// One row per step of a single chain. Step `k` (1-based) is `times[k-1]`.
pub fn build_dataset(
    exact: &TimeSeries,
    fc: &TimeSeries,
    pc: &TimeSeries,
    cfg: &TrainingConfig,
) -> Result<Dataset, MitigatorError> {
    cfg.validate()?;
    for (name, s) in [("fc", fc), ("pc", pc)] {
        if !s.same_grid(exact) {
            return Err(MitigatorError::GridMismatch(format!(
                "{name} grid differs from exact"
            )));
        }
        if s.n_spins != exact.n_spins {
            return Err(MitigatorError::GridMismatch(format!(
                "{name} has {} spins, exact has {}",
                s.n_spins, exact.n_spins
            )));
        }
    }
    let n = exact.len();
    if n < 2 {
        return Err(MitigatorError::GridMismatch(
            "need at least two steps".into(),
        ));
    }
    let t_max = exact.times.iter().cloned().fold(f64::MIN, f64::max);
    if t_max.is_nan() || t_max <= 0.0 {
        return Err(MitigatorError::GridMismatch(
            "time grid must reach t > 0".into(),
        ));
    }
    let eps = range_epsilon(fc.provenance.shots.or(pc.provenance.shots));
    let check = |variant: &'static str, step: usize, value: f64| {
        if value.is_finite() && value.abs() <= 1.0 + eps {
            Ok(value)
        } else {
            Err(MitigatorError::OutOfRange {
                variant,
                step,
                value,
            })
        }
    };
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let step = i + 1;
        rows.push(FeatureRow {
            n_spins: exact.n_spins,
            step,
            t: exact.times[i],
            ms_fc_noisy: check("fc_noisy", step, fc.values[i])?,
            ms_pc_noisy: check("pc_noisy", step, pc.values[i])?,
            t_norm: exact.times[i] / t_max,
            target_ms_noiseless: check("exact", step, exact.values[i])?,
        });
    }
    let n_fit = ((cfg.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(exact.n_spins as u64);
    let split = draw_split(n, n_fit, cfg.val_split, &mut rng);
    Ok(Dataset {
        rows,
        split,
        epsilon: eps,
        parity_feature: cfg.parity_feature,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Concatenates per-chain datasets for pooled-N training, keeping splits.
    pub fn pooled(parts: &[Dataset]) -> Dataset {
        Dataset {
            rows: parts.iter().flat_map(|d| d.rows.iter().cloned()).collect(),
            split: parts.iter().flat_map(|d| d.split.iter().copied()).collect(),
            epsilon: parts.iter().map(|d| d.epsilon).fold(0.0, f64::max),
            parity_feature: parts.first().is_some_and(|d| d.parity_feature),
        }
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.split[i] == which)
            .collect()
    }

    /// Train and validation rows together.
    pub fn fitted_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.split[i] != Split::Test)
            .collect()
    }

    fn batch(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        idx.iter()
            .map(|&i| {
                let r = &self.rows[i];
                (r.features(self.parity_feature), r.target_ms_noiseless)
            })
            .unzip()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target_ms_noiseless).collect()
    }

    pub fn fc_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ms_fc_noisy).collect()
    }

    pub fn pc_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ms_pc_noisy).collect()
    }

    /// RMSE of `values` against the noiseless targets over the test rows.
    pub fn held_out_rmse(&self, values: &[f64]) -> f64 {
        rmse(values, &self.targets(), &self.indices(Split::Test))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Epoch (0-based) whose parameters were returned.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Full-batch Adam with early stopping on validation MSE. Falls back to the
/// training MSE when the dataset has no validation rows. The returned
/// parameters have the lowest validation MSE recorded after warm-up; the
/// first epochs are skipped because two or three validation rows can dip
/// spuriously while Adam is still oscillating.
pub fn train(
    ds: &Dataset,
    cfg: &TrainingConfig,
) -> Result<(MlpParams, TrainingHistory), MitigatorError> {
    cfg.validate()?;
    let train_idx = ds.indices(Split::Train);
    let val_idx = ds.indices(Split::Val);
    let (xs, ys) = ds.batch(&train_idx);
    let (vx, vy) = ds.batch(&val_idx);
    if xs.is_empty() {
        return Err(MitigatorError::EmptyBatch);
    }
    let nf = xs[0].len();
    let mut p = MlpParams::init(nf, cfg.hidden, cfg.seed);
    let mut best = p.clone();
    let mut best_val = f64::INFINITY;
    let mut history = TrainingHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut since_best = 0;
    for epoch in 0..cfg.max_epochs {
        let (loss, grad) = loss_and_gradients(&p, &xs, &ys)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(MitigatorError::Divergence { epoch, loss });
        }
        adam_step(&mut p, &grad, cfg.lr);
        let val = if vx.is_empty() {
            loss_and_gradients(&p, &xs, &ys)?.0
        } else {
            loss_and_gradients(&p, &vx, &vy)?.0
        };
        if !val.is_finite() {
            return Err(MitigatorError::Divergence { epoch, loss: val });
        }
        history.train_loss.push(loss);
        history.val_loss.push(val);
        if epoch < cfg.warmup_epochs {
            continue;
        }
        if val < best_val {
            best_val = val;
            best = p.clone();
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    Ok((best, history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub series: TimeSeries,
    pub split: Vec<Split>,
    /// `|value| > 1 + eps`. Values are reported, not clamped.
    pub out_of_range: Vec<bool>,
}

impl Prediction {
    pub fn n_out_of_range(&self) -> usize {
        self.out_of_range.iter().filter(|f| **f).count()
    }
}

/// Runs every row through the model. Pooled datasets should be predicted per
/// chain; the returned series takes its chain width from the first row.
pub fn predict_series(p: &MlpParams, ds: &Dataset) -> Result<Prediction, MitigatorError> {
    let mut values = Vec::with_capacity(ds.len());
    for r in &ds.rows {
        values.push(forward(p, &r.features(ds.parity_feature))?);
    }
    let out_of_range = values.iter().map(|v| v.abs() > 1.0 + ds.epsilon).collect();
    let n_spins = ds.rows.first().map_or(0, |r| r.n_spins);
    let times = ds.rows.iter().map(|r| r.t).collect();
    Ok(Prediction {
        series: TimeSeries::new(n_spins, Variant::Mitigated, times, values),
        split: ds.split.clone(),
        out_of_range,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub size: usize,
    pub mean_rmse: f64,
    /// Sample standard deviation across seeds; zero for a single seed.
    pub std_rmse: f64,
    pub per_seed: Vec<f64>,
}

/// Held-out RMSE when training on `size` random rows, for each seed.
pub fn learning_curve_cell(
    ds: &Dataset,
    size: usize,
    seed: u64,
    cfg: &TrainingConfig,
) -> Result<f64, MitigatorError> {
    let n = ds.len();
    if size == 0 || size >= n {
        return Err(MitigatorError::BadSize { size, available: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(size as u64);
    let cell = Dataset {
        split: draw_split(n, size, cfg.val_split, &mut rng),
        ..ds.clone()
    };
    let cell_cfg = TrainingConfig {
        seed,
        ..cfg.clone()
    };
    let (p, _) = train(&cell, &cell_cfg)?;
    let pred = predict_series(&p, &cell)?;
    Ok(cell.held_out_rmse(&pred.series.values))
}

/// Mean and spread of held-out RMSE per training-set size. Cells run in
/// parallel; each is deterministic on its own.
pub fn learning_curve(
    ds: &Dataset,
    sizes: &[usize],
    seeds: &[u64],
    cfg: &TrainingConfig,
) -> Result<Vec<CurveRow>, MitigatorError> {
    for &s in sizes {
        if s == 0 || s >= ds.len() {
            return Err(MitigatorError::BadSize {
                size: s,
                available: ds.len(),
            });
        }
    }
    let cells: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let results: Vec<f64> = cells
        .par_iter()
        .map(|&(s, seed)| learning_curve_cell(ds, s, seed, cfg))
        .collect::<Result<_, _>>()?;
    Ok(sizes
        .iter()
        .zip(results.chunks(seeds.len().max(1)))
        .map(|(&size, r)| {
            let k = r.len() as f64;
            let mean = r.iter().sum::<f64>() / k;
            let std = if r.len() > 1 {
                (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            CurveRow {
                size,
                mean_rmse: mean,
                std_rmse: std,
                per_seed: r.to_vec(),
            }
        })
        .collect())
}
