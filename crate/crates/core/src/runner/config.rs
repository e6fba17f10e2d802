// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lattice::TrotterSpec;
use crate::mitigator::TrainingConfig;
use crate::sim::{NoiseModel, MAX_EXACT_QUBITS, MAX_NOISY_QUBITS};
use crate::zne::{ModelSelection, NoiseScale, ScalingMethod};

use super::RunnerError;

/// How many leading Trotter steps of a `k`-step circuit get fully compressed
/// in the partially compressed variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialRule {
    /// `floor(2k/3)`.
    TwoThirds,
    /// `floor(k/3)`.
    OneThird,
}

impl PartialRule {
    pub fn compressed_steps(&self, k: usize) -> usize {
        match self {
            PartialRule::TwoThirds => 2 * k / 3,
            PartialRule::OneThird => k / 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZneConfig {
    pub n_spins: usize,
    pub steps: usize,
    pub lambdas: Vec<f64>,
    pub method: ScalingMethod,
    pub selection: ModelSelection,
    /// Two-qubit rates swept by the demo. The first one is extrapolated.
    pub noise_levels: Vec<f64>,
}

impl Default for ZneConfig {
    fn default() -> Self {
        Self {
            n_spins: 3,
            steps: 100,
            lambdas: vec![1.0, 3.0, 5.0],
            method: ScalingMethod::GlobalFold,
            selection: ModelSelection::default(),
            noise_levels: vec![0.01, 0.05, 0.10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub enabled: bool,
    pub seeds: Vec<u64>,
    /// Number of evenly spaced sizes, `steps/(points+1)` apart.
    pub points: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            seeds: (0..5).collect(),
            points: 9,
        }
    }
}

impl CurveConfig {
    /// `10, 20, ..., 90` for 100 steps and `5, 10, ..., 45` for 50.
    pub fn sizes(&self, steps: usize) -> Vec<usize> {
        let stride = steps / (self.points + 1);
        (1..=self.points)
            .map(|i| i * stride)
            .filter(|&s| s > 0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spins: Vec<usize>,
    pub j_x: f64,
    pub j_y: f64,
    pub dt: f64,
    pub total_time: f64,
    /// Forces the step count for every chain. Otherwise chains up to five
    /// spins run `total_time/dt` steps and wider chains half of that.
    pub steps: Option<usize>,
    pub shots: u64,
    pub noise: NoiseModel,
    pub partial_rule: PartialRule,
    pub zne: ZneConfig,
    /// `seed` is ignored here; training draws from the master seed.
    pub training: TrainingConfig,
    pub learning_curve: CurveConfig,
    /// Train one model across all chains instead of one per chain.
    pub pooled: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker-thread bound. `None` uses every core.
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            spins: (3..=10).collect(),
            j_x: -0.8,
            j_y: 0.2,
            dt: 0.025,
            total_time: 2.5,
            steps: None,
            shots: 100_000,
            noise: NoiseModel::default(),
            partial_rule: PartialRule::TwoThirds,
            zne: ZneConfig::default(),
            training: TrainingConfig::default(),
            learning_curve: CurveConfig::default(),
            pooled: false,
            seed: 0,
            out_dir: PathBuf::from("out"),
            jobs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, RunnerError> {
        serde_json::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunnerError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        hex_digest(self.to_json().as_bytes())
    }

    fn base_steps(&self) -> usize {
        (self.total_time / self.dt).round() as usize
    }

    pub fn steps_for(&self, n_spins: usize) -> usize {
        match self.steps {
            Some(s) => s,
            None if n_spins <= 5 => self.base_steps(),
            None => self.base_steps() / 2,
        }
    }

    pub fn spec_for(&self, n_spins: usize) -> TrotterSpec {
        TrotterSpec::new(
            n_spins,
            self.j_x,
            self.j_y,
            self.dt,
            self.steps_for(n_spins),
        )
    }

    /// `t_k = k·dt` for `k = 1..=steps`.
    pub fn times_for(&self, n_spins: usize) -> Vec<f64> {
        (1..=self.steps_for(n_spins))
            .map(|k| k as f64 * self.dt)
            .collect()
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let bad = |m: String| Err(RunnerError::Config(m));
        if self.spins.is_empty() {
            return bad("spins must not be empty".into());
        }
        let limit = MAX_EXACT_QUBITS.min(MAX_NOISY_QUBITS);
        for &n in &self.spins {
            if !(2..=limit).contains(&n) {
                return bad(format!("spin count {n} outside 2..={limit}"));
            }
        }
        let mut sorted = self.spins.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.spins.len() {
            return bad("spins contains duplicates".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return bad(format!("total_time = {} must be positive", self.total_time));
        }
        if self.steps.is_none() {
            let implied = self.base_steps() as f64 * self.dt;
            if (implied - self.total_time).abs() > 1e-9 * self.total_time {
                return bad(format!(
                    "total_time {} is not a whole number of dt {} steps",
                    self.total_time, self.dt
                ));
            }
        }
        for &n in &self.spins {
            if self.steps_for(n) < 2 {
                return bad(format!("N = {n} would run fewer than 2 steps"));
            }
            self.spec_for(n)
                .validate()
                .map_err(|e| RunnerError::Config(e.to_string()))?;
        }
        if self.shots == 0 {
            return bad("shots must be positive".into());
        }
        self.noise
            .validate()
            .map_err(|e| RunnerError::Config(e.to_string()))?;
        self.training
            .validate()
            .map_err(|e| RunnerError::Config(e.to_string()))?;
        let z = &self.zne;
        if !(2..=limit).contains(&z.n_spins) || z.steps == 0 {
            return bad("zne needs 2..=10 spins and at least one step".into());
        }
        if z.lambdas.len() < 2 || z.lambdas[0] != 1.0 || z.lambdas.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("zne lambdas must start at 1 and increase strictly".into());
        }
        for &l in &z.lambdas {
            NoiseScale {
                lambda: l,
                method: z.method,
            }
            .validate()
            .map_err(|e| RunnerError::Config(e.to_string()))?;
        }
        if z.noise_levels.is_empty() || z.noise_levels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("zne noise_levels must be non-empty probabilities".into());
        }
        if self.learning_curve.enabled && self.learning_curve.seeds.is_empty() {
            return bad("learning_curve.seeds must not be empty".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive".into());
        }
        Ok(())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
