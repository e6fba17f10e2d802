// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compress::{merge_append, CompressionReport, TriangleCompressor, YbeSolverOptions};
use crate::lattice::{cnot_count, trotter_step_blocks, Circuit, TrotterSpec};
use crate::mitigator::{
    build_dataset, learning_curve, predict_series, train, CurveRow, Dataset, MlpParams, Prediction,
    Split, TrainingConfig, TrainingHistory,
};
use crate::series::{Provenance, TimeSeries, Variant};
use crate::sim::{
    apply_circuit_noisy, apply_circuit_pure, exact_evolution_oracle, measure_counts_with_rng,
    neel_state, staggered_magnetization, MeasureSource, NoiseModel,
};
use crate::zne::{zne_timeseries, ExtrapolationModel};

use super::{ExperimentConfig, PartialRule, RunnerError};

/// Fully and partially compressed circuits for steps `1..=n_steps`.
#[derive(Debug, Clone)]
pub struct StepCircuits {
    pub fc: Vec<Circuit>,
    pub pc: Vec<Circuit>,
    /// Report of the fully compressed `n_steps` circuit.
    pub fc_report: CompressionReport,
}

/// Builds the per-step circuits by absorbing one Trotter step at a time.
/// The step-`k` partially compressed circuit reuses the fully compressed
/// circuit of its leading steps and merge-appends the rest.
pub fn step_circuits(spec: &TrotterSpec, rule: PartialRule) -> Result<StepCircuits, RunnerError> {
    spec.validate()?;
    let n = spec.n_spins;
    let step = trotter_step_blocks(spec);
    let mut tc = TriangleCompressor::new(n, YbeSolverOptions::default());
    let mut fc = Vec::with_capacity(spec.n_steps);
    for _ in 0..spec.n_steps {
        for b in &step {
            tc.absorb(*b)?;
        }
        fc.push(tc.circuit());
    }
    let mut fc_report = tc.report();
    fc_report.output_blocks = fc.last().map_or(0, Circuit::len);
    let mut pc = Vec::with_capacity(spec.n_steps);
    for k in 1..=spec.n_steps {
        let c = rule.compressed_steps(k).min(k);
        let prefix = if c == 0 {
            Circuit::empty(n)
        } else {
            fc[c - 1].clone()
        };
        let tail: Vec<_> = std::iter::repeat_n(step.iter().copied(), k - c)
            .flatten()
            .collect();
        pc.push(merge_append(&prefix, &tail)?.0);
    }
    Ok(StepCircuits { fc, pc, fc_report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCost {
    pub step: usize,
    pub cnot_fc: usize,
    pub cnot_pc: usize,
    pub depth_fc: usize,
    pub depth_pc: usize,
}

/// Noisy output distributions of one chain, before any sampling.
#[derive(Debug, Clone)]
pub struct ChainSimulation {
    pub n_spins: usize,
    pub exact: TimeSeries,
    pub fc_distributions: Vec<Vec<f64>>,
    pub pc_distributions: Vec<Vec<f64>>,
    pub costs: Vec<StepCost>,
    pub fc_report: CompressionReport,
}

pub fn simulate_chain(
    cfg: &ExperimentConfig,
    n_spins: usize,
) -> Result<ChainSimulation, RunnerError> {
    let spec = cfg.spec_for(n_spins);
    let times = cfg.times_for(n_spins);
    let s0 = neel_state(n_spins)?;
    let exact = exact_evolution_oracle(&spec, &times, &s0)?;
    let circuits = step_circuits(&spec, cfg.partial_rule)?;
    let simulate = |cs: &[Circuit]| -> Result<Vec<Vec<f64>>, RunnerError> {
        cs.par_iter()
            .map(|c| Ok(apply_circuit_noisy(c, &s0, &cfg.noise, 1.0)?.probabilities()))
            .collect()
    };
    let fc_distributions = simulate(&circuits.fc)?;
    let pc_distributions = simulate(&circuits.pc)?;
    let costs = circuits
        .fc
        .iter()
        .zip(&circuits.pc)
        .enumerate()
        .map(|(i, (f, p))| StepCost {
            step: i + 1,
            cnot_fc: cnot_count(f),
            cnot_pc: cnot_count(p),
            depth_fc: f.depth(),
            depth_pc: p.depth(),
        })
        .collect();
    Ok(ChainSimulation {
        n_spins,
        exact,
        fc_distributions,
        pc_distributions,
        costs,
        fc_report: circuits.fc_report,
    })
}

struct Distribution<'a> {
    n_qubits: usize,
    probs: &'a [f64],
}

impl MeasureSource for Distribution<'_> {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    fn distribution(&self) -> Vec<f64> {
        self.probs.to_vec()
    }
}

const STREAM_FC: u64 = 1;
const STREAM_PC: u64 = 2;

/// ChaCha stream for one `(N, variant, step)` cell, so every cell draws
/// independently of scheduling order.
pub fn cell_stream(n_spins: usize, variant: u64, step: usize) -> u64 {
    ((n_spins as u64) << 48) | (variant << 40) | step as u64
}

/// Shot-sampled FC and PC series for one master seed.
pub fn sample_series(
    sim: &ChainSimulation,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> (TimeSeries, TimeSeries) {
    let sample = |dists: &[Vec<f64>], code: u64, variant: Variant| {
        let values = dists
            .iter()
            .enumerate()
            .map(|(i, probs)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(cell_stream(sim.n_spins, code, i + 1));
                let src = Distribution {
                    n_qubits: sim.n_spins,
                    probs,
                };
                staggered_magnetization(&measure_counts_with_rng(&src, shots, noise, &mut rng))
            })
            .collect();
        TimeSeries::new(sim.n_spins, variant, sim.exact.times.clone(), values).with_provenance(
            Provenance {
                shots: Some(shots),
                lambda: Some(1.0),
                seed: Some(seed),
                noise_p2: Some(noise.p2),
            },
        )
    };
    (
        sample(&sim.fc_distributions, STREAM_FC, Variant::FcNoisy),
        sample(&sim.pc_distributions, STREAM_PC, Variant::PcNoisy),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseSummary {
    pub fc: f64,
    pub pc: f64,
    pub mitigated: f64,
}

impl RmseSummary {
    pub fn mitigation_helps(&self) -> bool {
        self.mitigated < self.fc.min(self.pc)
    }
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    pub n_spins: usize,
    pub exact: TimeSeries,
    pub fc: TimeSeries,
    pub pc: TimeSeries,
    pub prediction: Prediction,
    pub dataset: Dataset,
    pub params: MlpParams,
    pub history: TrainingHistory,
    pub curve: Option<Vec<CurveRow>>,
    pub costs: Vec<StepCost>,
    pub fc_report: CompressionReport,
    /// Over the held-out steps.
    pub rmse: RmseSummary,
}

/// A chain that has been simulated and sampled but not yet trained.
#[derive(Debug, Clone)]
pub struct PreparedChain {
    pub sim: ChainSimulation,
    pub fc: TimeSeries,
    pub pc: TimeSeries,
    pub dataset: Dataset,
}

pub fn training_config(cfg: &ExperimentConfig) -> TrainingConfig {
    TrainingConfig {
        seed: cfg.seed,
        ..cfg.training.clone()
    }
}

pub fn prepare_chain(cfg: &ExperimentConfig, n_spins: usize) -> Result<PreparedChain, RunnerError> {
    let sim = simulate_chain(cfg, n_spins)?;
    prepare_from_simulation(cfg, sim)
}

/// Samples and splits an existing simulation. The simulation does not depend
/// on the master seed, so one simulation can serve several seeds.
pub fn prepare_from_simulation(
    cfg: &ExperimentConfig,
    sim: ChainSimulation,
) -> Result<PreparedChain, RunnerError> {
    let (fc, pc) = sample_series(&sim, &cfg.noise, cfg.shots, cfg.seed);
    let dataset = build_dataset(&sim.exact, &fc, &pc, &training_config(cfg))?;
    Ok(PreparedChain {
        sim,
        fc,
        pc,
        dataset,
    })
}

fn curve_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    cfg.learning_curve
        .seeds
        .iter()
        .map(|s| s ^ cfg.seed.rotate_left(32))
        .collect()
}

/// Predicts with trained parameters and optionally runs the learning curve.
pub fn finish_chain(
    cfg: &ExperimentConfig,
    prep: PreparedChain,
    params: MlpParams,
    history: TrainingHistory,
) -> Result<ChainResult, RunnerError> {
    let prediction = predict_series(&params, &prep.dataset)?;
    let ds = &prep.dataset;
    let rmse = RmseSummary {
        fc: ds.held_out_rmse(&ds.fc_values()),
        pc: ds.held_out_rmse(&ds.pc_values()),
        mitigated: ds.held_out_rmse(&prediction.series.values),
    };
    let curve = if cfg.learning_curve.enabled {
        let sizes = cfg.learning_curve.sizes(ds.len());
        Some(learning_curve(
            ds,
            &sizes,
            &curve_seeds(cfg),
            &training_config(cfg),
        )?)
    } else {
        None
    };
    Ok(ChainResult {
        n_spins: prep.sim.n_spins,
        exact: prep.sim.exact,
        fc: prep.fc,
        pc: prep.pc,
        prediction,
        dataset: prep.dataset,
        params,
        history,
        curve,
        costs: prep.sim.costs,
        fc_report: prep.sim.fc_report,
        rmse,
    })
}

pub fn run_chain(cfg: &ExperimentConfig, n_spins: usize) -> Result<ChainResult, RunnerError> {
    let prep = prepare_chain(cfg, n_spins)?;
    let (params, history) = train(&prep.dataset, &training_config(cfg))?;
    finish_chain(cfg, prep, params, history)
}

/// Per-chain outcome. A failed chain keeps its error text; other chains are
/// unaffected.
#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub n_spins: usize,
    pub result: Result<ChainResult, String>,
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, RunnerError> {
    match jobs {
        None => Ok(f()),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| RunnerError::Config(format!("thread pool: {e}"))),
    }
}

/// Simulates, samples, trains and evaluates every configured chain.
pub fn compute_pipeline(cfg: &ExperimentConfig) -> Result<Vec<ChainOutcome>, RunnerError> {
    cfg.validate()?;
    in_pool(cfg.jobs, || {
        if cfg.pooled {
            compute_pooled(cfg)
        } else {
            cfg.spins
                .par_iter()
                .map(|&n| ChainOutcome {
                    n_spins: n,
                    result: run_chain(cfg, n).map_err(|e| e.to_string()),
                })
                .collect()
        }
    })
}

fn compute_pooled(cfg: &ExperimentConfig) -> Vec<ChainOutcome> {
    let prepared: Vec<(usize, Result<PreparedChain, String>)> = cfg
        .spins
        .par_iter()
        .map(|&n| (n, prepare_chain(cfg, n).map_err(|e| e.to_string())))
        .collect();
    let parts: Vec<Dataset> = prepared
        .iter()
        .filter_map(|(_, p)| p.as_ref().ok().map(|p| p.dataset.clone()))
        .collect();
    let trained = if parts.is_empty() {
        Err("no chain produced a dataset".to_string())
    } else {
        train(&Dataset::pooled(&parts), &training_config(cfg)).map_err(|e| e.to_string())
    };
    prepared
        .into_iter()
        .map(|(n, prep)| {
            let result = prep.and_then(|p| {
                let (params, history) = trained.clone()?;
                finish_chain(cfg, p, params, history).map_err(|e| e.to_string())
            });
            ChainOutcome { n_spins: n, result }
        })
        .collect()
}

/// One chain's learning curve, or the error that stopped it.
pub type ChainCurve = (usize, Result<Vec<CurveRow>, String>);

/// Learning curves alone, one per configured chain.
pub fn compute_learning_curves(cfg: &ExperimentConfig) -> Result<Vec<ChainCurve>, RunnerError> {
    cfg.validate()?;
    in_pool(cfg.jobs, || {
        cfg.spins
            .par_iter()
            .map(|&n| {
                let curve = prepare_chain(cfg, n).and_then(|prep| {
                    let sizes = cfg.learning_curve.sizes(prep.dataset.len());
                    Ok(learning_curve(
                        &prep.dataset,
                        &sizes,
                        &curve_seeds(cfg),
                        &training_config(cfg),
                    )?)
                });
                (n, curve.map_err(|e| e.to_string()))
            })
            .collect()
    })
}

/// Output of the zero-noise extrapolation demo.
#[derive(Debug, Clone)]
pub struct ZneDemo {
    /// Noiseless run of the same circuits.
    pub ideal: TimeSeries,
    /// `λ = 1` series, one per configured two-qubit rate.
    pub noisy: Vec<TimeSeries>,
    /// Extrapolated from the scaled runs at the first rate.
    pub corrected: TimeSeries,
    pub models: Vec<Option<ExtrapolationModel>>,
    pub flags: Vec<Option<String>>,
    pub block_applications: usize,
    pub baseline_block_applications: usize,
}

impl ZneDemo {
    pub fn n_flagged(&self) -> usize {
        self.flags.iter().filter(|f| f.is_some()).count()
    }
}

pub fn compute_zne_demo(cfg: &ExperimentConfig) -> Result<ZneDemo, RunnerError> {
    cfg.validate()?;
    let z = &cfg.zne;
    in_pool(cfg.jobs, || -> Result<ZneDemo, RunnerError> {
        let spec = TrotterSpec::new(z.n_spins, cfg.j_x, cfg.j_y, cfg.dt, z.steps);
        let times: Vec<f64> = (1..=z.steps).map(|k| k as f64 * cfg.dt).collect();
        let s0 = neel_state(z.n_spins)?;
        let circuits = step_circuits(&spec, cfg.partial_rule)?.fc;
        let ideal_values = circuits
            .par_iter()
            .map(|c| Ok(staggered_magnetization(&apply_circuit_pure(c, &s0)?)))
            .collect::<Result<Vec<f64>, RunnerError>>()?;
        let ideal = TimeSeries::new(z.n_spins, Variant::Exact, times.clone(), ideal_values);
        let mut noisy = Vec::with_capacity(z.noise_levels.len());
        let base = NoiseModel {
            p2: z.noise_levels[0],
            ..cfg.noise
        };
        let run = zne_timeseries(
            &circuits,
            &times,
            &s0,
            &base,
            &z.lambdas,
            z.method,
            &z.selection,
        )?;
        noisy.push(with_p2(run.raw[0].clone(), base.p2));
        for &p2 in &z.noise_levels[1..] {
            let nm = NoiseModel { p2, ..cfg.noise };
            let values = circuits
                .par_iter()
                .map(|c| {
                    Ok(staggered_magnetization(&apply_circuit_noisy(
                        c, &s0, &nm, 1.0,
                    )?))
                })
                .collect::<Result<Vec<f64>, RunnerError>>()?;
            noisy.push(with_p2(
                TimeSeries::new(z.n_spins, Variant::Noisy, times.clone(), values),
                p2,
            ));
        }
        Ok(ZneDemo {
            ideal,
            noisy,
            corrected: run.corrected,
            models: run.models,
            flags: run.flags,
            block_applications: run.block_applications,
            baseline_block_applications: run.baseline_block_applications,
        })
    })?
}

fn with_p2(s: TimeSeries, p2: f64) -> TimeSeries {
    let prov = Provenance {
        lambda: Some(1.0),
        noise_p2: Some(p2),
        ..s.provenance.clone()
    };
    s.with_provenance(prov)
}

/// Held-out split labels for the CSV, `train` or `test`.
pub fn split_labels(split: &[Split]) -> Vec<&'static str> {
    split.iter().map(Split::label).collect()
}
