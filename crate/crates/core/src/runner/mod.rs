// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration, orchestration and artifact output.

mod config;
mod output;
mod pipeline;
mod plot;

pub use config::{hex_digest, CurveConfig, ExperimentConfig, PartialRule, ZneConfig};
pub use output::{
    canonical_config, curve_csv, curve_file, parse_curve_csv, render_dir, series_file,
    write_learning_curves, write_pipeline, write_zne_demo, zne_csv, CellRecord, FileRecord,
    Manifest, SeriesTable, CURVE_HEADER, MANIFEST_SCHEMA, SERIES_HEADER,
};
pub use pipeline::{
    cell_stream, compute_learning_curves, compute_pipeline, compute_zne_demo, finish_chain,
    prepare_chain, prepare_from_simulation, run_chain, sample_series, simulate_chain,
    step_circuits, training_config, ChainCurve, ChainOutcome, ChainResult, ChainSimulation,
    PreparedChain, RmseSummary, StepCircuits, StepCost, ZneDemo,
};
pub use plot::{render_series_svg, render_zne_svg};

use std::path::PathBuf;

use thiserror::Error;

use crate::compress::CompressError;
use crate::lattice::LatticeError;
use crate::mitigator::MitigatorError;
use crate::sim::SimError;
use crate::zne::ZneError;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Compress(#[from] CompressError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Zne(#[from] ZneError),
    #[error(transparent)]
    Mitigator(#[from] MitigatorError),
}

impl RunnerError {
    /// Process exit status for the CLI: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Results plus the manifest of what was written.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub outcomes: Vec<ChainOutcome>,
    pub manifest: Manifest,
    pub dir: PathBuf,
}

/// Runs every chain and writes all artifacts under `cfg.out_dir`.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunArtifacts, RunnerError> {
    let outcomes = compute_pipeline(cfg)?;
    let manifest = write_pipeline(cfg, &outcomes, &cfg.out_dir)?;
    Ok(RunArtifacts {
        outcomes,
        manifest,
        dir: cfg.out_dir.clone(),
    })
}

/// Runs the ZNE demo and writes its table, chart and manifest under `cfg.out_dir`.
pub fn run_zne_demo(cfg: &ExperimentConfig) -> Result<(ZneDemo, Manifest), RunnerError> {
    let demo = compute_zne_demo(cfg)?;
    let manifest = write_zne_demo(cfg, &demo, &cfg.out_dir)?;
    Ok((demo, manifest))
}
