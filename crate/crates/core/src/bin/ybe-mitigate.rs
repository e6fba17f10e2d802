// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ybe_mitigate::compress::{full_compress_with, partial_compress_with, CompressOptions};
use ybe_mitigate::lattice::{build_trotter_circuit, cnot_count, TrotterSpec};
use ybe_mitigate::runner::{
    compute_learning_curves, render_dir, run_pipeline, run_zne_demo, write_learning_curves,
    ExperimentConfig, RunnerError,
};

#[derive(Parser)]
#[command(
    name = "ybe-mitigate",
    version,
    about = "Compressed XY-chain dynamics with noise mitigation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate, compress, train and evaluate every configured chain.
    Pipeline(Common),
    /// Zero-noise extrapolation on the configured ZNE chain.
    ZneDemo(Common),
    /// Compress one Trotter circuit and print the report as JSON.
    Compress(CompressArgs),
    /// Learning curves only.
    LearningCurve(Common),
    /// Redraw charts from the series CSVs in a directory.
    Render {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags override values from `--config`.
#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated chain lengths, e.g. `3,4,5`.
    #[arg(long, value_delimiter = ',')]
    spins: Option<Vec<usize>>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    noise_p2: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, RunnerError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).map_err(|e| RunnerError::Config(e.to_string()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = &self.spins {
            cfg.spins = s.clone();
        }
        if let Some(s) = self.shots {
            cfg.shots = s;
        }
        if let Some(p) = self.noise_p2 {
            cfg.noise.p2 = p;
        }
        if self.jobs.is_some() {
            cfg.jobs = self.jobs;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long, default_value_t = 3)]
    spins: usize,
    #[arg(long, default_value_t = 3)]
    steps: usize,
    /// Fully compress only this many leading steps.
    #[arg(long)]
    partial: Option<usize>,
    #[arg(long, default_value_t = -0.8, allow_hyphen_values = true)]
    j_x: f64,
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    j_y: f64,
    #[arg(long, default_value_t = 0.025)]
    dt: f64,
    /// Check unitary equivalence (up to 8 qubits).
    #[arg(long)]
    verify: bool,
}

fn compress(a: &CompressArgs) -> Result<(), RunnerError> {
    let spec = TrotterSpec::new(a.spins, a.j_x, a.j_y, a.dt, a.steps);
    spec.validate()
        .map_err(|e| RunnerError::Config(e.to_string()))?;
    let c = build_trotter_circuit(&spec)?;
    let opts = CompressOptions {
        verify: a.verify,
        ..Default::default()
    };
    let (out, report) = match a.partial {
        Some(k) => partial_compress_with(&c, k, &opts)?,
        None => full_compress_with(&c, &opts)?,
    };
    let doc = serde_json::json!({
        "n_spins": a.spins,
        "steps": a.steps,
        "partial_steps": a.partial,
        "cnot_input": cnot_count(&c),
        "cnot_output": cnot_count(&out),
        "depth_input": c.depth(),
        "depth_output": out.depth(),
        "report": report,
        "blocks": out.blocks(),
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    Ok(())
}

fn report_cells(failed: &[(usize, String)]) -> ExitCode {
    for (n, e) in failed {
        eprintln!("N = {n}: {e}");
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, RunnerError> {
    match cli.command {
        Command::Pipeline(c) => {
            let cfg = c.resolve()?;
            let art = run_pipeline(&cfg)?;
            for o in &art.outcomes {
                if let Ok(r) = &o.result {
                    println!(
                        "N = {:2}  rmse fc {:.5}  pc {:.5}  mitigated {:.5}",
                        o.n_spins, r.rmse.fc, r.rmse.pc, r.rmse.mitigated
                    );
                }
            }
            println!("wrote {}", art.dir.join("manifest.json").display());
            let failed: Vec<_> = art
                .outcomes
                .iter()
                .filter_map(|o| o.result.as_ref().err().map(|e| (o.n_spins, e.clone())))
                .collect();
            Ok(report_cells(&failed))
        }
        Command::ZneDemo(c) => {
            let cfg = c.resolve()?;
            let (demo, _) = run_zne_demo(&cfg)?;
            println!(
                "{} steps, {} flagged, wrote {}",
                demo.ideal.len(),
                demo.n_flagged(),
                cfg.out_dir.join("zne_demo.csv").display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Compress(a) => compress(&a).map(|_| ExitCode::SUCCESS),
        Command::LearningCurve(c) => {
            let cfg = c.resolve()?;
            let curves = compute_learning_curves(&cfg)?;
            write_learning_curves(&cfg, &curves, &cfg.out_dir)?;
            let failed: Vec<_> = curves
                .iter()
                .filter_map(|(n, r)| r.as_ref().err().map(|e| (*n, e.clone())))
                .collect();
            Ok(report_cells(&failed))
        }
        Command::Render { out } => {
            for p in render_dir(&out)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
