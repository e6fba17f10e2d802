// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV tables, model checkpoints, plots and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::mitigator::{write_checkpoint, CurveRow};

use super::config::hex_digest;
use super::pipeline::{
    split_labels, ChainCurve, ChainOutcome, ChainResult, RmseSummary, StepCost, ZneDemo,
};
use super::plot::{render_series_svg, render_zne_svg};
use super::{ExperimentConfig, RunnerError};

pub const SERIES_HEADER: [&str; 6] = [
    "t",
    "ms_exact",
    "ms_fc_noisy",
    "ms_pc_noisy",
    "ms_mitigated",
    "split",
];
pub const CURVE_HEADER: [&str; 3] = ["size", "mean_rmse", "std_rmse"];
pub const MANIFEST_SCHEMA: u32 = 1;

fn io_err(path: &Path, e: impl std::fmt::Display) -> RunnerError {
    RunnerError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn csv_err(e: csv::Error) -> RunnerError {
    RunnerError::Csv(e.to_string())
}

fn write_table<S: AsRef<[u8]>>(header: &[&str], rows: impl IntoIterator<Item = Vec<S>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// One chain's series table, parsed back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub t: Vec<f64>,
    pub exact: Vec<f64>,
    pub fc: Vec<f64>,
    pub pc: Vec<f64>,
    pub mitigated: Vec<f64>,
    pub split: Vec<String>,
}

impl SeriesTable {
    pub fn from_result(r: &ChainResult) -> Self {
        Self {
            t: r.exact.times.clone(),
            exact: r.exact.values.clone(),
            fc: r.fc.values.clone(),
            pc: r.pc.values.clone(),
            mitigated: r.prediction.series.values.clone(),
            split: split_labels(&r.prediction.split)
                .into_iter()
                .map(str::to_owned)
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Floats use the shortest decimal form that round-trips exactly.
    pub fn to_csv(&self) -> String {
        write_table(
            &SERIES_HEADER,
            (0..self.len()).map(|i| {
                vec![
                    self.t[i].to_string(),
                    self.exact[i].to_string(),
                    self.fc[i].to_string(),
                    self.pc[i].to_string(),
                    self.mitigated[i].to_string(),
                    self.split[i].clone(),
                ]
            }),
        )
    }

    pub fn parse(text: &str) -> Result<Self, RunnerError> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header = rd.headers().map_err(csv_err)?.clone();
        if header.iter().ne(SERIES_HEADER) {
            return Err(RunnerError::Csv(format!("unexpected header {header:?}")));
        }
        let mut t = Self {
            t: vec![],
            exact: vec![],
            fc: vec![],
            pc: vec![],
            mitigated: vec![],
            split: vec![],
        };
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let num = |k: usize| -> Result<f64, RunnerError> {
                rec[k].parse().map_err(|_| {
                    RunnerError::Csv(format!("row {}: bad number `{}`", line + 2, &rec[k]))
                })
            };
            t.t.push(num(0)?);
            t.exact.push(num(1)?);
            t.fc.push(num(2)?);
            t.pc.push(num(3)?);
            t.mitigated.push(num(4)?);
            match &rec[5] {
                "train" | "test" => t.split.push(rec[5].to_owned()),
                other => {
                    return Err(RunnerError::Csv(format!(
                        "row {}: bad split `{other}`",
                        line + 2
                    )))
                }
            }
        }
        Ok(t)
    }
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    write_table(
        &CURVE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.size.to_string(),
                r.mean_rmse.to_string(),
                r.std_rmse.to_string(),
            ]
        }),
    )
}

/// `(size, mean_rmse, std_rmse)` rows.
pub fn parse_curve_csv(text: &str) -> Result<Vec<(usize, f64, f64)>, RunnerError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    if rd.headers().map_err(csv_err)?.iter().ne(CURVE_HEADER) {
        return Err(RunnerError::Csv("unexpected learning-curve header".into()));
    }
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            let bad = || RunnerError::Csv(format!("bad learning-curve row {rec:?}"));
            Ok((
                rec[0].parse().map_err(|_| bad())?,
                rec[1].parse().map_err(|_| bad())?,
                rec[2].parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn cost_csv(costs: &[StepCost]) -> String {
    write_table(
        &["step", "cnot_fc", "cnot_pc", "depth_fc", "depth_pc"],
        costs.iter().map(|c| {
            [c.step, c.cnot_fc, c.cnot_pc, c.depth_fc, c.depth_pc]
                .iter()
                .map(usize::to_string)
                .collect()
        }),
    )
}

pub fn zne_csv(demo: &ZneDemo) -> String {
    let mut header = vec!["t".to_string(), "ms_ideal".to_string()];
    for s in &demo.noisy {
        header.push(format!(
            "ms_noisy_p{}",
            s.provenance.noise_p2.unwrap_or(f64::NAN)
        ));
    }
    header.extend(["ms_zne", "model", "flag"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(
        &header,
        (0..demo.ideal.len()).map(|i| {
            let mut row = vec![
                demo.ideal.times[i].to_string(),
                demo.ideal.values[i].to_string(),
            ];
            row.extend(demo.noisy.iter().map(|s| s.values[i].to_string()));
            row.push(demo.corrected.values[i].to_string());
            row.push(
                demo.models[i]
                    .as_ref()
                    .map_or("none".into(), |m| m.kind.tag()),
            );
            row.push(demo.flags[i].clone().unwrap_or_default());
            row
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub n_spins: usize,
    pub ok: bool,
    pub error: Option<String>,
    pub steps: Option<usize>,
    pub rmse: Option<RmseSummary>,
    pub best_epoch: Option<usize>,
    pub final_cnot_fc: Option<usize>,
    pub final_cnot_pc: Option<usize>,
    pub ybe_moves: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub series_csv_header: String,
    /// SHA-256 of `config.json` as written next to the manifest.
    pub config_sha256: String,
    pub seed: u64,
    pub cells: Vec<CellRecord>,
    pub files: Vec<FileRecord>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn any_failed(&self) -> bool {
        self.cells.iter().any(|c| !c.ok)
    }
}

/// Collects every file of one run so the manifest can hash them in order.
struct Collector {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Collector {
    fn new(dir: &Path) -> Result<Self, RunnerError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<(), RunnerError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        self.files.push(FileRecord {
            path: name.to_owned(),
            sha256: hex_digest(content.as_bytes()),
            bytes: content.len(),
        });
        Ok(())
    }

    fn finish(mut self, mut manifest: Manifest) -> Result<Manifest, RunnerError> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.files = self.files;
        let path = self.dir.join("manifest.json");
        fs::write(&path, manifest.to_json()).map_err(|e| io_err(&path, e))?;
        Ok(manifest)
    }
}

/// Config as recorded in the output directory. Execution-only settings
/// (output path, thread count) are cleared so they do not change hashes.
pub fn canonical_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        out_dir: PathBuf::new(),
        jobs: None,
        ..cfg.clone()
    }
}

pub fn series_file(n: usize) -> String {
    format!("series_{n}.csv")
}

pub fn curve_file(n: usize) -> String {
    format!("learning_curve_{n}.csv")
}

/// Writes per-chain tables, checkpoints and plots plus `config.json` and
/// `manifest.json`. Failed chains are listed in the manifest and produce no
/// files.
pub fn write_pipeline(
    cfg: &ExperimentConfig,
    outcomes: &[ChainOutcome],
    dir: &Path,
) -> Result<Manifest, RunnerError> {
    let mut out = Collector::new(dir)?;
    let canon = canonical_config(cfg);
    out.write("config.json", &canon.to_json())?;
    let mut cells = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let n = o.n_spins;
        match &o.result {
            Ok(r) => {
                let table = SeriesTable::from_result(r);
                let csv = table.to_csv();
                out.write(&series_file(n), &csv)?;
                out.write(
                    &format!("series_{n}.svg"),
                    &render_series_svg(&SeriesTable::parse(&csv)?, n),
                )?;
                if let Some(curve) = &r.curve {
                    out.write(&curve_file(n), &curve_csv(curve))?;
                }
                out.write(&format!("compression_{n}.csv"), &cost_csv(&r.costs))?;
                out.write(&format!("model_{n}.txt"), &write_checkpoint(&r.params))?;
                cells.push(CellRecord {
                    n_spins: n,
                    ok: true,
                    error: None,
                    steps: Some(table.len()),
                    rmse: Some(r.rmse),
                    best_epoch: Some(r.history.best_epoch),
                    final_cnot_fc: r.costs.last().map(|c| c.cnot_fc),
                    final_cnot_pc: r.costs.last().map(|c| c.cnot_pc),
                    ybe_moves: Some(r.fc_report.ybe_moves_used),
                });
            }
            Err(e) => cells.push(CellRecord {
                n_spins: n,
                ok: false,
                error: Some(e.clone()),
                steps: None,
                rmse: None,
                best_epoch: None,
                final_cnot_fc: None,
                final_cnot_pc: None,
                ybe_moves: None,
            }),
        }
    }
    let notes = vec![
        "compressed circuits are built by absorbing one Trotter step at a time; the step-k circuit equals a rebuild from scratch".into(),
        "rmse values are over held-out (test) steps against the exact evolution".into(),
    ];
    out.finish(Manifest {
        schema_version: MANIFEST_SCHEMA,
        command: "pipeline".into(),
        series_csv_header: SERIES_HEADER.join(","),
        config_sha256: canon.hash(),
        seed: cfg.seed,
        cells,
        files: vec![],
        notes,
    })
}

pub fn write_zne_demo(
    cfg: &ExperimentConfig,
    demo: &ZneDemo,
    dir: &Path,
) -> Result<Manifest, RunnerError> {
    let mut out = Collector::new(dir)?;
    let canon = canonical_config(cfg);
    out.write("config.json", &canon.to_json())?;
    let csv = zne_csv(demo);
    out.write("zne_demo.csv", &csv)?;
    out.write("zne_demo.svg", &render_zne_svg(&csv)?)?;
    let ratio = demo.block_applications as f64 / demo.baseline_block_applications.max(1) as f64;
    out.finish(Manifest {
        schema_version: MANIFEST_SCHEMA,
        command: "zne-demo".into(),
        series_csv_header: String::new(),
        config_sha256: canon.hash(),
        seed: cfg.seed,
        cells: vec![CellRecord {
            n_spins: demo.ideal.n_spins,
            ok: true,
            error: None,
            steps: Some(demo.ideal.len()),
            rmse: None,
            best_epoch: None,
            final_cnot_fc: None,
            final_cnot_pc: None,
            ybe_moves: None,
        }],
        files: vec![],
        notes: vec![
            format!("flagged steps: {}", demo.n_flagged()),
            format!("block applications across scales / baseline: {ratio}"),
            "ms_ideal is the noiseless run of the same compressed circuits".into(),
        ],
    })
}

/// Writes `learning_curve_N.csv` per chain. `Err` entries mark failed chains.
pub fn write_learning_curves(
    cfg: &ExperimentConfig,
    curves: &[ChainCurve],
    dir: &Path,
) -> Result<Manifest, RunnerError> {
    let mut out = Collector::new(dir)?;
    let canon = canonical_config(cfg);
    out.write("config.json", &canon.to_json())?;
    let mut cells = Vec::new();
    for (n, curve) in curves {
        if let Ok(rows) = curve {
            out.write(&curve_file(*n), &curve_csv(rows))?;
        }
        cells.push(CellRecord {
            n_spins: *n,
            ok: curve.is_ok(),
            error: curve.as_ref().err().cloned(),
            steps: Some(cfg.steps_for(*n)),
            rmse: None,
            best_epoch: None,
            final_cnot_fc: None,
            final_cnot_pc: None,
            ybe_moves: None,
        });
    }
    out.finish(Manifest {
        schema_version: MANIFEST_SCHEMA,
        command: "learning-curve".into(),
        series_csv_header: String::new(),
        config_sha256: canon.hash(),
        seed: cfg.seed,
        cells,
        files: vec![],
        notes: vec!["mean_rmse is the held-out RMSE averaged over the configured seeds".into()],
    })
}

/// Re-renders `series_N.svg` for every `series_N.csv` in `dir`.
pub fn render_dir(dir: &Path) -> Result<Vec<PathBuf>, RunnerError> {
    let mut written = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        let Some(name) = path.file_name().and_then(|s| s.to_str()) else {
            continue;
        };
        let n: Option<usize> = name
            .strip_prefix("series_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse().ok());
        if let Some(n) = n {
            let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            let svg = render_series_svg(&SeriesTable::parse(&text)?, n);
            let target = path.with_extension("svg");
            fs::write(&target, svg).map_err(|e| io_err(&target, e))?;
            written.push(target);
        }
    }
    Ok(written)
}
