// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Plain-text model dump.
//!
//! ```text
//! ybe-mitigate-mlp 1
//! n_features 4
//! hidden 16
//! adam_step 812
//! w1 <hidden*n_features values, row-major>
//! b1 <hidden values>
//! w2 <hidden values>
//! b2 <1 value>
//! adam_m <n_params values>
//! adam_v <n_params values>
//! ```
//!
//! Floats use the shortest representation that parses back to the same bits.

use std::fs;
use std::path::Path;

use super::{MitigatorError, MlpParams};

const MAGIC: &str = "ybe-mitigate-mlp";
const VERSION: u32 = 1;

fn row(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        out.push(' ');
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

pub fn write_checkpoint(p: &MlpParams) -> String {
    let mut out = format!(
        "{MAGIC} {VERSION}\nn_features {}\nhidden {}\nadam_step {}\n",
        p.n_features, p.hidden, p.adam.step
    );
    row(&mut out, "w1", &p.w1);
    row(&mut out, "b1", &p.b1);
    row(&mut out, "w2", &p.w2);
    row(&mut out, "b2", &[p.b2]);
    row(&mut out, "adam_m", &p.adam.m);
    row(&mut out, "adam_v", &p.adam.v);
    out
}

fn err(msg: impl Into<String>) -> MitigatorError {
    MitigatorError::Checkpoint(msg.into())
}

pub fn read_checkpoint(text: &str) -> Result<MlpParams, MitigatorError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut next = |key: &str| -> Result<Vec<String>, MitigatorError> {
        let line = lines
            .next()
            .ok_or_else(|| err(format!("missing `{key}` line")))?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some(k) if k == key => Ok(it.map(str::to_owned).collect()),
            other => Err(err(format!("expected `{key}`, found {other:?}"))),
        }
    };
    let header = next(MAGIC)?;
    if header != [VERSION.to_string()] {
        return Err(err(format!("unsupported version {header:?}")));
    }
    let int = |v: Vec<String>, key: &str| -> Result<u64, MitigatorError> {
        match v.as_slice() {
            [x] => x
                .parse()
                .map_err(|_| err(format!("bad integer for `{key}`"))),
            _ => Err(err(format!("`{key}` takes one value"))),
        }
    };
    let n_features = int(next("n_features")?, "n_features")? as usize;
    let hidden = int(next("hidden")?, "hidden")? as usize;
    let step = int(next("adam_step")?, "adam_step")?;
    let mut p = MlpParams::zeros(n_features, hidden);
    let n_params = p.n_params();
    let mut floats = |key: &str, len: usize| -> Result<Vec<f64>, MitigatorError> {
        let v = next(key)?;
        if v.len() != len {
            return Err(err(format!(
                "`{key}` has {} values, expected {len}",
                v.len()
            )));
        }
        v.iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| err(format!("bad float `{s}` in `{key}`")))
            })
            .collect()
    };
    p.w1 = floats("w1", hidden * n_features)?;
    p.b1 = floats("b1", hidden)?;
    p.w2 = floats("w2", hidden)?;
    p.b2 = floats("b2", 1)?[0];
    p.adam.m = floats("adam_m", n_params)?;
    p.adam.v = floats("adam_v", n_params)?;
    p.adam.step = step;
    if !p.is_finite() {
        return Err(err("non-finite parameter"));
    }
    Ok(p)
}

pub fn save_checkpoint(p: &MlpParams, path: &Path) -> std::io::Result<()> {
    fs::write(path, write_checkpoint(p))
}

pub fn load_checkpoint(path: &Path) -> Result<MlpParams, MitigatorError> {
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    read_checkpoint(&text)
}
