// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! C ABI for ybe-mitigate.
//!
//! Every function returns a [`YbeStatus`]. On failure the message is kept
//! per thread and can be read with [`ybe_last_error`]. Handles are opaque and
//! must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ybe_mitigate::compress::{full_compress, partial_compress};
use ybe_mitigate::lattice::{build_trotter_circuit, cnot_count, Circuit, TrotterSpec};
use ybe_mitigate::mitigator::{forward, load_checkpoint, MlpParams};
use ybe_mitigate::runner::{run_pipeline, ExperimentConfig};
use ybe_mitigate::sim::{
    apply_circuit_noisy, exact_evolution_oracle, neel_state, staggered_magnetization, NoiseModel,
};
use ybe_mitigate::zne::{fit_extrapolate, ExtrapolationKind, ZneSeries};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YbeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CompressionFailed = 3,
    SimulationFailed = 4,
    ExtrapolationFailed = 5,
    ModelError = 6,
    /// At least one pipeline cell failed; the other cells were written.
    CellFailed = 7,
    Io = 8,
    Panic = 9,
}

/// Extrapolation model selector for [`ybe_zne_extrapolate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YbeFitKind {
    Linear = 0,
    Quadratic = 1,
    Exponential = 2,
}

/// Noise parameters for [`ybe_circuit_noisy_magnetization`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct YbeNoise {
    pub p2: f64,
    pub p1: f64,
    pub readout_flip: f64,
    pub wait_units_per_layer: f64,
}

/// Opaque circuit handle.
pub struct YbeCircuit {
    inner: Circuit,
}

/// Opaque trained-model handle.
pub struct YbeModel {
    inner: MlpParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|b| *b != 0);
    let c = CString::new(bytes).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: YbeStatus, msg: impl Into<String>) -> YbeStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting panics into [`YbeStatus::Panic`].
fn guard(f: impl FnOnce() -> YbeStatus) -> YbeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == YbeStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(YbeStatus::Panic, msg)
        }
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, YbeStatus> {
    if s.is_null() {
        return Err(fail(YbeStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(YbeStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ybe_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds the first-order Trotter circuit of the XY chain.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ybe_trotter_circuit_new(
    n_spins: usize,
    j_x: f64,
    j_y: f64,
    dt: f64,
    n_steps: usize,
    out: *mut *mut YbeCircuit,
) -> YbeStatus {
    guard(|| {
        if out.is_null() {
            return fail(YbeStatus::NullPointer, "out is null");
        }
        let spec = TrotterSpec::new(n_spins, j_x, j_y, dt, n_steps);
        match build_trotter_circuit(&spec) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(YbeCircuit { inner: c }));
                YbeStatus::Ok
            }
            Err(e) => fail(YbeStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `c` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ybe_circuit_free(c: *mut YbeCircuit) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Writes the block count, CNOT count (two per block) and layer depth.
///
/// # Safety
/// `c` must be a live handle; output pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn ybe_circuit_stats(
    c: *const YbeCircuit,
    blocks: *mut usize,
    cnots: *mut usize,
    depth: *mut usize,
) -> YbeStatus {
    guard(|| {
        let Some(c) = c.as_ref() else {
            return fail(YbeStatus::NullPointer, "circuit is null");
        };
        if let Some(b) = blocks.as_mut() {
            *b = c.inner.len();
        }
        if let Some(n) = cnots.as_mut() {
            *n = cnot_count(&c.inner);
        }
        if let Some(d) = depth.as_mut() {
            *d = c.inner.depth();
        }
        YbeStatus::Ok
    })
}

/// Fully compresses `c` when `compressed_steps < 0`; otherwise compresses
/// that many leading Trotter steps and merges the rest. The input handle is
/// left untouched.
///
/// # Safety
/// `c` must be a live handle and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn ybe_circuit_compress(
    c: *const YbeCircuit,
    compressed_steps: i64,
    out: *mut *mut YbeCircuit,
) -> YbeStatus {
    guard(|| {
        let Some(c) = c.as_ref() else {
            return fail(YbeStatus::NullPointer, "circuit is null");
        };
        if out.is_null() {
            return fail(YbeStatus::NullPointer, "out is null");
        }
        let res = if compressed_steps < 0 {
            full_compress(&c.inner)
        } else {
            partial_compress(&c.inner, compressed_steps as usize)
        };
        match res {
            Ok((circuit, _)) => {
                *out = Box::into_raw(Box::new(YbeCircuit { inner: circuit }));
                YbeStatus::Ok
            }
            Err(e) => fail(YbeStatus::CompressionFailed, e.to_string()),
        }
    })
}

/// Exact staggered magnetization `<m_s>` of the circuit applied to the Néel
/// state under the given noise, from the density matrix (no shot noise).
///
/// # Safety
/// `c` must be a live handle; `noise` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ybe_circuit_noisy_magnetization(
    c: *const YbeCircuit,
    noise: *const YbeNoise,
    lambda: f64,
    out: *mut f64,
) -> YbeStatus {
    guard(|| {
        let (Some(c), Some(nz), false) = (c.as_ref(), noise.as_ref(), out.is_null()) else {
            return fail(YbeStatus::NullPointer, "circuit, noise or out is null");
        };
        let nm = NoiseModel {
            p2: nz.p2,
            p1: nz.p1,
            readout_flip: nz.readout_flip,
            wait_units_per_layer: nz.wait_units_per_layer,
        };
        let res = neel_state(c.inner.n_qubits())
            .and_then(|s0| apply_circuit_noisy(&c.inner, &s0, &nm, lambda));
        match res {
            Ok(rho) => {
                *out = staggered_magnetization(&rho);
                YbeStatus::Ok
            }
            Err(e) => fail(YbeStatus::SimulationFailed, e.to_string()),
        }
    })
}

/// Exact `m_s(t)` of the Néel state under the XY Hamiltonian.
///
/// # Safety
/// `times` must point to `len` readable values and `out` to `len` writable
/// values.
#[no_mangle]
pub unsafe extern "C" fn ybe_exact_magnetization(
    n_spins: usize,
    j_x: f64,
    j_y: f64,
    times: *const f64,
    len: usize,
    out: *mut f64,
) -> YbeStatus {
    guard(|| {
        if len > 0 && (times.is_null() || out.is_null()) {
            return fail(YbeStatus::NullPointer, "times or out is null");
        }
        if len == 0 {
            return YbeStatus::Ok;
        }
        let ts = std::slice::from_raw_parts(times, len);
        let spec = TrotterSpec::new(n_spins, j_x, j_y, 1.0, 1);
        let res = neel_state(n_spins).and_then(|s0| exact_evolution_oracle(&spec, ts, &s0));
        match res {
            Ok(series) => {
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(&series.values);
                YbeStatus::Ok
            }
            Err(e) => fail(YbeStatus::SimulationFailed, e.to_string()),
        }
    })
}

/// Fits `E(λ)` and writes the extrapolated `E(0)`. The first scale must be 1.
///
/// # Safety
/// `lambdas` and `values` must point to `len` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ybe_zne_extrapolate(
    lambdas: *const f64,
    values: *const f64,
    len: usize,
    kind: YbeFitKind,
    out: *mut f64,
) -> YbeStatus {
    guard(|| {
        if lambdas.is_null() || values.is_null() || out.is_null() {
            return fail(YbeStatus::NullPointer, "lambdas, values or out is null");
        }
        let ls = std::slice::from_raw_parts(lambdas, len);
        let vs = std::slice::from_raw_parts(values, len);
        let kind = match kind {
            YbeFitKind::Linear => ExtrapolationKind::Linear,
            YbeFitKind::Quadratic => ExtrapolationKind::Polynomial { degree: 2 },
            YbeFitKind::Exponential => ExtrapolationKind::Exponential,
        };
        let res = ZneSeries::new(ls.iter().copied().zip(vs.iter().copied()).collect())
            .and_then(|s| fit_extrapolate(&s, kind));
        match res {
            Ok((e0, _)) => {
                *out = e0;
                YbeStatus::Ok
            }
            Err(e) => fail(YbeStatus::ExtrapolationFailed, e.to_string()),
        }
    })
}

/// Loads a model checkpoint written by the pipeline.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` valid for one
/// handle.
#[no_mangle]
pub unsafe extern "C" fn ybe_model_load(path: *const c_char, out: *mut *mut YbeModel) -> YbeStatus {
    guard(|| {
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        if out.is_null() {
            return fail(YbeStatus::NullPointer, "out is null");
        }
        match load_checkpoint(std::path::Path::new(path)) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(YbeModel { inner: p }));
                YbeStatus::Ok
            }
            Err(e) => fail(YbeStatus::ModelError, e.to_string()),
        }
    })
}

/// Number of input features the model expects.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ybe_model_n_features(m: *const YbeModel, out: *mut usize) -> YbeStatus {
    guard(|| match (m.as_ref(), out.as_mut()) {
        (Some(m), Some(o)) => {
            *o = m.inner.n_features;
            YbeStatus::Ok
        }
        _ => fail(YbeStatus::NullPointer, "model or out is null"),
    })
}

/// Evaluates the model on one feature vector `[fc, pc, t/T, N/10, ...]`.
///
/// # Safety
/// `m` must be a live handle, `x` must point to `len` readable values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ybe_model_predict(
    m: *const YbeModel,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> YbeStatus {
    guard(|| {
        let (Some(m), false, false) = (m.as_ref(), x.is_null(), out.is_null()) else {
            return fail(YbeStatus::NullPointer, "model, x or out is null");
        };
        match forward(&m.inner, std::slice::from_raw_parts(x, len)) {
            Ok(y) => {
                *out = y;
                YbeStatus::Ok
            }
            Err(e) => fail(YbeStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `m` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ybe_model_free(m: *mut YbeModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Runs the full pipeline. `config_json` may be null for defaults; a non-null
/// `out_dir` overrides the configured output directory.
///
/// # Safety
/// Non-null arguments must be NUL-terminated UTF-8 strings.
#[no_mangle]
pub unsafe extern "C" fn ybe_run_pipeline(
    config_json: *const c_char,
    out_dir: *const c_char,
) -> YbeStatus {
    guard(|| {
        let mut cfg = if config_json.is_null() {
            ExperimentConfig::default()
        } else {
            let text = match str_arg(config_json, "config_json") {
                Ok(t) => t,
                Err(s) => return s,
            };
            match ExperimentConfig::from_json(text) {
                Ok(c) => c,
                Err(e) => return fail(YbeStatus::InvalidArgument, e.to_string()),
            }
        };
        if !out_dir.is_null() {
            match str_arg(out_dir, "out_dir") {
                Ok(d) => cfg.out_dir = PathBuf::from(d),
                Err(s) => return s,
            }
        }
        match run_pipeline(&cfg) {
            Ok(art) if art.manifest.any_failed() => {
                let failed: Vec<String> = art
                    .manifest
                    .cells
                    .iter()
                    .filter(|c| !c.ok)
                    .map(|c| format!("N={}: {}", c.n_spins, c.error.clone().unwrap_or_default()))
                    .collect();
                fail(YbeStatus::CellFailed, failed.join("; "))
            }
            Ok(_) => YbeStatus::Ok,
            Err(e) => {
                let status = match e.exit_code() {
                    2 => YbeStatus::InvalidArgument,
                    _ => YbeStatus::Io,
                };
                fail(status, e.to_string())
            }
        }
    })
}
