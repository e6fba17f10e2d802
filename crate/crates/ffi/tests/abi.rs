// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

use std::ffi::{CStr, CString};
use std::ptr;

use ybe_mitigate::mitigator::{forward, save_checkpoint, MlpParams};
use ybe_mitigate_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ybe_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn trotter(n: usize, steps: usize) -> *mut YbeCircuit {
    let mut c = ptr::null_mut();
    let s = unsafe { ybe_trotter_circuit_new(n, -0.8, 0.2, 0.025, steps, &mut c) };
    assert_eq!(s, YbeStatus::Ok, "{}", last_error());
    c
}

fn stats(c: *const YbeCircuit) -> (usize, usize, usize) {
    let (mut b, mut n, mut d) = (0, 0, 0);
    assert_eq!(
        unsafe { ybe_circuit_stats(c, &mut b, &mut n, &mut d) },
        YbeStatus::Ok
    );
    (b, n, d)
}

const NOISELESS: YbeNoise = YbeNoise {
    p2: 0.0,
    p1: 0.0,
    readout_flip: 0.0,
    wait_units_per_layer: 0.0,
};

#[test]
fn trotter_stats_match_layer_structure() {
    let c = trotter(4, 3);
    // 3 bonds per step, 2 CNOTs per block, 2 layers per step.
    assert_eq!(stats(c), (9, 18, 6));
    unsafe { ybe_circuit_free(c) };
}

#[test]
fn full_compression_reaches_triangle_size() {
    let c = trotter(5, 10);
    let mut out = ptr::null_mut();
    let s = unsafe { ybe_circuit_compress(c, -1, &mut out) };
    assert_eq!(s, YbeStatus::Ok, "{}", last_error());
    assert_eq!(stats(out).0, 5 * 4 / 2);

    let mut m0 = 0.0;
    let mut m1 = 0.0;
    unsafe {
        assert_eq!(
            ybe_circuit_noisy_magnetization(c, &NOISELESS, 1.0, &mut m0),
            YbeStatus::Ok
        );
        assert_eq!(
            ybe_circuit_noisy_magnetization(out, &NOISELESS, 1.0, &mut m1),
            YbeStatus::Ok
        );
        ybe_circuit_free(out);
        ybe_circuit_free(c);
    }
    assert!((m0 - m1).abs() < 1e-8, "{m0} vs {m1}");
}

#[test]
fn noiseless_trotter_tracks_exact_evolution() {
    let c = trotter(4, 4);
    let mut m = 0.0;
    let mut exact = [0.0];
    unsafe {
        assert_eq!(
            ybe_circuit_noisy_magnetization(c, &NOISELESS, 1.0, &mut m),
            YbeStatus::Ok
        );
        assert_eq!(
            ybe_exact_magnetization(4, -0.8, 0.2, [0.1].as_ptr(), 1, exact.as_mut_ptr()),
            YbeStatus::Ok
        );
        ybe_circuit_free(c);
    }
    assert!((m - exact[0]).abs() < 1e-3, "{m} vs {}", exact[0]);
}

#[test]
fn exact_magnetization_starts_at_one() {
    let mut out = [0.0; 2];
    let s =
        unsafe { ybe_exact_magnetization(3, -0.8, 0.2, [0.0, 0.5].as_ptr(), 2, out.as_mut_ptr()) };
    assert_eq!(s, YbeStatus::Ok);
    assert!((out[0] - 1.0).abs() < 1e-12);
    assert!(out[1] < 1.0);
}

#[test]
fn noise_pulls_magnetization_toward_zero() {
    let c = trotter(3, 5);
    let noisy = YbeNoise {
        p2: 0.05,
        ..NOISELESS
    };
    let (mut clean, mut dirty) = (0.0, 0.0);
    unsafe {
        ybe_circuit_noisy_magnetization(c, &NOISELESS, 1.0, &mut clean);
        ybe_circuit_noisy_magnetization(c, &noisy, 1.0, &mut dirty);
        ybe_circuit_free(c);
    }
    assert!(dirty.abs() < clean.abs());
}

#[test]
fn zne_linear_recovers_intercept() {
    let lambdas = [1.0, 3.0, 5.0];
    let values: Vec<f64> = lambdas.iter().map(|l| 0.7 - 0.05 * l).collect();
    let mut e0 = 0.0;
    let s = unsafe {
        ybe_zne_extrapolate(
            lambdas.as_ptr(),
            values.as_ptr(),
            3,
            YbeFitKind::Linear,
            &mut e0,
        )
    };
    assert_eq!(s, YbeStatus::Ok, "{}", last_error());
    assert!((e0 - 0.7).abs() < 1e-12);
}

#[test]
fn zne_rejects_bad_scales() {
    let mut e0 = 0.0;
    let s = unsafe {
        ybe_zne_extrapolate(
            [2.0, 3.0].as_ptr(),
            [0.5, 0.4].as_ptr(),
            2,
            YbeFitKind::Linear,
            &mut e0,
        )
    };
    assert_eq!(s, YbeStatus::ExtrapolationFailed);
    assert!(!last_error().is_empty());
}

#[test]
fn model_round_trips_through_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    let params = MlpParams::init(4, 8, 7);
    save_checkpoint(&params, &path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { ybe_model_load(cpath.as_ptr(), &mut m) },
        YbeStatus::Ok
    );
    let mut nf = 0;
    assert_eq!(unsafe { ybe_model_n_features(m, &mut nf) }, YbeStatus::Ok);
    assert_eq!(nf, 4);

    let x = [0.5, 0.4, 0.25, 0.3];
    let mut y = 0.0;
    assert_eq!(
        unsafe { ybe_model_predict(m, x.as_ptr(), 4, &mut y) },
        YbeStatus::Ok
    );
    assert_eq!(y, forward(&params, &x).unwrap());

    assert_eq!(
        unsafe { ybe_model_predict(m, x.as_ptr(), 3, &mut y) },
        YbeStatus::InvalidArgument
    );
    unsafe { ybe_model_free(m) };
}

#[test]
fn missing_model_is_reported() {
    let p = CString::new("/nonexistent/model.txt").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { ybe_model_load(p.as_ptr(), &mut m) },
        YbeStatus::ModelError
    );
    assert!(m.is_null());
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(
            ybe_trotter_circuit_new(3, -0.8, 0.2, 0.025, 1, ptr::null_mut()),
            YbeStatus::NullPointer
        );
        assert_eq!(
            ybe_circuit_stats(
                ptr::null(),
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut()
            ),
            YbeStatus::NullPointer
        );
        assert_eq!(
            ybe_model_load(ptr::null(), ptr::null_mut()),
            YbeStatus::NullPointer
        );
        ybe_circuit_free(ptr::null_mut());
        ybe_model_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn invalid_chain_length_is_an_argument_error() {
    let mut c = ptr::null_mut();
    let s = unsafe { ybe_trotter_circuit_new(1, -0.8, 0.2, 0.025, 1, &mut c) };
    assert_eq!(s, YbeStatus::InvalidArgument);
    assert!(c.is_null());
}

#[test]
fn success_clears_last_error() {
    let mut c = ptr::null_mut();
    unsafe { ybe_trotter_circuit_new(1, -0.8, 0.2, 0.025, 1, &mut c) };
    assert!(!last_error().is_empty());
    let c = trotter(3, 1);
    assert!(last_error().is_empty());
    unsafe { ybe_circuit_free(c) };
}

#[test]
fn pipeline_rejects_bad_config() {
    let cfg = CString::new(r#"{"spins": [11]}"#).unwrap();
    assert_eq!(
        unsafe { ybe_run_pipeline(cfg.as_ptr(), ptr::null()) },
        YbeStatus::InvalidArgument
    );
    let junk = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { ybe_run_pipeline(junk.as_ptr(), ptr::null()) },
        YbeStatus::InvalidArgument
    );
}

#[test]
fn pipeline_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new(
        r#"{"spins": [3], "learning_curve": {"enabled": false, "seeds": [0], "points": 1},
            "training": {"max_epochs": 600, "warmup_epochs": 100}}"#,
    )
    .unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let s = unsafe { ybe_run_pipeline(cfg.as_ptr(), out.as_ptr()) };
    assert_eq!(s, YbeStatus::Ok, "{}", last_error());
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("series_3.csv").exists());
}
