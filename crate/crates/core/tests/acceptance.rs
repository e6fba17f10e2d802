// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ybe_mitigate::compress::{full_compress, partial_compress, phase_aligned_distance};
use ybe_mitigate::lattice::{
    build_trotter_circuit, circuit_unitary, cnot_count, trotter_step_blocks, Circuit, TrotterSpec,
};
use ybe_mitigate::mitigator::{
    learning_curve, loss_and_gradients, predict_series, train, MlpParams,
};
use ybe_mitigate::runner::{
    compute_zne_demo, prepare_from_simulation, run_pipeline, simulate_chain, training_config,
    ChainSimulation, CurveConfig, ExperimentConfig,
};
use ybe_mitigate::sim::{
    apply_circuit_noisy, apply_circuit_pure, exact_evolution_oracle, hamiltonian_matrix,
    neel_state, staggered_magnetization, MixedState, NoiseModel, PureState,
};
use ybe_mitigate::zne::{fit_extrapolate, ExtrapolationKind, ZneSeries};

type Outcome = Result<String, String>;
type Synthetic = (ExtrapolationKind, Vec<f64>, Box<dyn Fn(f64) -> f64>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:.1?}, limit {limit:?}")
    })
}

// ---------------------------------------------------------------------------

fn cnot_counts() -> Outcome {
    let t0 = Instant::now();
    let c = build_trotter_circuit(&TrotterSpec::new(3, -0.8, 0.2, 0.025, 3))
        .map_err(|e| e.to_string())?;
    let (pc, _) = partial_compress(&c, 2).map_err(|e| e.to_string())?;
    let (fc, _) = full_compress(&c).map_err(|e| e.to_string())?;
    let got = (cnot_count(&c), cnot_count(&pc), cnot_count(&fc));
    ensure(got == (12, 8, 6), || {
        format!("counts {got:?}, want (12, 8, 6)")
    })?;
    within(t0.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "uncompressed/partial/full = {}/{}/{}",
        got.0, got.1, got.2
    ))
}

fn compression_equivalence() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_d, mut worst_r, mut cases) = (0.0f64, 0.0f64, 0);
    for n in 3..=6 {
        for steps in 1..=10 {
            for _ in 0..20 {
                let jx = rng.random_range(-1.0..1.0);
                let jy = rng.random_range(-1.0..1.0);
                let c = build_trotter_circuit(&TrotterSpec::new(n, jx, jy, 0.1, steps))
                    .map_err(|e| e.to_string())?;
                let (out, rep) = full_compress(&c)
                    .map_err(|e| format!("N={n} steps={steps} J=({jx}, {jy}): {e}"))?;
                let u = circuit_unitary(&c).map_err(|e| e.to_string())?;
                let v = circuit_unitary(&out).map_err(|e| e.to_string())?;
                worst_d = worst_d.max(phase_aligned_distance(&u, &v));
                worst_r = worst_r.max(rep.max_residual);
                cases += 1;
            }
        }
    }
    ensure(worst_d < 1e-7, || format!("distance {worst_d:e} >= 1e-7"))?;
    ensure(worst_r < 1e-9, || {
        format!("move residual {worst_r:e} >= 1e-9")
    })?;
    within(t0.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "{cases} circuits, max distance {worst_d:.1e}, max move residual {worst_r:.1e}"
    ))
}

fn constant_depth() -> Outcome {
    let mut summary = Vec::new();
    for n in 3..=6 {
        let sizes: Vec<usize> = [n, 2 * n, 4 * n]
            .iter()
            .map(|&s| {
                let c = build_trotter_circuit(&TrotterSpec::new(n, -0.8, 0.2, 0.025, s)).unwrap();
                full_compress(&c).unwrap().0.len()
            })
            .collect();
        let bound = n * (n - 1) / 2;
        ensure(sizes.iter().all(|&s| s <= bound), || {
            format!("N={n}: {sizes:?} exceeds {bound}")
        })?;
        ensure(sizes.iter().all(|&s| s == sizes[0]), || {
            format!("N={n}: sizes vary {sizes:?}")
        })?;
        summary.push(format!("N={n}:{}", sizes[0]));
    }
    Ok(format!("blocks {}", summary.join(" ")))
}

/// Max deviations from exact evolution over the grid `t = k dt`,
/// k = 1..=T/dt: `(|m_s - m_s exact|, ‖ψ - ψ exact‖)`.
fn trotter_error(n: usize, total: f64, dt: f64) -> (f64, f64) {
    let steps = (total / dt).round() as usize;
    let spec = TrotterSpec::new(n, -0.8, 0.2, dt, 1);
    let one = Circuit::new(n, trotter_step_blocks(&spec)).unwrap();
    let s0 = neel_state(n).unwrap();
    let times: Vec<f64> = (1..=steps).map(|k| k as f64 * dt).collect();
    let exact = exact_evolution_oracle(&spec, &times, &s0).unwrap();
    let h = hamiltonian_matrix(&spec).unwrap();
    let psi0 = DVector::from_column_slice(s0.amplitudes());
    let mut s = s0;
    let (mut ms_err, mut state_err) = (0.0f64, 0.0f64);
    for (k, t) in times.iter().enumerate() {
        s = apply_circuit_pure(&one, &s).unwrap();
        ms_err = ms_err.max((staggered_magnetization(&s) - exact.values[k]).abs());
        let psi = (h.clone() * Complex64::new(0.0, -t)).exp() * &psi0;
        state_err = state_err.max((DVector::from_column_slice(s.amplitudes()) - psi).norm());
    }
    (ms_err, state_err)
}

fn trotter_convergence() -> Outcome {
    let (coarse, coarse_state) = trotter_error(4, 1.0, 0.05);
    let (fine, fine_state) = trotter_error(4, 1.0, 0.025);
    let ratio = coarse / fine;
    // The state error is reported alongside so a failure shows which order
    // the integrator actually has.
    let detail = format!(
        "m_s err(dt=0.05) {coarse:.3e}, err(dt=0.025) {fine:.3e}, ratio {ratio:.3}; \
         state error ratio {:.3}",
        coarse_state / fine_state
    );
    ensure((1.6..=2.4).contains(&ratio), || {
        format!("m_s ratio outside [1.6, 2.4]: {detail}")
    })?;
    Ok(detail)
}

fn zne_demo() -> Outcome {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::default();
    let demo = compute_zne_demo(&cfg).map_err(|e| e.to_string())?;
    let raw = &demo.noisy[0].values;
    let steps = demo.ideal.len();
    let (mut better, mut sum_z, mut sum_r) = (0, 0.0, 0.0);
    for ((z, r), ideal) in demo
        .corrected
        .values
        .iter()
        .zip(raw)
        .zip(&demo.ideal.values)
    {
        let (z, r) = ((z - ideal).abs(), (r - ideal).abs());
        better += usize::from(z <= r);
        sum_z += z;
        sum_r += r;
    }
    let frac = better as f64 / steps as f64;
    let gain = sum_r / sum_z;
    ensure(steps == 100, || format!("{steps} steps"))?;
    ensure(frac >= 0.9, || {
        format!("ZNE no worse on {:.0}% of steps", frac * 100.0)
    })?;
    ensure(gain >= 2.0, || {
        format!("mean error reduced only {gain:.2}x")
    })?;
    within(t0.elapsed(), Duration::from_secs(600))?;
    Ok(format!(
        "no worse on {better}/{steps} steps, mean error {:.2e} -> {:.2e} ({gain:.0}x)",
        sum_r / steps as f64,
        sum_z / steps as f64
    ))
}

fn extrapolation_oracles() -> Outcome {
    let lambdas = [1.0, 2.0, 3.0, 4.0, 5.0];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(0.1..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let c: f64 = rng.random_range(0.05..0.6);
        let cases: [Synthetic; 3] = [
            (
                ExtrapolationKind::Linear,
                vec![a, b * 0.1],
                Box::new(move |l| a + 0.1 * b * l),
            ),
            (
                ExtrapolationKind::Polynomial { degree: 2 },
                vec![a, b * 0.1, -c * 0.02],
                Box::new(move |l| a + 0.1 * b * l - 0.02 * c * l * l),
            ),
            (
                ExtrapolationKind::Exponential,
                vec![a, b, c],
                Box::new(move |l| a + b * (-c * l).exp()),
            ),
        ];
        for (kind, truth, f) in cases {
            let s = ZneSeries::new(lambdas.iter().map(|&l| (l, f(l))).collect())
                .map_err(|e| e.to_string())?;
            let (e0, m) = fit_extrapolate(&s, kind).map_err(|e| e.to_string())?;
            for (got, want) in m.params.iter().zip(&truth) {
                let rel = (got - want).abs() / want.abs().max(1e-300);
                ensure(rel < 1e-6, || {
                    format!("{}: param {got} vs {want}", kind.tag())
                })?;
                worst = worst.max(rel);
            }
            let rel0 = (e0 - f(0.0)).abs() / f(0.0).abs().max(1e-300);
            ensure(rel0 < 1e-6, || {
                format!("{}: E(0) {e0} vs {}", kind.tag(), f(0.0))
            })?;
            worst = worst.max(rel0);
        }
    }
    Ok(format!("60 fits, max relative error {worst:.1e}"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for draw in 0..50u64 {
        let p = MlpParams::init(4, 6, draw);
        let mut theta = p.flat();
        for v in theta.iter_mut() {
            *v += rng.random_range(-0.5..0.5);
        }
        let mut p = p;
        p.set_flat(&theta);
        let xs: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let ys: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = loss_and_gradients(&p, &xs, &ys).map_err(|e| e.to_string())?;
        let h = 1e-5;
        for i in 0..theta.len() {
            let mut q = p.clone();
            let mut t = theta.clone();
            t[i] = theta[i] + h;
            q.set_flat(&t);
            let up = loss_and_gradients(&q, &xs, &ys).unwrap().0;
            t[i] = theta[i] - h;
            q.set_flat(&t);
            let down = loss_and_gradients(&q, &xs, &ys).unwrap().0;
            let fd = (up - down) / (2.0 * h);
            // Relative to the gradient scale so tiny components do not blow up.
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    ensure(worst < 1e-5, || format!("max relative error {worst:.2e}"))?;
    Ok(format!("50 draws, max relative error {worst:.1e}"))
}

// Simulations for the mitigation criteria, shared by efficacy and curves.
fn mitigation_sims() -> Vec<(ExperimentConfig, ChainSimulation)> {
    (3..=10)
        .map(|n| {
            let cfg = ExperimentConfig {
                spins: vec![n],
                learning_curve: CurveConfig {
                    enabled: false,
                    ..Default::default()
                },
                ..Default::default()
            };
            let sim = simulate_chain(&cfg, n).expect("simulation");
            (cfg, sim)
        })
        .collect()
}

fn median3(mut v: [f64; 3]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[1]
}

fn mitigation_efficacy(sims: &[(ExperimentConfig, ChainSimulation)]) -> Outcome {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for (base, sim) in sims {
        let mut mit = [0.0; 3];
        let mut noisy = [0.0; 3];
        for seed in 0..3u64 {
            let cfg = ExperimentConfig {
                seed,
                ..base.clone()
            };
            let prep = prepare_from_simulation(&cfg, sim.clone()).map_err(|e| e.to_string())?;
            let (p, _) = train(&prep.dataset, &training_config(&cfg)).map_err(|e| e.to_string())?;
            let pred = predict_series(&p, &prep.dataset).map_err(|e| e.to_string())?;
            let ds = &prep.dataset;
            mit[seed as usize] = ds.held_out_rmse(&pred.series.values);
            noisy[seed as usize] = ds
                .held_out_rmse(&ds.fc_values())
                .min(ds.held_out_rmse(&ds.pc_values()));
        }
        let (m, b) = (median3(mit), median3(noisy));
        if m >= b {
            failures.push(format!("N={}: {m:.4} >= {b:.4}", sim.n_spins));
        }
        lines.push(format!("N={} {m:.4}<{b:.4}", sim.n_spins));
    }
    ensure(failures.is_empty(), || failures.join(", "))?;
    Ok(format!(
        "median held-out RMSE mitigated<noisy: {}",
        lines.join(" ")
    ))
}

fn learning_curve_shape(sims: &[(ExperimentConfig, ChainSimulation)]) -> Outcome {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for (cfg, sim) in sims {
        let prep = prepare_from_simulation(cfg, sim.clone()).map_err(|e| e.to_string())?;
        let (small, large) = if prep.dataset.len() == 100 {
            (10, 40)
        } else {
            (5, 15)
        };
        let rows = learning_curve(
            &prep.dataset,
            &[small, large],
            &[0, 1, 2, 3, 4],
            &training_config(cfg),
        )
        .map_err(|e| e.to_string())?;
        let (a, b) = (rows[0].mean_rmse, rows[1].mean_rmse);
        if b >= a {
            failures.push(format!(
                "N={}: size {large} {b:.4} >= size {small} {a:.4}",
                sim.n_spins
            ));
        }
        lines.push(format!("N={} {small}:{a:.4}>{large}:{b:.4}", sim.n_spins));
    }
    ensure(failures.is_empty(), || failures.join(", "))?;
    Ok(format!(
        "mean held-out RMSE over 5 seeds: {}",
        lines.join(" ")
    ))
}

fn parity(i: usize) -> u32 {
    i.count_ones() % 2
}

fn physics_invariants() -> Outcome {
    let tol = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for n in 2..=10 {
        let m = staggered_magnetization(&neel_state(n).unwrap());
        ensure((m - 1.0).abs() < 1e-12, || {
            format!("m_s(Neel) = {m} at N={n}")
        })?;
        let mixed = staggered_magnetization(&MixedState::maximally_mixed(n));
        ensure(mixed.abs() < 1e-12, || {
            format!("maximally mixed m_s = {mixed} at N={n}")
        })?;
    }
    for n in 3..=6 {
        let spec = TrotterSpec::new(
            n,
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            0.1,
            4,
        );
        let c = build_trotter_circuit(&spec).unwrap();
        let s0 = neel_state(n).unwrap();
        let s = apply_circuit_pure(&c, &s0).unwrap();
        ensure((s.norm() - 1.0).abs() < tol, || {
            format!("norm {} at N={n}", s.norm())
        })?;

        // XX and YY flip spins in pairs, so the Z parity never changes.
        let p0 = parity(neel_bits(n));
        let leak: f64 = s
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(i, _)| parity(*i) != p0)
            .map(|(_, p)| p)
            .sum();
        ensure(leak < tol, || format!("parity leak {leak:e} at N={n}"))?;
        let h = hamiltonian_matrix(&spec).unwrap();
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                ensure(parity(i) == parity(j) || h[(i, j)].norm() < 1e-14, || {
                    format!("H couples parity sectors at ({i}, {j})")
                })?;
            }
        }

        let nm = NoiseModel {
            p2: 0.05,
            p1: 0.01,
            ..NoiseModel::default()
        };
        let rho = apply_circuit_noisy(&c, &s0, &nm, 3.0).unwrap();
        let d = rho.diagnostics();
        ensure(d.is_valid(tol), || {
            format!("density diagnostics {d:?} at N={n}")
        })?;
        ensure(rho.purity() <= 1.0 + tol, || {
            format!("purity {} at N={n}", rho.purity())
        })?;
        let random = random_state(n, &mut rng);
        let d = apply_circuit_noisy(&c, &random, &nm, 1.0)
            .unwrap()
            .diagnostics();
        ensure(d.is_valid(tol), || {
            format!("random-state diagnostics {d:?} at N={n}")
        })?;
    }
    Ok("norm, trace, Hermiticity, PSD, m_s(Neel)=1, parity, mixed m_s=0 hold for N=2..10".into())
}

fn neel_bits(n: usize) -> usize {
    (0..n).filter(|i| i % 2 == 1).map(|i| 1 << i).sum()
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> PureState {
    let amps = (0..1usize << n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect::<Vec<_>>();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    PureState::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig {
        spins: vec![3, 4],
        seed: 42,
        learning_curve: CurveConfig {
            seeds: vec![0, 1],
            ..Default::default()
        },
        out_dir: a.path().to_path_buf(),
        jobs: Some(1),
        ..Default::default()
    };
    let first = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    cfg.out_dir = b.path().to_path_buf();
    cfg.jobs = None;
    let second = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    ensure(!first.manifest.any_failed(), || "a cell failed".into())?;
    let (ma, mb) = (first.manifest.to_json(), second.manifest.to_json());
    ensure(ma == mb, || "manifests differ".into())?;
    let ma_bytes = std::fs::read(a.path().join("manifest.json")).map_err(|e| e.to_string())?;
    let mb_bytes = std::fs::read(b.path().join("manifest.json")).map_err(|e| e.to_string())?;
    ensure(ma_bytes == mb_bytes, || "manifest files differ".into())?;
    let mut csvs = 0;
    for f in &first.manifest.files {
        if f.path.ends_with(".csv") {
            let x = std::fs::read(a.path().join(&f.path)).map_err(|e| e.to_string())?;
            let y = std::fs::read(b.path().join(&f.path)).map_err(|e| e.to_string())?;
            ensure(x == y, || format!("{} differs", f.path))?;
            csvs += 1;
        }
    }
    ensure(csvs >= 6, || format!("only {csvs} CSV files"))?;
    Ok(format!(
        "{csvs} CSV files and manifest byte-identical across runs"
    ))
}

// ---------------------------------------------------------------------------

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let secs = t0.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS [{id:2}] {name} ({secs:.1}s): {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL [{id:2}] {name} ({secs:.1}s): {detail}");
            false
        }
    }
}

fn main() -> ExitCode {
    // `cargo test -- <filter>` passes extra arguments; run only matching names.
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected =
        |name: &str| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()));

    let mut results = Vec::new();
    let mut check = |id: usize, name: &str, f: &dyn Fn() -> Outcome| {
        if selected(name) {
            results.push(run(id, name, f));
        }
    };
    check(1, "cnot_counts", &cnot_counts);
    check(2, "compression_equivalence", &compression_equivalence);
    check(3, "constant_depth", &constant_depth);
    check(4, "trotter_convergence", &trotter_convergence);
    check(5, "zne_demo", &zne_demo);
    check(6, "extrapolation_oracles", &extrapolation_oracles);
    check(7, "gradient_check", &gradient_check);

    let needs_sims = selected("mitigation_efficacy") || selected("learning_curve_shape");
    let t0 = Instant::now();
    let sims = if needs_sims {
        mitigation_sims()
    } else {
        Vec::new()
    };
    if needs_sims {
        println!(
            "     simulated N=3..10 in {:.1}s",
            t0.elapsed().as_secs_f64()
        );
    }
    let efficacy_t0 = t0;
    check(8, "mitigation_efficacy", &|| {
        let r = mitigation_efficacy(&sims);
        within(efficacy_t0.elapsed(), Duration::from_secs(1800))?;
        r
    });
    check(9, "learning_curve_shape", &|| learning_curve_shape(&sims));
    check(10, "physics_invariants", &physics_invariants);
    check(11, "determinism", &determinism);

    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
