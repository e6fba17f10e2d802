// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Zero-noise extrapolation: gate-level noise amplification (unitary folding
//! and idle-time identity insertion) and extrapolation of `E(λ)` to `λ = 0`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::Circuit;
use crate::lsq::{levenberg_marquardt, LmOptions, LmTermination};
use crate::series::{Provenance, TimeSeries, Variant};
use crate::sim::{apply_circuit_noisy, staggered_magnetization, NoiseModel, PureState, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZneError {
    #[error("folding needs an odd positive integer scale, got {0}")]
    BadFoldScale(f64),
    #[error("noise scale must be >= 1, got {0}")]
    BadScale(f64),
    #[error("invalid series: {0}")]
    BadSeries(String),
    #[error("{kind:?} needs at least {needed} points, series has {have}")]
    NotEnoughPoints {
        kind: ExtrapolationKind,
        needed: usize,
        have: usize,
    },
    #[error("singular normal equations for {0:?}")]
    Singular(ExtrapolationKind),
    #[error("exponential fit did not converge (residual {residual:e}, termination {termination})")]
    NonConvergence { residual: f64, termination: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMethod {
    GlobalFold,
    LocalFold,
    IdentityInsertion,
}

/// Noise amplification factor `λ` and how it is realized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScale {
    pub lambda: f64,
    pub method: ScalingMethod,
}

impl NoiseScale {
    pub fn validate(&self) -> Result<(), ZneError> {
        match self.method {
            ScalingMethod::GlobalFold | ScalingMethod::LocalFold => {
                fold_repeats(self.lambda).map(|_| ())
            }
            ScalingMethod::IdentityInsertion if self.lambda >= 1.0 && self.lambda.is_finite() => {
                Ok(())
            }
            ScalingMethod::IdentityInsertion => Err(ZneError::BadScale(self.lambda)),
        }
    }
}

fn fold_repeats(lambda: f64) -> Result<usize, ZneError> {
    if lambda >= 1.0 && lambda.fract() == 0.0 && lambda as u64 % 2 == 1 {
        Ok((lambda as usize - 1) / 2)
    } else {
        Err(ZneError::BadFoldScale(lambda))
    }
}

/// `U -> U (U† U)^k` with `k = (λ-1)/2`.
pub fn fold_global(c: &Circuit, lambda: f64) -> Result<Circuit, ZneError> {
    let k = fold_repeats(lambda)?;
    let inv = c.inverse();
    let mut out = c.clone();
    for _ in 0..k {
        out = out.then(&inv).then(c);
    }
    Ok(out)
}

/// Every block `b -> b (b† b)^k`.
pub fn fold_local(c: &Circuit, lambda: f64) -> Result<Circuit, ZneError> {
    let k = fold_repeats(lambda)?;
    let blocks = c
        .blocks()
        .iter()
        .flat_map(|b| std::iter::once(*b).chain((0..k).flat_map(move |_| [b.inverse(), *b])))
        .collect();
    Ok(Circuit::new(c.n_qubits(), blocks).expect("bonds already validated"))
}

/// Identity insertion: stretches idle exposure per layer by `λ`, gate noise
/// untouched.
pub fn insert_identity_scaling(nm: &NoiseModel, lambda: f64) -> Result<NoiseModel, ZneError> {
    if !lambda.is_finite() || lambda < 1.0 {
        return Err(ZneError::BadScale(lambda));
    }
    Ok(NoiseModel {
        wait_units_per_layer: nm.wait_units_per_layer * lambda,
        ..*nm
    })
}

/// Expectation values `E(λ)` at increasing noise scales, starting at `λ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneSeries {
    pub points: Vec<(f64, f64)>,
    pub observable: String,
}

impl ZneSeries {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ZneError> {
        let s = Self {
            points,
            observable: "staggered_magnetization".into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ZneError> {
        if self.points.len() < 2 {
            return Err(ZneError::BadSeries("need at least 2 points".into()));
        }
        if self.points[0].0 != 1.0 {
            return Err(ZneError::BadSeries("first scale must be 1".into()));
        }
        if !self.points.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(ZneError::BadSeries(
                "scales must be strictly increasing".into(),
            ));
        }
        if self
            .points
            .iter()
            .any(|(l, e)| !l.is_finite() || !e.is_finite())
        {
            return Err(ZneError::BadSeries("non-finite point".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtrapolationKind {
    Linear,
    Polynomial {
        degree: usize,
    },
    /// `E(λ) = a + b exp(-c λ)`.
    Exponential,
}

impl ExtrapolationKind {
    pub fn tag(&self) -> String {
        match self {
            ExtrapolationKind::Linear => "linear".into(),
            ExtrapolationKind::Polynomial { degree } => format!("poly{degree}"),
            ExtrapolationKind::Exponential => "exponential".into(),
        }
    }

    fn n_params(&self) -> usize {
        match self {
            ExtrapolationKind::Linear => 2,
            ExtrapolationKind::Polynomial { degree } => degree + 1,
            ExtrapolationKind::Exponential => 3,
        }
    }
}

/// A fitted extrapolation model. Polynomial parameters are coefficients in
/// increasing power; exponential parameters are `[a, b, c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationModel {
    pub kind: ExtrapolationKind,
    pub params: Vec<f64>,
    /// Root-mean-square fit residual over the series points.
    pub residual: f64,
}

impl ExtrapolationModel {
    pub fn evaluate(&self, lambda: f64) -> f64 {
        match self.kind {
            ExtrapolationKind::Exponential => {
                self.params[0] + self.params[1] * (-self.params[2] * lambda).exp()
            }
            _ => self
                .params
                .iter()
                .rev()
                .fold(0.0, |acc, c| acc * lambda + c),
        }
    }

    pub fn zero_noise_value(&self) -> f64 {
        self.evaluate(0.0)
    }

    fn rms_residual(&self, points: &[(f64, f64)]) -> f64 {
        let ss: f64 = points
            .iter()
            .map(|(l, e)| (self.evaluate(*l) - e).powi(2))
            .sum();
        (ss / points.len() as f64).sqrt()
    }
}

/// Least-squares fit of `E(λ)`; returns the extrapolated `E(0)` and the model.
pub fn fit_extrapolate(
    series: &ZneSeries,
    kind: ExtrapolationKind,
) -> Result<(f64, ExtrapolationModel), ZneError> {
    series.validate()?;
    let pts = &series.points;

    // a constant series extrapolates to itself under every model
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, e)| {
            (lo.min(*e), hi.max(*e))
        });
    if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
        let value = pts[0].1;
        let params = match kind {
            ExtrapolationKind::Exponential => vec![value, 0.0, 1.0],
            _ => {
                let mut p = vec![0.0; kind.n_params()];
                p[0] = value;
                p
            }
        };
        let model = ExtrapolationModel {
            kind,
            params,
            residual: 0.0,
        };
        let residual = model.rms_residual(pts);
        return Ok((value, ExtrapolationModel { residual, ..model }));
    }

    if pts.len() < kind.n_params() {
        return Err(ZneError::NotEnoughPoints {
            kind,
            needed: kind.n_params(),
            have: pts.len(),
        });
    }
    let params = match kind {
        ExtrapolationKind::Linear => polynomial_fit(pts, 1).ok_or(ZneError::Singular(kind))?,
        ExtrapolationKind::Polynomial { degree } => {
            polynomial_fit(pts, degree).ok_or(ZneError::Singular(kind))?
        }
        ExtrapolationKind::Exponential => exponential_fit(pts)?,
    };
    let mut model = ExtrapolationModel {
        kind,
        params,
        residual: 0.0,
    };
    model.residual = model.rms_residual(pts);
    Ok((model.zero_noise_value(), model))
}

/// Normal equations `VᵀV c = Vᵀy`, solved with full pivoting.
fn polynomial_fit(pts: &[(f64, f64)], degree: usize) -> Option<Vec<f64>> {
    let n = degree + 1;
    let v = DMatrix::from_fn(pts.len(), n, |i, j| pts[i].0.powi(j as i32));
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let lu = (v.transpose() * &v).full_piv_lu();
    if !lu.is_invertible() {
        return None;
    }
    lu.solve(&(v.transpose() * y))
        .map(|c| c.iter().copied().collect())
}

/// Given a decay rate, the best `(a, b)` is a linear problem.
fn linear_part(pts: &[(f64, f64)], c: f64) -> Option<(f64, f64, f64)> {
    let m = DMatrix::from_fn(pts.len(), 2, |i, j| {
        if j == 0 {
            1.0
        } else {
            (-c * pts[i].0).exp()
        }
    });
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let lu = (m.transpose() * &m).full_piv_lu();
    let sol = lu.solve(&(m.transpose() * &y))?;
    let r = (&m * &sol - &y).norm();
    Some((sol[0], sol[1], r))
}

fn exponential_fit(pts: &[(f64, f64)]) -> Result<Vec<f64>, ZneError> {
    // warm start: scan decay rates, solving the linear part exactly for each
    let mut candidates: Vec<f64> = vec![-0.5, -0.1, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0];
    let (l0, e0) = pts[0];
    let (l1, e1) = pts[1];
    let (l2, e2) = pts[pts.len() - 1];
    let ratio = (e2 - e1) / (e1 - e0);
    let spacing = (l2 - l1).max(1e-12);
    if ratio.is_finite() && ratio > 0.0 && ratio != 1.0 && (l1 - l0 - spacing).abs() < 1e-12 {
        candidates.push(-ratio.ln() / spacing);
    }
    let start = candidates
        .iter()
        .filter_map(|&c| linear_part(pts, c).map(|(a, b, r)| (a, b, c, r)))
        .filter(|(a, b, _, r)| a.is_finite() && b.is_finite() && r.is_finite())
        .min_by(|x, y| x.3.total_cmp(&y.3))
        .ok_or(ZneError::Singular(ExtrapolationKind::Exponential))?;

    let eval = |p: &DVector<f64>| {
        let (a, b, c) = (p[0], p[1], p[2]);
        let mut r = DVector::zeros(pts.len());
        let mut j = DMatrix::zeros(pts.len(), 3);
        for (i, (l, e)) in pts.iter().enumerate() {
            let ex = (-c * l).exp();
            r[i] = a + b * ex - e;
            j[(i, 0)] = 1.0;
            j[(i, 1)] = ex;
            j[(i, 2)] = -b * l * ex;
        }
        (r, j)
    };
    let opts = LmOptions {
        max_iterations: 2000,
        objective_tol: 1e-14,
        ..LmOptions::default()
    };
    let rep = levenberg_marquardt(
        DVector::from_vec(vec![start.0, start.1, start.2]),
        eval,
        &opts,
    );
    let p: Vec<f64> = rep.x.iter().copied().collect();
    let sane = p.iter().all(|v| v.is_finite()) && p[2].abs() < 50.0;
    if !sane
        || rep.termination == LmTermination::MaxIterations
        || rep.termination == LmTermination::NonFinite
    {
        return Err(ZneError::NonConvergence {
            residual: rep.residual_norm,
            termination: format!("{:?}", rep.termination),
        });
    }
    Ok(p)
}

/// How the per-step extrapolation model is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ModelSelection {
    Fixed {
        kind: ExtrapolationKind,
    },
    /// Lowest RMS residual wins; residuals within `1e-10` count as ties and
    /// go to the earlier candidate.
    BestResidual {
        candidates: Vec<ExtrapolationKind>,
    },
}

impl Default for ModelSelection {
    fn default() -> Self {
        ModelSelection::BestResidual {
            candidates: vec![
                ExtrapolationKind::Exponential,
                ExtrapolationKind::Polynomial { degree: 2 },
                ExtrapolationKind::Linear,
            ],
        }
    }
}

pub fn select_and_fit(
    series: &ZneSeries,
    selection: &ModelSelection,
) -> Result<(f64, ExtrapolationModel), ZneError> {
    match selection {
        ModelSelection::Fixed { kind } => fit_extrapolate(series, *kind),
        ModelSelection::BestResidual { candidates } => {
            let mut best: Option<(f64, ExtrapolationModel)> = None;
            let mut last_err = None;
            for kind in candidates {
                match fit_extrapolate(series, *kind) {
                    Ok(fit) => {
                        let better = best
                            .as_ref()
                            .is_none_or(|(_, m)| fit.1.residual < m.residual - 1e-10);
                        if better {
                            best = Some(fit);
                        }
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            best.ok_or_else(|| {
                last_err.unwrap_or(ZneError::BadSeries("no candidate models".into()))
            })
        }
    }
}

/// Output of [`zne_timeseries`].
#[derive(Debug, Clone)]
pub struct ZneRun {
    pub corrected: TimeSeries,
    /// One raw series per noise scale, in the order of the requested scales.
    pub raw: Vec<TimeSeries>,
    /// Fitted model per step, `None` where every candidate failed.
    pub models: Vec<Option<ExtrapolationModel>>,
    /// Error text for flagged steps.
    pub flags: Vec<Option<String>>,
    /// Blocks simulated across all scales.
    pub block_applications: usize,
    /// Blocks simulated by the `λ = 1` runs alone.
    pub baseline_block_applications: usize,
}

/// Per-step ZNE over a time series of circuits. Every step is folded at
/// every scale, simulated on the density matrix, and extrapolated; a failed
/// fit flags its step and falls back to the `λ = 1` value.
pub fn zne_timeseries(
    circuits: &[Circuit],
    times: &[f64],
    initial: &PureState,
    nm: &NoiseModel,
    lambdas: &[f64],
    method: ScalingMethod,
    selection: &ModelSelection,
) -> Result<ZneRun, ZneError> {
    assert_eq!(circuits.len(), times.len(), "one circuit per time step");
    if lambdas.first() != Some(&1.0) {
        return Err(ZneError::BadSeries("scales must start at 1".into()));
    }
    for &l in lambdas {
        NoiseScale { lambda: l, method }.validate()?;
    }

    struct StepOut {
        raw: Vec<f64>,
        fit: Result<(f64, ExtrapolationModel), ZneError>,
        blocks: usize,
        baseline: usize,
    }
    let steps: Vec<StepOut> = circuits
        .par_iter()
        .map(|c| -> Result<StepOut, ZneError> {
            let mut raw = Vec::with_capacity(lambdas.len());
            let mut blocks = 0;
            for &l in lambdas {
                let (circuit, model) = match method {
                    ScalingMethod::GlobalFold => (fold_global(c, l)?, *nm),
                    ScalingMethod::LocalFold => (fold_local(c, l)?, *nm),
                    ScalingMethod::IdentityInsertion => {
                        (c.clone(), insert_identity_scaling(nm, l)?)
                    }
                };
                blocks += circuit.len();
                let rho = apply_circuit_noisy(&circuit, initial, &model, 1.0)?;
                raw.push(staggered_magnetization(&rho));
            }
            let series =
                ZneSeries::new(lambdas.iter().copied().zip(raw.iter().copied()).collect())?;
            Ok(StepOut {
                fit: select_and_fit(&series, selection),
                raw,
                blocks,
                baseline: c.len(),
            })
        })
        .collect::<Result<_, _>>()?;

    let n_spins = initial.n_qubits();
    let mut corrected = Vec::with_capacity(steps.len());
    let mut models = Vec::with_capacity(steps.len());
    let mut flags = Vec::with_capacity(steps.len());
    for s in &steps {
        match &s.fit {
            Ok((e0, m)) => {
                corrected.push(*e0);
                models.push(Some(m.clone()));
                flags.push(None);
            }
            Err(e) => {
                corrected.push(s.raw[0]);
                models.push(None);
                flags.push(Some(e.to_string()));
            }
        }
    }
    let raw = lambdas
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            TimeSeries::new(
                n_spins,
                Variant::Noisy,
                times.to_vec(),
                steps.iter().map(|s| s.raw[k]).collect(),
            )
            .with_provenance(Provenance {
                lambda: Some(l),
                noise_p2: Some(nm.p2),
                ..Default::default()
            })
        })
        .collect();
    Ok(ZneRun {
        corrected: TimeSeries::new(n_spins, Variant::ZneCorrected, times.to_vec(), corrected)
            .with_provenance(Provenance {
                noise_p2: Some(nm.p2),
                ..Default::default()
            }),
        raw,
        models,
        flags,
        block_applications: steps.iter().map(|s| s.blocks).sum(),
        baseline_block_applications: steps.iter().map(|s| s.baseline).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_trotter_circuit, RBlock, TrotterSpec};

    fn series(f: impl Fn(f64) -> f64, lambdas: &[f64]) -> ZneSeries {
        ZneSeries::new(lambdas.iter().map(|&l| (l, f(l))).collect()).unwrap()
    }

    #[test]
    fn fold_scale_validation() {
        let c = Circuit::empty(3);
        assert!(fold_global(&c, 2.0).is_err());
        assert!(fold_global(&c, -1.0).is_err());
        assert!(fold_local(&c, 1.5).is_err());
        assert!(fold_global(&c, 3.0).unwrap().is_empty());
    }

    #[test]
    fn fold_counts() {
        let c = build_trotter_circuit(&TrotterSpec::new(4, -0.8, 0.2, 0.1, 2)).unwrap();
        assert_eq!(fold_global(&c, 1.0).unwrap(), c);
        for l in [3.0, 5.0, 7.0] {
            assert_eq!(fold_global(&c, l).unwrap().len(), l as usize * c.len());
            assert_eq!(fold_local(&c, l).unwrap().len(), l as usize * c.len());
        }
    }

    #[test]
    fn local_fold_layout() {
        let b = RBlock::new(0, 0.3, 0.1);
        let c = Circuit::new(2, vec![b]).unwrap();
        let f = fold_local(&c, 3.0).unwrap();
        assert_eq!(f.blocks(), &[b, b.inverse(), b]);
    }

    #[test]
    fn identity_insertion() {
        let nm = NoiseModel::default();
        assert_eq!(insert_identity_scaling(&nm, 1.0).unwrap(), nm);
        let s = insert_identity_scaling(&nm, 2.0).unwrap();
        assert_eq!(s.wait_units_per_layer, 2.0 * nm.wait_units_per_layer);
        assert_eq!(s.p2, nm.p2);
        assert!(insert_identity_scaling(&nm, 0.9).is_err());
    }

    #[test]
    fn linear_exact() {
        let s = series(|l| 0.7 - 0.1 * l, &[1.0, 2.0, 3.0]);
        let (e0, m) = fit_extrapolate(&s, ExtrapolationKind::Linear).unwrap();
        assert!((e0 - 0.7).abs() < 1e-10);
        assert!(m.residual < 1e-12);
    }

    #[test]
    fn exponential_synthetic() {
        let s = series(|l| 0.2 + 0.6 * (-0.5 * l).exp(), &[1.0, 3.0, 5.0]);
        let (e0, m) = fit_extrapolate(&s, ExtrapolationKind::Exponential).unwrap();
        assert!((e0 - 0.8).abs() < 1e-6, "{e0} {m:?}");
    }

    #[test]
    fn constant_series_every_model() {
        let s = ZneSeries::new(vec![(1.0, 0.42), (3.0, 0.42)]).unwrap();
        for kind in [
            ExtrapolationKind::Linear,
            ExtrapolationKind::Polynomial { degree: 2 },
            ExtrapolationKind::Exponential,
        ] {
            let (e0, _) = fit_extrapolate(&s, kind).unwrap();
            assert_eq!(e0, 0.42);
        }
    }

    #[test]
    fn too_few_points() {
        let s = ZneSeries::new(vec![(1.0, 0.4), (3.0, 0.3)]).unwrap();
        assert!(matches!(
            fit_extrapolate(&s, ExtrapolationKind::Polynomial { degree: 2 }),
            Err(ZneError::NotEnoughPoints {
                needed: 3,
                have: 2,
                ..
            })
        ));
    }

    #[test]
    fn series_validation() {
        assert!(ZneSeries::new(vec![(1.0, 0.4)]).is_err());
        assert!(ZneSeries::new(vec![(2.0, 0.4), (3.0, 0.3)]).is_err());
        assert!(ZneSeries::new(vec![(1.0, 0.4), (1.0, 0.3)]).is_err());
    }

    #[test]
    fn best_residual_prefers_exact_family() {
        let s = series(|l| 0.3 + 0.1 * l - 0.02 * l * l, &[1.0, 2.0, 3.0, 4.0]);
        let (e0, m) = select_and_fit(&s, &ModelSelection::default()).unwrap();
        assert_eq!(m.kind, ExtrapolationKind::Polynomial { degree: 2 });
        assert!((e0 - 0.3).abs() < 1e-10);
    }
}
