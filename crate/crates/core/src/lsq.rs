// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Levenberg-Marquardt for small dense least-squares problems.
//!
//! Minimizes `‖r(x)‖₂` given a callback returning the residual vector and its
//! Jacobian. Damping uses Marquardt's diagonal scaling with Nielsen's update
//! rule for the damping factor.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once `‖r‖₂` falls to this value.
    pub objective_tol: f64,
    /// Stop when a step changes `x` by less than this (relative).
    pub step_tol: f64,
    /// Stop when `‖Jᵀr‖∞` falls below this.
    pub gradient_tol: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            objective_tol: 1e-12,
            step_tol: 1e-15,
            gradient_tol: 1e-15,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmTermination {
    Objective,
    SmallStep,
    SmallGradient,
    MaxIterations,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub x: DVector<f64>,
    /// `‖r(x)‖₂` at the returned point.
    pub residual_norm: f64,
    pub iterations: usize,
    pub termination: LmTermination,
}

pub fn levenberg_marquardt<F>(x0: DVector<f64>, mut eval: F, opts: &LmOptions) -> LmReport
where
    F: FnMut(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut r, mut jac) = eval(&x);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return LmReport {
            residual_norm: f64::NAN,
            x,
            iterations: 0,
            termination: LmTermination::NonFinite,
        };
    }
    let mut mu = f64::NAN;
    let mut nu = 2.0;
    let mut iterations = 0;

    let termination = loop {
        if cost.sqrt() <= opts.objective_tol {
            break LmTermination::Objective;
        }
        if iterations >= opts.max_iterations {
            break LmTermination::MaxIterations;
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        if grad.amax() <= opts.gradient_tol {
            break LmTermination::SmallGradient;
        }
        let diag: DVector<f64> = jtj.diagonal().map(|d| d.max(1e-12));
        if mu.is_nan() {
            mu = opts.initial_damping * diag.max();
        }

        let mut accepted = false;
        let mut tiny_step = false;
        // inner loop raises the damping until a step lowers the cost
        for _ in 0..60 {
            iterations += 1;
            let mut lhs = jtj.clone();
            for i in 0..n {
                lhs[(i, i)] += mu * diag[i];
            }
            let Some(chol) = lhs.cholesky() else {
                mu *= nu;
                nu *= 2.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            if step.norm() <= opts.step_tol * (x.norm() + opts.step_tol) {
                tiny_step = true;
                break;
            }
            let trial = &x + &step;
            let (r_new, jac_new) = eval(&trial);
            let cost_new = r_new.norm_squared();
            let predicted = -(step.dot(&grad) * 2.0 + (&jac * &step).norm_squared());
            let actual = cost - cost_new;
            if cost_new.is_finite() && actual > 0.0 {
                let rho = if predicted > 0.0 {
                    actual / predicted
                } else {
                    1.0
                };
                mu *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                x = trial;
                r = r_new;
                jac = jac_new;
                cost = cost_new;
                accepted = true;
                break;
            }
            mu *= nu;
            nu *= 2.0;
            if iterations >= opts.max_iterations {
                break;
            }
        }
        if tiny_step {
            break LmTermination::SmallStep;
        }
        if !accepted && iterations >= opts.max_iterations {
            break LmTermination::MaxIterations;
        }
        if !accepted {
            break LmTermination::SmallStep;
        }
    };

    LmReport {
        x,
        residual_norm: cost.sqrt(),
        iterations,
        termination,
    }
}
