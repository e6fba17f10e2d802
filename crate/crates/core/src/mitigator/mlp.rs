// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Two dense layers: sigmoid hidden layer, linear scalar output.
//!
//!   y = W2 · σ(W1 x + b1) + b2

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MitigatorError;

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Adam moment buffers, flattened in parameter order (W1 row-major, b1, W2,
/// b2).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub n_features: usize,
    pub hidden: usize,
    /// `hidden x n_features`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub adam: AdamState,
}

impl MlpParams {
    pub fn zeros(n_features: usize, hidden: usize) -> Self {
        let n = hidden * n_features + 2 * hidden + 1;
        Self {
            n_features,
            hidden,
            w1: vec![0.0; hidden * n_features],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            adam: AdamState {
                m: vec![0.0; n],
                v: vec![0.0; n],
                step: 0,
            },
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(n_features: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(n_features, hidden);
        let lim1 = (6.0 / (n_features + hidden) as f64).sqrt();
        for w in &mut p.w1 {
            *w = rng.random_range(-lim1..lim1);
        }
        let lim2 = (6.0 / (hidden + 1) as f64).sqrt();
        for w in &mut p.w2 {
            *w = rng.random_range(-lim2..lim2);
        }
        p
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params());
        let (w1, rest) = flat.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, rest) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
    }

    pub fn is_finite(&self) -> bool {
        self.flat().iter().all(|v| v.is_finite())
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.n_features..(j + 1) * self.n_features];
                let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.b1[j];
                sigmoid(z)
            })
            .collect()
    }
}

pub fn forward(p: &MlpParams, x: &[f64]) -> Result<f64, MitigatorError> {
    if x.len() != p.n_features {
        return Err(MitigatorError::ShapeMismatch {
            expected: p.n_features,
            got: x.len(),
        });
    }
    let h = p.hidden_activations(x);
    Ok(h.iter().zip(&p.w2).map(|(a, w)| a * w).sum::<f64>() + p.b2)
}

/// MSE over the batch and its gradient, flattened like [`MlpParams::flat`].
pub fn loss_and_gradients(
    p: &MlpParams,
    xs: &[Vec<f64>],
    targets: &[f64],
) -> Result<(f64, Vec<f64>), MitigatorError> {
    if xs.is_empty() {
        return Err(MitigatorError::EmptyBatch);
    }
    assert_eq!(xs.len(), targets.len(), "one target per sample");
    let (nf, nh) = (p.n_features, p.hidden);
    let batch = xs.len() as f64;
    let mut grad = vec![0.0; p.n_params()];
    let (gw1, rest) = grad.split_at_mut(nh * nf);
    let (gb1, rest) = rest.split_at_mut(nh);
    let (gw2, gb2) = rest.split_at_mut(nh);
    let mut loss = 0.0;
    for (x, t) in xs.iter().zip(targets) {
        if x.len() != nf {
            return Err(MitigatorError::ShapeMismatch {
                expected: nf,
                got: x.len(),
            });
        }
        let h = p.hidden_activations(x);
        let y = h.iter().zip(&p.w2).map(|(a, w)| a * w).sum::<f64>() + p.b2;
        let err = y - t;
        loss += err * err;
        let dy = 2.0 * err / batch;
        gb2[0] += dy;
        for j in 0..nh {
            gw2[j] += dy * h[j];
            let dz = dy * p.w2[j] * h[j] * (1.0 - h[j]);
            gb1[j] += dz;
            for (g, xi) in gw1[j * nf..(j + 1) * nf].iter_mut().zip(x) {
                *g += dz * xi;
            }
        }
    }
    Ok((loss / batch, grad))
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// One bias-corrected Adam update.
pub fn adam_step(p: &mut MlpParams, grad: &[f64], lr: f64) {
    let mut flat = p.flat();
    let st = &mut p.adam;
    st.step += 1;
    let c1 = 1.0 - ADAM_BETA1.powi(st.step as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(st.step as i32);
    for i in 0..flat.len() {
        st.m[i] = ADAM_BETA1 * st.m[i] + (1.0 - ADAM_BETA1) * grad[i];
        st.v[i] = ADAM_BETA2 * st.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
        let m_hat = st.m[i] / c1;
        let v_hat = st.v[i] / c2;
        flat[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    p.set_flat(&flat);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_output_zero() {
        let p = MlpParams::zeros(4, 8);
        assert_eq!(forward(&p, &[0.3, -1.0, 2.0, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn zero_output_weights_give_bias() {
        let mut p = MlpParams::init(4, 8, 3);
        p.w2.iter_mut().for_each(|w| *w = 0.0);
        p.b2 = 0.37;
        assert_eq!(forward(&p, &[0.1, 0.2, 0.3, 0.4]).unwrap(), 0.37);
    }

    #[test]
    fn shape_errors() {
        let p = MlpParams::zeros(4, 2);
        assert!(matches!(
            forward(&p, &[1.0]),
            Err(MitigatorError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            loss_and_gradients(&p, &[], &[]),
            Err(MitigatorError::EmptyBatch)
        ));
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let p = MlpParams::init(4, 5, 1);
        let xs = vec![vec![0.1, 0.2, 0.3, 0.4], vec![-0.5, 0.0, 0.9, 0.1]];
        let ts: Vec<f64> = xs.iter().map(|x| forward(&p, x).unwrap()).collect();
        let (loss, g) = loss_and_gradients(&p, &xs, &ts).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hand_derived_single_sample() {
        // one hidden unit, one feature: y = w2 σ(w1 x + b1) + b2
        let mut p = MlpParams::zeros(1, 1);
        p.set_flat(&[0.5, -0.2, 1.5, 0.1]);
        let (x, t) = (0.8, 0.3);
        let z: f64 = 0.5 * x - 0.2;
        let s = 1.0 / (1.0 + (-z).exp());
        let y = 1.5 * s + 0.1;
        let dy = 2.0 * (y - t);
        let want = [
            dy * 1.5 * s * (1.0 - s) * x,
            dy * 1.5 * s * (1.0 - s),
            dy * s,
            dy,
        ];
        let (loss, g) = loss_and_gradients(&p, &[vec![x]], &[t]).unwrap();
        assert!((loss - (y - t).powi(2)).abs() < 1e-15);
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut p = MlpParams::zeros(1, 1);
        adam_step(&mut p, &[1.0, -2.0, 0.0, 0.5], 0.01);
        let f = p.flat();
        // first bias-corrected Adam step has magnitude lr per nonzero coordinate
        assert!((f[0] + 0.01).abs() < 1e-9);
        assert!((f[1] - 0.01).abs() < 1e-9);
        assert_eq!(f[2], 0.0);
        assert!((f[3] + 0.01).abs() < 1e-9);
        assert_eq!(p.adam.step, 1);
    }
}
