// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{NoiseModel, SimError};
use crate::lattice::{apply_block_in_place, Circuit, RBlock};

/// Widest register accepted by the density-matrix path.
pub const MAX_NOISY_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 4 {
            return Err(SimError::TooFewQubits(dim.max(1).trailing_zeros() as usize));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn to_density(&self) -> MixedState {
        let dim = self.amplitudes.len();
        let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (r, a) in self.amplitudes.iter().enumerate() {
            for (c, b) in self.amplitudes.iter().enumerate() {
                rho[r * dim + c] = a * b.conj();
            }
        }
        MixedState {
            n_qubits: self.n_qubits,
            rho,
        }
    }
}

/// Néel product state `|0101...>`: qubit `i` is `|1>` exactly when `i` is odd.
pub fn neel_state(n_qubits: usize) -> Result<PureState, SimError> {
    if n_qubits < 2 {
        return Err(SimError::TooFewQubits(n_qubits));
    }
    let index = (0..n_qubits)
        .filter(|q| q % 2 == 1)
        .map(|q| 1usize << q)
        .sum();
    Ok(PureState::basis(n_qubits, index))
}

pub fn apply_circuit_pure(c: &Circuit, s: &PureState) -> Result<PureState, SimError> {
    if c.n_qubits() != s.n_qubits {
        return Err(SimError::DimensionMismatch {
            circuit: c.n_qubits(),
            state: s.n_qubits,
        });
    }
    let mut out = s.clone();
    for b in c.blocks() {
        apply_block_in_place(&mut out.amplitudes, b);
    }
    Ok(out)
}

/// Density matrix, row-major `2^N x 2^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    n_qubits: usize,
    rho: Vec<Complex64>,
}

/// Deviations from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    /// `‖ρ - ρ†‖_F`.
    pub hermiticity_error: f64,
    /// `|tr ρ - 1|`.
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.hermiticity_error <= tol && self.trace_error <= tol && self.min_eigenvalue >= -1e-9
    }
}

impl MixedState {
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            rho[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self { n_qubits, rho }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.rho[row * self.dim() + col]
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim(), self.dim(), &self.rho)
    }

    pub fn from_matrix(m: &DMatrix<Complex64>) -> Self {
        let dim = m.nrows();
        assert!(
            dim.is_power_of_two() && m.ncols() == dim,
            "square power-of-two matrix"
        );
        let rho = (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect();
        Self {
            n_qubits: dim.trailing_zeros() as usize,
            rho,
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|i| self.rho[i * dim + i].re).collect()
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|i| self.rho[i * dim + i]).sum()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        // ρ Hermitian, so tr ρ² = Σ |ρ_ij|²
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        let m = self.to_matrix();
        let herm = (&m - m.adjoint()).norm();
        let trace_error = (self.trace() - Complex64::new(1.0, 0.0)).norm();
        let sym = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eigenvalue = sym
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        StateDiagnostics {
            hermiticity_error: herm,
            trace_error,
            min_eigenvalue,
        }
    }

    /// `ρ -> U ρ U†` for one block.
    fn apply_block(&mut self, block: &RBlock) {
        let dim = self.dim();
        // U on the row index
        let ((ci, si), (co, so)) = block.rotation_coefficients();
        let lo = 1usize << block.bond;
        let hi = lo << 1;
        let mut upper = 0;
        while upper < dim {
            for base in upper..upper + lo {
                let rows = [base, base | lo, base | hi, base | lo | hi];
                mix_rows(&mut self.rho, dim, rows[0], rows[3], co, so);
                mix_rows(&mut self.rho, dim, rows[1], rows[2], ci, si);
            }
            upper += hi << 1;
        }
        // conj(U) on the column index, which is the block with negated angles
        let conj = RBlock::new(block.bond, -block.theta_x, -block.theta_y);
        for row in self.rho.chunks_exact_mut(dim) {
            apply_block_in_place(row, &conj);
        }
    }

    /// Two-qubit depolarizing channel on `(bond, bond + 1)`:
    /// `ρ -> (1-p) ρ + p tr_pair(ρ) ⊗ I/4`.
    fn depolarize_pair(&mut self, bond: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let dim = self.dim();
        let lo = 1usize << bond;
        let hi = lo << 1;
        let offsets = [0, lo, hi, lo | hi];
        let keep = 1.0 - p;
        let bases: Vec<usize> = (0..dim).filter(|i| i & (lo | hi) == 0).collect();
        for &rb in &bases {
            for &cb in &bases {
                let tr: Complex64 = offsets
                    .iter()
                    .map(|&o| self.rho[(rb | o) * dim + (cb | o)])
                    .sum();
                for &ro in &offsets {
                    let row = (rb | ro) * dim;
                    for &co in &offsets {
                        self.rho[row + (cb | co)] *= keep;
                    }
                    self.rho[row + (cb | ro)] += tr * (p / 4.0);
                }
            }
        }
    }

    /// Single-qubit depolarizing channel on `qubit`.
    fn depolarize_qubit(&mut self, qubit: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let dim = self.dim();
        let bit = 1usize << qubit;
        let keep = 1.0 - p;
        for r in (0..dim).filter(|i| i & bit == 0) {
            for c in (0..dim).filter(|i| i & bit == 0) {
                let (i00, i01, i10, i11) = (
                    r * dim + c,
                    r * dim + (c | bit),
                    (r | bit) * dim + c,
                    (r | bit) * dim + (c | bit),
                );
                let tr = self.rho[i00] + self.rho[i11];
                self.rho[i00] = self.rho[i00] * keep + tr * (p / 2.0);
                self.rho[i11] = self.rho[i11] * keep + tr * (p / 2.0);
                self.rho[i01] *= keep;
                self.rho[i10] *= keep;
            }
        }
    }
}

/// Rotates rows `a` and `b` by `cos·I + i sin·σx`.
#[inline]
fn mix_rows(rho: &mut [Complex64], dim: usize, a: usize, b: usize, c: f64, s: f64) {
    let (first, second) = rho.split_at_mut(b * dim);
    let ra = &mut first[a * dim..a * dim + dim];
    let rb = &mut second[..dim];
    for (x, y) in ra.iter_mut().zip(rb.iter_mut()) {
        let (u, v) = (*x, *y);
        *x = Complex64::new(c * u.re - s * v.im, c * u.im + s * v.re);
        *y = Complex64::new(c * v.re - s * u.im, c * v.im + s * u.re);
    }
}

/// Runs `c` on `|s><s|` under the noise model with every rate scaled by
/// `lambda`: each block is followed by two-qubit depolarizing noise and each
/// layer by single-qubit idle noise on every qubit.
pub fn apply_circuit_noisy(
    c: &Circuit,
    s: &PureState,
    nm: &NoiseModel,
    lambda: f64,
) -> Result<MixedState, SimError> {
    if c.n_qubits() > MAX_NOISY_QUBITS {
        return Err(SimError::TooManyQubits {
            n_qubits: c.n_qubits(),
            limit: MAX_NOISY_QUBITS,
        });
    }
    if c.n_qubits() != s.n_qubits {
        return Err(SimError::DimensionMismatch {
            circuit: c.n_qubits(),
            state: s.n_qubits,
        });
    }
    if !lambda.is_finite() || lambda < 1.0 {
        return Err(SimError::InvalidScale(lambda));
    }
    nm.validate()?;
    let gate_p = nm.gate_rate(lambda);
    let idle_p = nm.idle_rate(lambda);
    let mut rho = s.to_density();
    for layer in c.layered() {
        for b in layer {
            rho.apply_block(b);
            rho.depolarize_pair(b.bond, gate_p);
        }
        if idle_p > 0.0 {
            for q in 0..c.n_qubits() {
                rho.depolarize_qubit(q, idle_p);
            }
        }
    }
    Ok(rho)
}
