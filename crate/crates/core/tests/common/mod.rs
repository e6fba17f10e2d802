// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense-matrix oracles built from Kronecker products, independent of the
//! in-place kernels under test.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli(k: usize) -> CMat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    match k {
        0 => CMat::identity(2, 2),
        1 => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMat::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        3 => CMat::from_row_slice(2, 2, &[o, z, z, c(-1.0, 0.0)]),
        _ => unreachable!(),
    }
}

/// Operator acting as `ops[q]` on qubit `q`. Qubit 0 is the least
/// significant bit, so it is the rightmost Kronecker factor.
pub fn embed(n: usize, ops: &[(usize, CMat)]) -> CMat {
    let mut out = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let f = ops
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| CMat::identity(2, 2));
        out = out.kronecker(&f);
    }
    out
}

pub fn pauli_pair(n: usize, bond: usize, k: usize) -> CMat {
    embed(n, &[(bond, pauli(k)), (bond + 1, pauli(k))])
}

/// `exp(i (θx XX + θy YY))` by matrix exponential.
pub fn block_oracle(n: usize, bond: usize, tx: f64, ty: f64) -> CMat {
    let g = pauli_pair(n, bond, 1) * c(tx, 0.0) + pauli_pair(n, bond, 2) * c(ty, 0.0);
    (g * c(0.0, 1.0)).exp()
}

pub fn hamiltonian_oracle(n: usize, jx: f64, jy: f64) -> CMat {
    let dim = 1 << n;
    let mut h = CMat::zeros(dim, dim);
    for b in 0..n - 1 {
        h -= pauli_pair(n, b, 1) * c(jx, 0.0) + pauli_pair(n, b, 2) * c(jy, 0.0);
    }
    h
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
