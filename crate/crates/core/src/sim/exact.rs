// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{staggered_magnetization, PureState, SimError};
use crate::lattice::TrotterSpec;
use crate::series::{TimeSeries, Variant};

/// Widest chain handled by the dense Hamiltonian and the exact oracle.
pub const MAX_EXACT_QUBITS: usize = 10;

fn check_width(n: usize) -> Result<(), SimError> {
    if n < 2 {
        return Err(SimError::TooFewQubits(n));
    }
    if n > MAX_EXACT_QUBITS {
        return Err(SimError::TooManyQubits {
            n_qubits: n,
            limit: MAX_EXACT_QUBITS,
        });
    }
    Ok(())
}

/// Nonzero entries `(row, col, value)` of the XY Hamiltonian. Every entry is
/// real: `XX` contributes `1` and `YY` contributes `+1` on antiparallel pairs
/// and `-1` on parallel pairs.
fn hamiltonian_entries(spec: &TrotterSpec) -> Vec<(usize, usize, f64)> {
    let n = spec.n_spins;
    let mut out = Vec::new();
    for x in 0..1usize << n {
        for bond in 0..n - 1 {
            let parallel = (x >> bond & 1) == (x >> (bond + 1) & 1);
            let yy = if parallel { -1.0 } else { 1.0 };
            let v = -(spec.j_x + spec.j_y * yy);
            if v != 0.0 {
                out.push((x ^ (0b11 << bond), x, v));
            }
        }
    }
    out
}

/// `H = -Σ_i (J_x X_i X_{i+1} + J_y Y_i Y_{i+1})`, open boundary.
pub fn hamiltonian_matrix(spec: &TrotterSpec) -> Result<DMatrix<Complex64>, SimError> {
    check_width(spec.n_spins)?;
    spec.validate()?;
    let dim = 1usize << spec.n_spins;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for (r, c, v) in hamiltonian_entries(spec) {
        h[(r, c)] += Complex64::new(v, 0.0);
    }
    Ok(h)
}

/// Eigendecomposition of one Z-parity sector of the (real symmetric) `H`.
struct Sector {
    basis: Vec<usize>,
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
}

fn parity_sectors(spec: &TrotterSpec) -> Vec<Sector> {
    let dim = 1usize << spec.n_spins;
    let entries = hamiltonian_entries(spec);
    (0..2u32)
        .map(|parity| {
            let basis: Vec<usize> = (0..dim).filter(|x| x.count_ones() % 2 == parity).collect();
            let mut pos = vec![usize::MAX; dim];
            for (k, &x) in basis.iter().enumerate() {
                pos[x] = k;
            }
            let mut h = DMatrix::<f64>::zeros(basis.len(), basis.len());
            for &(r, c, v) in &entries {
                if pos[c] != usize::MAX {
                    h[(pos[r], pos[c])] += v;
                }
            }
            Sector {
                basis,
                eig: SymmetricEigen::new(h),
            }
        })
        .collect()
}

/// `m_s(t)` of `exp(-i H t) s0` at each requested time, via eigendecomposition
/// of `H` within each conserved Z-parity sector.
pub fn exact_evolution_oracle(
    spec: &TrotterSpec,
    times: &[f64],
    s0: &PureState,
) -> Result<TimeSeries, SimError> {
    check_width(spec.n_spins)?;
    spec.validate()?;
    if s0.n_qubits() != spec.n_spins {
        return Err(SimError::DimensionMismatch {
            circuit: spec.n_spins,
            state: s0.n_qubits(),
        });
    }
    let dim = 1usize << spec.n_spins;
    let sectors: Vec<(Sector, DVector<Complex64>)> = parity_sectors(spec)
        .into_iter()
        .filter_map(|sector| {
            let local = DVector::from_iterator(
                sector.basis.len(),
                sector.basis.iter().map(|&x| s0.amplitudes()[x]),
            );
            if local.norm() == 0.0 {
                return None;
            }
            // coefficients in the eigenbasis
            let v = sector.eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
            let coeffs = v.transpose() * local;
            Some((sector, coeffs))
        })
        .collect();

    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        for (sector, coeffs) in &sectors {
            let phased = DVector::from_iterator(
                coeffs.len(),
                coeffs
                    .iter()
                    .zip(sector.eig.eigenvalues.iter())
                    .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t)),
            );
            let v = &sector.eig.eigenvectors;
            for (k, &x) in sector.basis.iter().enumerate() {
                amps[x] = v
                    .row(k)
                    .iter()
                    .zip(phased.iter())
                    .map(|(a, b)| b * *a)
                    .sum();
            }
        }
        let state = PureState::from_amplitudes(amps).expect("unitary evolution preserves norm");
        values.push(staggered_magnetization(&state));
    }
    Ok(TimeSeries::new(
        spec.n_spins,
        Variant::Exact,
        times.to_vec(),
        values,
    ))
}
