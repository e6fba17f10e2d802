// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! XY two-qubit gate algebra and first-order Trotter circuits for the open
//! anisotropic XY chain
//!
//!   H = -Σ_i (J_x X_i X_{i+1} + J_y Y_i Y_{i+1}).
//!
//! Every gate is an [`RBlock`], `exp(i (θx XX + θy YY))` on a nearest-neighbour
//! bond. One Trotter step is an even-bond layer followed by an odd-bond layer,
//! each block carrying `θx = J_x dt`, `θy = J_y dt`, so the per-step product is
//! the Lie-Trotter splitting of `exp(-i H dt)`.
//!
//! Qubit ordering is little-endian throughout the crate: basis index bit `q`
//! is the state of qubit `q`, and qubit 0 is the leftmost spin.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default ceiling on the width accepted by [`circuit_unitary`].
pub const DEFAULT_UNITARY_QUBIT_LIMIT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("invalid trotter spec: field `{field}` {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error("block bond {bond} out of range for {n_qubits} qubits")]
    BondOutOfRange { bond: usize, n_qubits: usize },
    #[error("{n_qubits} qubits exceeds the dense-unitary limit of {limit}")]
    TooManyQubits { n_qubits: usize, limit: usize },
}

/// Parameters of the Trotterized XY evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrotterSpec {
    pub n_spins: usize,
    pub j_x: f64,
    pub j_y: f64,
    /// Always zero; kept so a spec round-trips the full Heisenberg form.
    #[serde(default)]
    pub j_z: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TrotterSpec {
    pub fn new(n_spins: usize, j_x: f64, j_y: f64, dt: f64, n_steps: usize) -> Self {
        Self {
            n_spins,
            j_x,
            j_y,
            j_z: 0.0,
            dt,
            n_steps,
        }
    }

    pub fn with_steps(self, n_steps: usize) -> Self {
        Self { n_steps, ..self }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let bad = |field, reason: &str| {
            Err(LatticeError::InvalidSpec {
                field,
                reason: reason.to_string(),
            })
        };
        if self.n_spins < 2 {
            return bad("n_spins", "must be at least 2");
        }
        if !self.j_x.is_finite() {
            return bad("j_x", "must be finite");
        }
        if !self.j_y.is_finite() {
            return bad("j_y", "must be finite");
        }
        if self.j_z != 0.0 {
            return bad("j_z", "must be 0 for the XY chain");
        }
        if !self.dt.is_finite() || (self.n_steps > 0 && self.dt <= 0.0) {
            return bad("dt", "must be positive and finite");
        }
        Ok(())
    }

    /// Total simulated time `n_steps * dt`.
    pub fn total_time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn canonical_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// `exp(i (θx XX + θy YY))` on qubits `(bond, bond + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RBlock {
    pub bond: usize,
    pub theta_x: f64,
    pub theta_y: f64,
}

impl RBlock {
    pub fn new(bond: usize, theta_x: f64, theta_y: f64) -> Self {
        Self {
            bond,
            theta_x,
            theta_y,
        }
    }

    pub fn identity(bond: usize) -> Self {
        Self::new(bond, 0.0, 0.0)
    }

    /// Same block with both angles wrapped into `(-π, π]`.
    pub fn canonical(self) -> Self {
        Self::new(
            self.bond,
            canonical_angle(self.theta_x),
            canonical_angle(self.theta_y),
        )
    }

    /// The inverse block (negated angles).
    pub fn inverse(self) -> Self {
        Self::new(self.bond, -self.theta_x, -self.theta_y).canonical()
    }

    pub fn is_identity(&self) -> bool {
        self.theta_x == 0.0 && self.theta_y == 0.0
    }

    /// Do the two blocks act on a common qubit?
    pub fn overlaps(&self, other: &RBlock) -> bool {
        self.bond.abs_diff(other.bond) <= 1
    }

    /// `(cos, sin)` of the rotation on span{|01>,|10>} (angle θx+θy) and on
    /// span{|00>,|11>} (angle θx-θy), in that order.
    pub fn rotation_coefficients(&self) -> ((f64, f64), (f64, f64)) {
        let inner = self.theta_x + self.theta_y;
        let outer = self.theta_x - self.theta_y;
        ((inner.cos(), inner.sin()), (outer.cos(), outer.sin()))
    }
}

/// Closed-form 4x4 matrix of a block. Local basis index is
/// `bit(bond) + 2 * bit(bond + 1)`.
pub fn block_unitary(b: &RBlock) -> Matrix4<Complex64> {
    let ((ci, si), (co, so)) = b.rotation_coefficients();
    let c = |x: f64| Complex64::new(x, 0.0);
    let is = |x: f64| Complex64::new(0.0, x);
    let z = Complex64::new(0.0, 0.0);
    Matrix4::new(
        c(co),
        z,
        z,
        is(so), //
        z,
        c(ci),
        is(si),
        z, //
        z,
        is(si),
        c(ci),
        z, //
        is(so),
        z,
        z,
        c(co),
    )
}

/// Applies a block in place to a state vector (or to every column of a
/// column-major matrix when called per column).
pub(crate) fn apply_block_in_place(amps: &mut [Complex64], block: &RBlock) {
    let ((ci, si), (co, so)) = block.rotation_coefficients();
    let lo = 1usize << block.bond;
    let hi = lo << 1;
    let dim = amps.len();
    let mut upper = 0;
    while upper < dim {
        for base in upper..upper + lo {
            let (i00, i01, i10, i11) = (base, base | lo, base | hi, base | lo | hi);
            let (a, d) = (amps[i00], amps[i11]);
            amps[i00] = a * co + Complex64::new(-d.im * so, d.re * so);
            amps[i11] = d * co + Complex64::new(-a.im * so, a.re * so);
            let (b, c) = (amps[i01], amps[i10]);
            amps[i01] = b * ci + Complex64::new(-c.im * si, c.re * si);
            amps[i10] = c * ci + Complex64::new(-b.im * si, b.re * si);
        }
        upper += hi << 1;
    }
}

/// An ordered list of blocks with a greedy (as-soon-as-possible) layer
/// partition. Blocks are kept sorted by layer; inside a layer no two blocks
/// share a qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    blocks: Vec<RBlock>,
    layers: Vec<usize>,
}

impl Circuit {
    pub fn empty(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            blocks: Vec::new(),
            layers: Vec::new(),
        }
    }

    /// Builds a circuit from blocks in temporal order and recomputes layers.
    pub fn new(n_qubits: usize, blocks: Vec<RBlock>) -> Result<Self, LatticeError> {
        for b in &blocks {
            if b.bond + 1 >= n_qubits {
                return Err(LatticeError::BondOutOfRange {
                    bond: b.bond,
                    n_qubits,
                });
            }
        }
        let mut frontier = vec![0usize; n_qubits];
        let mut tagged: Vec<(usize, usize, RBlock)> = blocks
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                let layer = frontier[b.bond].max(frontier[b.bond + 1]);
                frontier[b.bond] = layer + 1;
                frontier[b.bond + 1] = layer + 1;
                (layer, i, b)
            })
            .collect();
        tagged.sort_by_key(|&(layer, i, _)| (layer, i));
        let (layers, blocks) = tagged.into_iter().map(|(l, _, b)| (l, b)).unzip();
        Ok(Self {
            n_qubits,
            blocks,
            layers,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn blocks(&self) -> &[RBlock] {
        &self.blocks
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.layers.last().map_or(0, |l| l + 1)
    }

    /// Blocks grouped by layer, in layer order.
    pub fn layered(&self) -> impl Iterator<Item = &[RBlock]> + '_ {
        self.layers
            .chunk_by(|a, b| a == b)
            .scan(0usize, move |start, chunk| {
                let s = *start;
                *start += chunk.len();
                Some(&self.blocks[s..s + chunk.len()])
            })
    }

    /// The inverse circuit: reversed order, negated angles.
    pub fn inverse(&self) -> Circuit {
        let blocks = self.blocks.iter().rev().map(|b| b.inverse()).collect();
        Circuit::new(self.n_qubits, blocks).expect("bonds already validated")
    }

    /// Concatenation in time: `self` first, then `later`.
    pub fn then(&self, later: &Circuit) -> Circuit {
        assert_eq!(self.n_qubits, later.n_qubits, "width mismatch");
        let blocks = self.blocks.iter().chain(&later.blocks).copied().collect();
        Circuit::new(self.n_qubits, blocks).expect("bonds already validated")
    }
}

/// Blocks of a single Trotter step: even bonds, then odd bonds.
pub fn trotter_step_blocks(spec: &TrotterSpec) -> Vec<RBlock> {
    let theta_x = spec.j_x * spec.dt;
    let theta_y = spec.j_y * spec.dt;
    let n_bonds = spec.n_spins - 1;
    (0..n_bonds)
        .step_by(2)
        .chain((1..n_bonds).step_by(2))
        .map(|bond| RBlock::new(bond, theta_x, theta_y))
        .collect()
}

/// First-order Trotter circuit for `exp(-i H dt)^n_steps`.
pub fn build_trotter_circuit(spec: &TrotterSpec) -> Result<Circuit, LatticeError> {
    spec.validate()?;
    let step = trotter_step_blocks(spec);
    let blocks = (0..spec.n_steps)
        .flat_map(|_| step.iter().copied())
        .collect();
    Circuit::new(spec.n_spins, blocks)
}

/// CNOT-equivalent cost: two per XY block, single-qubit gates free.
pub fn cnot_count(c: &Circuit) -> usize {
    2 * c.len()
}

pub fn circuit_unitary(c: &Circuit) -> Result<DMatrix<Complex64>, LatticeError> {
    circuit_unitary_with_limit(c, DEFAULT_UNITARY_QUBIT_LIMIT)
}

/// Dense `2^N x 2^N` unitary; the first block in the list is the rightmost
/// factor.
pub fn circuit_unitary_with_limit(
    c: &Circuit,
    limit: usize,
) -> Result<DMatrix<Complex64>, LatticeError> {
    if c.n_qubits > limit {
        return Err(LatticeError::TooManyQubits {
            n_qubits: c.n_qubits,
            limit,
        });
    }
    let dim = 1usize << c.n_qubits;
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    // column-major storage: each column is a contiguous state vector
    for col in u.as_mut_slice().chunks_exact_mut(dim) {
        for b in c.blocks() {
            apply_block_in_place(col, b);
        }
    }
    Ok(u)
}
