// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! Circuit compression for XY Trotter circuits.
//!
//! Two rewrite rules are available:
//!
//! * **merge**: two blocks on the same bond fuse by adding angles, since XX
//!   and YY on one bond commute;
//! * **YBE move**: a triple on bonds `(b, b±1, b)` is rewritten to the mirrored
//!   pattern `(b±1, b, b±1)` with new angles, found numerically and certified
//!   by an 8x8 unitary check.
//!
//! The full compressor keeps a triangle of `N(N-1)/2` slots. The triangle for
//! `m` qubits is the triangle for `m-1` qubits followed by a descending
//! staircase over bonds `m-2, ..., 0`. A block appended on bond `b` slides
//! past the disjoint tail of the last staircase, meets the slots on bonds `b`
//! and `b-1`, and either merges or undergoes a YBE move. The move spits out a
//! block on bond `b-1` in front of the staircase, which is then absorbed
//! recursively into the smaller triangle. Empty slots stand for the identity
//! and are handled by exact special cases, so circuits that never fill the
//! triangle stay small.

use nalgebra::{DMatrix, DVector, SMatrix};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{
    block_unitary, circuit_unitary, Circuit, LatticeError, RBlock, DEFAULT_UNITARY_QUBIT_LIMIT,
};
use crate::lsq::{levenberg_marquardt, LmOptions};

type M8 = SMatrix<Complex64, 8, 8>;

/// Residual below which a YBE move counts as solved.
pub const YBE_RESIDUAL_TOL: f64 = 1e-9;
/// Equivalence tolerance used by the verification mode.
pub const EQUIVALENCE_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompressError {
    #[error("cannot merge blocks on different bonds ({0} and {1})")]
    BondMismatch(usize, usize),
    #[error("YBE move needs bonds (b, b±1, b); got ({0}, {1}, {2})")]
    NotAdjacent(usize, usize, usize),
    #[error(
        "YBE move did not converge: best residual {best_residual:e} after {attempts} attempts"
    )]
    NonConvergence { best_residual: f64, attempts: usize },
    #[error("YBE move failed while absorbing input block {block_index} at triangle level {level}: {source}")]
    Absorption {
        block_index: usize,
        level: usize,
        #[source]
        source: Box<CompressError>,
    },
    #[error("compressed circuit deviates from input by {0:e}")]
    VerificationFailed(f64),
    #[error("partial compression: {0}")]
    BadPrefix(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy)]
pub struct YbeSolverOptions {
    pub lm: LmOptions,
    pub residual_tol: f64,
    pub restarts: usize,
    pub restart_sigma: f64,
    pub seed: u64,
}

impl Default for YbeSolverOptions {
    fn default() -> Self {
        Self {
            lm: LmOptions::default(),
            residual_tol: YBE_RESIDUAL_TOL,
            restarts: 20,
            restart_sigma: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YbeMoveSolution {
    /// Blocks on bonds `(t2.bond, t1.bond, t2.bond)`, in temporal order.
    pub out_blocks: [RBlock; 3],
    /// Phase-aligned Frobenius distance between input and output products.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub input_blocks: usize,
    pub output_blocks: usize,
    pub ybe_moves_used: usize,
    pub merges_used: usize,
    pub max_residual: f64,
}

/// Fuses two blocks on the same bond.
pub fn merge_blocks(a: &RBlock, b: &RBlock) -> Result<RBlock, CompressError> {
    if a.bond != b.bond {
        return Err(CompressError::BondMismatch(a.bond, b.bond));
    }
    Ok(RBlock::new(a.bond, a.theta_x + b.theta_x, a.theta_y + b.theta_y).canonical())
}

/// `min_φ ‖a - e^{iφ} b‖_F`.
pub fn phase_aligned_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let overlap: Complex64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - phase * y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

// --- 8x8 algebra on three contiguous qubits -------------------------------

/// Embeds a 4x4 block on the lower (`upper = false`) or upper pair of a
/// three-qubit register.
fn embed(u4: &nalgebra::Matrix4<Complex64>, upper: bool) -> M8 {
    let mut u = M8::zeros();
    for a in 0..4 {
        for b in 0..4 {
            if upper {
                for d in 0..2 {
                    u[(d + 2 * a, d + 2 * b)] = u4[(a, b)];
                }
            } else {
                for c in 0..2 {
                    u[(a + 4 * c, b + 4 * c)] = u4[(a, b)];
                }
            }
        }
    }
    u
}

/// `i·XX` and `i·YY` generators in the local 4x4 basis.
fn generators() -> [nalgebra::Matrix4<Complex64>; 2] {
    let z = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let xx = nalgebra::Matrix4::new(z, z, z, i, z, z, i, z, z, i, z, z, i, z, z, z);
    let yy = nalgebra::Matrix4::new(z, z, z, -i, z, z, i, z, z, i, z, z, -i, z, z, z);
    [xx, yy]
}

fn triple_product(blocks: &[RBlock; 3], lo: usize) -> M8 {
    let e = |b: &RBlock| embed(&block_unitary(b), b.bond != lo);
    e(&blocks[2]) * e(&blocks[1]) * e(&blocks[0])
}

fn distance8(a: &M8, b: &M8) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    (a - b * phase).norm()
}

struct MoveProblem {
    target: M8,
    bonds: [usize; 3],
    lo: usize,
    gens: [nalgebra::Matrix4<Complex64>; 2],
}

impl MoveProblem {
    fn blocks(&self, p: &DVector<f64>) -> [RBlock; 3] {
        [0, 1, 2].map(|k| RBlock::new(self.bonds[k], p[2 * k], p[2 * k + 1]))
    }

    /// Residual `P_in - e^{iφ} P_out` (real and imaginary parts stacked) and
    /// its exact Jacobian, with `φ = arg tr(P_out† P_in)` re-optimized at
    /// every evaluation.
    fn eval(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let blocks = self.blocks(p);
        let us: Vec<M8> = blocks
            .iter()
            .map(|b| embed(&block_unitary(b), b.bond != self.lo))
            .collect();
        let out = us[2] * us[1] * us[0];
        let z = (out.adjoint() * self.target).trace();
        let phase = if z.norm() > 1e-300 {
            z / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };

        let mut partials: Vec<M8> = Vec::with_capacity(6);
        for k in 0..3 {
            for g in &self.gens {
                let dg = embed(g, blocks[k].bond != self.lo) * us[k];
                let d = match k {
                    0 => us[2] * us[1] * dg,
                    1 => us[2] * dg * us[0],
                    _ => dg * us[1] * us[0],
                };
                partials.push(d);
            }
        }

        let mut r = DVector::<f64>::zeros(128);
        let mut jac = DMatrix::<f64>::zeros(128, 6);
        for (idx, (t, o)) in self.target.iter().zip(out.iter()).enumerate() {
            let d = t - phase * o;
            r[2 * idx] = d.re;
            r[2 * idx + 1] = d.im;
        }
        for (col, dp) in partials.iter().enumerate() {
            // dφ = Im(tr(dP† P_in) / z)
            let dphi = if z.norm() > 1e-300 {
                ((dp.adjoint() * self.target).trace() / z).im
            } else {
                0.0
            };
            let i_dphi = Complex64::new(0.0, dphi);
            for (idx, (o, d)) in out.iter().zip(dp.iter()).enumerate() {
                let dd = -phase * (i_dphi * o + d);
                jac[(2 * idx, col)] = dd.re;
                jac[(2 * idx + 1, col)] = dd.im;
            }
        }
        (r, jac)
    }
}

/// Rewrites `t1, t2, t3` (bonds `b, b±1, b`, `t1` first in time) into three
/// blocks on `(t2.bond, t1.bond, t2.bond)` with the same 8x8 product up to a
/// global phase.
pub fn ybe_move(t1: &RBlock, t2: &RBlock, t3: &RBlock) -> Result<YbeMoveSolution, CompressError> {
    ybe_move_with(t1, t2, t3, &YbeSolverOptions::default())
}

pub fn ybe_move_with(
    t1: &RBlock,
    t2: &RBlock,
    t3: &RBlock,
    opts: &YbeSolverOptions,
) -> Result<YbeMoveSolution, CompressError> {
    if t1.bond != t3.bond || t1.bond.abs_diff(t2.bond) != 1 {
        return Err(CompressError::NotAdjacent(t1.bond, t2.bond, t3.bond));
    }
    let lo = t1.bond.min(t2.bond);
    let problem = MoveProblem {
        target: triple_product(&[*t1, *t2, *t3], lo),
        bonds: [t2.bond, t1.bond, t2.bond],
        lo,
        gens: generators(),
    };

    // first-order guess: the middle block carries the two outer inputs, the
    // outer blocks split the middle input
    let guess = DVector::from_vec(vec![
        0.5 * t2.theta_x,
        0.5 * t2.theta_y,
        t1.theta_x + t3.theta_x,
        t1.theta_y + t3.theta_y,
        0.5 * t2.theta_x,
        0.5 * t2.theta_y,
    ]);

    let normal = Normal::new(0.0, opts.restart_sigma).expect("positive sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut iterations = 0;
    for attempt in 0..=opts.restarts {
        let start = if attempt == 0 {
            guess.clone()
        } else {
            guess.map(|g| g + normal.sample(&mut rng))
        };
        let rep = levenberg_marquardt(start, |p| problem.eval(p), &opts.lm);
        iterations += rep.iterations;
        let residual = distance8(
            &problem.target,
            &triple_product(&problem.blocks(&rep.x), lo),
        );
        if best.as_ref().is_none_or(|(_, r)| residual < *r) {
            best = Some((rep.x, residual));
        }
        if residual < opts.residual_tol {
            break;
        }
    }
    let (x, residual) = best.expect("at least one attempt");
    if residual >= opts.residual_tol {
        return Err(CompressError::NonConvergence {
            best_residual: residual,
            attempts: opts.restarts + 1,
        });
    }
    Ok(YbeMoveSolution {
        out_blocks: problem.blocks(&x).map(RBlock::canonical),
        residual,
        iterations,
        converged: true,
    })
}

/// Verifies a move solution independently of the solver.
pub fn ybe_move_residual(inputs: &[RBlock; 3], outputs: &[RBlock; 3]) -> f64 {
    let lo = inputs[0].bond.min(inputs[1].bond);
    distance8(&triple_product(inputs, lo), &triple_product(outputs, lo))
}

// --- compressor ----------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
pub struct CompressOptions {
    pub solver: YbeSolverOptions,
    /// Check unitary equivalence with the input (only for widths up to the
    /// dense-unitary limit).
    pub verify: bool,
}

/// Incremental full compressor. Blocks are absorbed in temporal order.
#[derive(Debug, Clone)]
pub struct TriangleCompressor {
    n_qubits: usize,
    /// `stairs[m - 2][bond]` for the staircase closing the `m`-qubit triangle.
    stairs: Vec<Vec<Option<RBlock>>>,
    opts: YbeSolverOptions,
    report: CompressionReport,
}

impl TriangleCompressor {
    pub fn new(n_qubits: usize, opts: YbeSolverOptions) -> Self {
        assert!(n_qubits >= 2, "need at least two qubits");
        let stairs = (2..=n_qubits).map(|m| vec![None; m - 1]).collect();
        Self {
            n_qubits,
            stairs,
            opts,
            report: CompressionReport::default(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn report(&self) -> CompressionReport {
        CompressionReport {
            output_blocks: self.occupied(),
            ..self.report
        }
    }

    fn occupied(&self) -> usize {
        self.stairs.iter().flatten().filter(|s| s.is_some()).count()
    }

    pub fn absorb_circuit(&mut self, c: &Circuit) -> Result<(), CompressError> {
        assert_eq!(c.n_qubits(), self.n_qubits, "width mismatch");
        for (i, b) in c.blocks().iter().enumerate() {
            self.absorb(*b).map_err(|e| match e {
                CompressError::Absorption { level, source, .. } => CompressError::Absorption {
                    block_index: i,
                    level,
                    source,
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn absorb(&mut self, block: RBlock) -> Result<(), CompressError> {
        if block.bond + 1 >= self.n_qubits {
            return Err(LatticeError::BondOutOfRange {
                bond: block.bond,
                n_qubits: self.n_qubits,
            }
            .into());
        }
        self.report.input_blocks += 1;
        self.absorb_at(block, self.n_qubits)
    }

    fn absorb_at(&mut self, block: RBlock, level: usize) -> Result<(), CompressError> {
        let b = block.bond;
        debug_assert!(b + 2 <= level);
        let idx = level - 2;
        if b == 0 {
            self.merge_into(idx, 0, block);
            return Ok(());
        }
        match (self.stairs[idx][b], self.stairs[idx][b - 1]) {
            (_, None) => {
                self.merge_into(idx, b, block);
                Ok(())
            }
            (None, Some(lower)) => {
                self.stairs[idx][b - 1] = None;
                self.stairs[idx][b] = Some(block);
                self.absorb_at(lower, level - 1)
            }
            (Some(upper), Some(lower)) => {
                let mut opts = self.opts;
                opts.seed = self.opts.seed ^ (self.report.ybe_moves_used as u64).rotate_left(17);
                let sol = ybe_move_with(&upper, &lower, &block, &opts).map_err(|e| {
                    CompressError::Absorption {
                        block_index: self.report.input_blocks - 1,
                        level,
                        source: Box::new(e),
                    }
                })?;
                self.report.ybe_moves_used += 1;
                self.report.max_residual = self.report.max_residual.max(sol.residual);
                let [front, middle, back] = sol.out_blocks;
                self.stairs[idx][b] = Some(middle);
                self.stairs[idx][b - 1] = Some(back);
                self.absorb_at(front, level - 1)
            }
        }
    }

    fn merge_into(&mut self, idx: usize, bond: usize, block: RBlock) {
        let slot = &mut self.stairs[idx][bond];
        *slot = Some(match slot {
            Some(existing) => {
                self.report.merges_used += 1;
                merge_blocks(existing, &block).expect("same bond")
            }
            None => block,
        });
    }

    /// Current compressed circuit. Slots holding exact identities are dropped.
    pub fn circuit(&self) -> Circuit {
        let blocks = self
            .stairs
            .iter()
            .flat_map(|stair| stair.iter().rev())
            .filter_map(|s| *s)
            .filter(|b| !b.is_identity())
            .collect();
        Circuit::new(self.n_qubits, blocks).expect("bonds in range")
    }
}

/// Maximum block count of a fully compressed `n`-qubit circuit.
pub fn canonical_size(n_qubits: usize) -> usize {
    n_qubits * (n_qubits - 1) / 2
}

pub fn full_compress(c: &Circuit) -> Result<(Circuit, CompressionReport), CompressError> {
    full_compress_with(c, &CompressOptions::default())
}

pub fn full_compress_with(
    c: &Circuit,
    opts: &CompressOptions,
) -> Result<(Circuit, CompressionReport), CompressError> {
    if c.len() <= canonical_size(c.n_qubits()) {
        let report = CompressionReport {
            input_blocks: c.len(),
            output_blocks: c.len(),
            ..Default::default()
        };
        return Ok((c.clone(), report));
    }
    let mut tc = TriangleCompressor::new(c.n_qubits(), opts.solver);
    tc.absorb_circuit(c)?;
    let out = tc.circuit();
    let mut report = tc.report();
    report.output_blocks = out.len();
    if opts.verify {
        verify_equivalence(c, &out)?;
    }
    Ok((out, report))
}

/// Appends `tail` to `prefix`, fusing each new block into the latest
/// same-bond block it can reach by commuting past disjoint blocks. Returns the
/// circuit and the number of merges.
pub fn merge_append(prefix: &Circuit, tail: &[RBlock]) -> Result<(Circuit, usize), CompressError> {
    let mut blocks = prefix.blocks().to_vec();
    let mut merges = 0;
    for nb in tail {
        let mut target = None;
        for (i, existing) in blocks.iter().enumerate().rev() {
            if existing.bond == nb.bond {
                target = Some(i);
                break;
            }
            if existing.overlaps(nb) {
                break;
            }
        }
        match target {
            Some(i) => {
                blocks[i] = merge_blocks(&blocks[i], nb)?;
                merges += 1;
            }
            None => blocks.push(*nb),
        }
    }
    Ok((Circuit::new(prefix.n_qubits(), blocks)?, merges))
}

/// Fully compresses the first `compressed_steps` Trotter steps of `c` and
/// appends the remaining steps with merges only. `c` must be a Trotter
/// circuit, i.e. `N-1` blocks per step.
pub fn partial_compress(
    c: &Circuit,
    compressed_steps: usize,
) -> Result<(Circuit, CompressionReport), CompressError> {
    partial_compress_with(c, compressed_steps, &CompressOptions::default())
}

pub fn partial_compress_with(
    c: &Circuit,
    compressed_steps: usize,
    opts: &CompressOptions,
) -> Result<(Circuit, CompressionReport), CompressError> {
    let per_step = c.n_qubits() - 1;
    if !c.len().is_multiple_of(per_step) {
        return Err(CompressError::BadPrefix(format!(
            "{} blocks is not a whole number of {}-block Trotter steps",
            c.len(),
            per_step
        )));
    }
    let n_steps = c.len() / per_step;
    if compressed_steps > n_steps {
        return Err(CompressError::BadPrefix(format!(
            "compressed_steps {compressed_steps} exceeds {n_steps} steps"
        )));
    }
    let split = compressed_steps * per_step;
    let prefix = Circuit::new(c.n_qubits(), c.blocks()[..split].to_vec())?;
    let (head, mut report) = full_compress_with(
        &prefix,
        &CompressOptions {
            verify: false,
            ..*opts
        },
    )?;
    let (out, merges) = merge_append(&head, &c.blocks()[split..])?;
    report.input_blocks = c.len();
    report.output_blocks = out.len();
    report.merges_used += merges;
    if opts.verify {
        verify_equivalence(c, &out)?;
    }
    Ok((out, report))
}

fn verify_equivalence(a: &Circuit, b: &Circuit) -> Result<(), CompressError> {
    if a.n_qubits() > DEFAULT_UNITARY_QUBIT_LIMIT {
        return Ok(());
    }
    let d = phase_aligned_distance(&circuit_unitary(a)?, &circuit_unitary(b)?);
    if d < EQUIVALENCE_TOL {
        Ok(())
    } else {
        Err(CompressError::VerificationFailed(d))
    }
}
