// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

//! State-vector and density-matrix execution of XY circuits, shot sampling,
//! observables, and the exact-evolution oracle.

mod exact;
mod measure;
mod state;

pub use exact::{exact_evolution_oracle, hamiltonian_matrix, MAX_EXACT_QUBITS};
pub use measure::{
    measure_counts, measure_counts_with_rng, staggered_magnetization, CountsTable, MeasureSource,
    Observable, ZExpectations,
};
pub use state::{
    apply_circuit_noisy, apply_circuit_pure, neel_state, MixedState, PureState, StateDiagnostics,
    MAX_NOISY_QUBITS,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("need at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("{n_qubits} qubits exceeds the simulator limit of {limit}")]
    TooManyQubits { n_qubits: usize, limit: usize },
    #[error("dimension mismatch: circuit has {circuit} qubits, state has {state}")]
    DimensionMismatch { circuit: usize, state: usize },
    #[error("noise scale must be >= 1, got {0}")]
    InvalidScale(f64),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Depolarizing stand-in for device noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Two-qubit depolarizing probability after each block.
    pub p2: f64,
    /// Single-qubit depolarizing probability per idle-wait unit.
    pub p1: f64,
    /// Symmetric per-bit readout flip probability.
    pub readout_flip: f64,
    /// Idle-wait units every qubit sits through after each layer.
    pub wait_units_per_layer: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p2: 0.01,
            p1: 0.001,
            readout_flip: 0.02,
            wait_units_per_layer: 1.0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            p2: 0.0,
            p1: 0.0,
            readout_flip: 0.0,
            wait_units_per_layer: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |name: &str, v: f64, hi: f64| {
            if (0.0..=hi).contains(&v) {
                Ok(())
            } else {
                Err(SimError::InvalidNoise(format!(
                    "{name} = {v} outside [0, {hi}]"
                )))
            }
        };
        prob("p2", self.p2, 1.0)?;
        prob("p1", self.p1, 1.0)?;
        prob("readout_flip", self.readout_flip, 0.5)?;
        if !(self.wait_units_per_layer >= 0.0 && self.wait_units_per_layer.is_finite()) {
            return Err(SimError::InvalidNoise(format!(
                "wait_units_per_layer = {} must be finite and >= 0",
                self.wait_units_per_layer
            )));
        }
        Ok(())
    }

    /// Effective two-qubit rate at noise scale `lambda`.
    pub fn gate_rate(&self, lambda: f64) -> f64 {
        (lambda * self.p2).min(1.0)
    }

    /// Effective per-layer idle rate at noise scale `lambda`.
    pub fn idle_rate(&self, lambda: f64) -> f64 {
        (lambda * self.p1 * self.wait_units_per_layer).min(1.0)
    }
}
