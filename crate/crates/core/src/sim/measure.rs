// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MixedState, NoiseModel, PureState};

/// Anything that yields per-qubit `<σ_z>` values (`σ_z|0> = +|0>`).
pub trait ZExpectations {
    fn n_qubits(&self) -> usize;
    fn z_expectations(&self) -> Vec<f64>;
}

fn z_from_probabilities(n_qubits: usize, probs: &[f64]) -> Vec<f64> {
    (0..n_qubits)
        .map(|q| {
            probs
                .iter()
                .enumerate()
                .map(|(i, p)| if i >> q & 1 == 0 { *p } else { -*p })
                .sum()
        })
        .collect()
}

impl ZExpectations for PureState {
    fn n_qubits(&self) -> usize {
        PureState::n_qubits(self)
    }
    fn z_expectations(&self) -> Vec<f64> {
        z_from_probabilities(PureState::n_qubits(self), &self.probabilities())
    }
}

impl ZExpectations for MixedState {
    fn n_qubits(&self) -> usize {
        MixedState::n_qubits(self)
    }
    fn z_expectations(&self) -> Vec<f64> {
        z_from_probabilities(MixedState::n_qubits(self), &self.probabilities())
    }
}

/// Measured bitstring histogram. Keys are basis indices (bit `q` = qubit `q`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub n_qubits: usize,
    pub shots: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl CountsTable {
    /// Renders a key with qubit 0 as the leftmost character.
    pub fn bitstring(&self, key: u64) -> String {
        (0..self.n_qubits)
            .map(|q| if key >> q & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn get(&self, bitstring: &str) -> u64 {
        let key = bitstring
            .chars()
            .enumerate()
            .filter(|(_, ch)| *ch == '1')
            .map(|(q, _)| 1u64 << q)
            .sum();
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

impl ZExpectations for CountsTable {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    fn z_expectations(&self) -> Vec<f64> {
        let shots = self.shots as f64;
        (0..self.n_qubits)
            .map(|q| {
                self.counts
                    .iter()
                    .map(|(k, c)| {
                        if k >> q & 1 == 0 {
                            *c as f64
                        } else {
                            -(*c as f64)
                        }
                    })
                    .sum::<f64>()
                    / shots
            })
            .collect()
    }
}

/// Diagonal observable `Σ_i w_i σ_z,i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    StaggeredMagnetization,
    CustomDiagonal { weights: Vec<f64> },
}

impl Observable {
    pub fn weights(&self, n_qubits: usize) -> Vec<f64> {
        match self {
            Observable::StaggeredMagnetization => (0..n_qubits)
                .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } / n_qubits as f64)
                .collect(),
            Observable::CustomDiagonal { weights } => weights.clone(),
        }
    }

    pub fn expectation<S: ZExpectations + ?Sized>(&self, source: &S) -> f64 {
        let n = source.n_qubits();
        if let Observable::StaggeredMagnetization = self {
            let z = source.z_expectations();
            let alternating: f64 = z
                .iter()
                .enumerate()
                .map(|(i, v)| if i % 2 == 0 { *v } else { -*v })
                .sum();
            return alternating / n as f64;
        }
        let w = self.weights(n);
        assert_eq!(w.len(), n, "observable weights do not match register width");
        w.iter()
            .zip(source.z_expectations())
            .map(|(w, z)| w * z)
            .sum()
    }
}

/// `m_s = (1/N) Σ_i (-1)^i <σ_z,i>`.
pub fn staggered_magnetization<S: ZExpectations + ?Sized>(source: &S) -> f64 {
    Observable::StaggeredMagnetization.expectation(source)
}

pub fn measure_counts<S: MeasureSource + ?Sized>(
    state: &S,
    shots: u64,
    nm: &NoiseModel,
    seed: u64,
) -> CountsTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    measure_counts_with_rng(state, shots, nm, &mut rng)
}

/// States that expose a computational-basis distribution.
pub trait MeasureSource {
    fn n_qubits(&self) -> usize;
    fn distribution(&self) -> Vec<f64>;
}

impl MeasureSource for PureState {
    fn n_qubits(&self) -> usize {
        PureState::n_qubits(self)
    }
    fn distribution(&self) -> Vec<f64> {
        self.probabilities()
    }
}

impl MeasureSource for MixedState {
    fn n_qubits(&self) -> usize {
        MixedState::n_qubits(self)
    }
    fn distribution(&self) -> Vec<f64> {
        self.probabilities()
    }
}

/// Samples Z-basis shots, then flips every bit independently with
/// probability `nm.readout_flip`.
pub fn measure_counts_with_rng<S: MeasureSource + ?Sized, R: Rng + ?Sized>(
    state: &S,
    shots: u64,
    nm: &NoiseModel,
    rng: &mut R,
) -> CountsTable {
    assert!(shots > 0, "shots must be positive");
    let n = state.n_qubits();
    let mut cumulative = Vec::with_capacity(1 << n);
    let mut acc = 0.0;
    for p in state.distribution() {
        acc += p.max(0.0);
        cumulative.push(acc);
    }
    let total = acc;
    let flip = nm.readout_flip;
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        let mut idx = cumulative.partition_point(|&c| c <= u) as u64;
        idx = idx.min(cumulative.len() as u64 - 1);
        if flip > 0.0 {
            for q in 0..n {
                if rng.random::<f64>() < flip {
                    idx ^= 1 << q;
                }
            }
        }
        *counts.entry(idx).or_insert(0) += 1;
    }
    CountsTable {
        n_qubits: n,
        shots,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::neel_state;

    #[test]
    fn neel_and_flipped() {
        for n in 2..=7 {
            assert_eq!(staggered_magnetization(&neel_state(n).unwrap()), 1.0);
        }
        let flipped = PureState::basis(4, 0b0101);
        assert_eq!(staggered_magnetization(&flipped), -1.0);
        assert!(staggered_magnetization(&MixedState::maximally_mixed(4)).abs() < 1e-15);
    }

    #[test]
    fn basis_state_counts_deterministic() {
        let s = neel_state(3).unwrap();
        let t = measure_counts(&s, 1000, &NoiseModel::noiseless(), 3);
        assert_eq!(t.counts.len(), 1);
        assert_eq!(t.get("010"), 1000);
        assert_eq!(t.bitstring(0b010), "010");
        assert_eq!(staggered_magnetization(&t), 1.0);
        assert_eq!(t, measure_counts(&s, 1000, &NoiseModel::noiseless(), 3));
    }

    #[test]
    fn custom_weights() {
        let s = PureState::basis(3, 0b001);
        let obs = Observable::CustomDiagonal {
            weights: vec![1.0, 2.0, 0.5],
        };
        assert_eq!(obs.expectation(&s), -1.0 + 2.0 + 0.5);
    }
}
