// Copyright 2026 The ybe-mitigate Authors
// SPDX-License-Identifier: Apache-2.0

mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use common::{block_oracle, c, hamiltonian_oracle, max_abs_diff, CMat};
use ybe_mitigate::lattice::{
    block_unitary, build_trotter_circuit, canonical_angle, circuit_unitary, cnot_count, Circuit,
    RBlock, TrotterSpec,
};

#[test]
fn block_matches_matrix_exponential() {
    for (tx, ty) in [(0.3, -0.1), (-1.2, 0.7), (2.0, 2.0), (0.0, 0.9)] {
        let b = RBlock::new(0, tx, ty);
        let local = block_unitary(&b);
        let dense = CMat::from_fn(4, 4, |i, j| local[(i, j)]);
        assert!(max_abs_diff(&dense, &block_oracle(2, 0, tx, ty)) < 1e-12);
    }
}

#[test]
fn circuit_unitary_is_ordered_product() {
    let blocks = vec![
        RBlock::new(0, 0.3, 0.1),
        RBlock::new(2, -0.4, 0.5),
        RBlock::new(1, 0.7, -0.2),
        RBlock::new(0, 0.2, 0.2),
    ];
    let c4 = Circuit::new(4, blocks.clone()).unwrap();
    let mut want = CMat::identity(16, 16);
    for b in &blocks {
        want = block_oracle(4, b.bond, b.theta_x, b.theta_y) * want;
    }
    assert!(max_abs_diff(&circuit_unitary(&c4).unwrap(), &want) < 1e-12);
}

#[test]
fn two_spin_trotter_is_exact() {
    // XX and YY on one bond commute, so one step equals the propagator.
    let spec = TrotterSpec::new(2, -0.8, 0.2, 0.37, 5);
    let u = circuit_unitary(&build_trotter_circuit(&spec).unwrap()).unwrap();
    let want = (hamiltonian_oracle(2, -0.8, 0.2) * c(0.0, -0.37 * 5.0)).exp();
    assert!(max_abs_diff(&u, &want) < 1e-12);
}

#[test]
fn trotter_error_shrinks_with_step() {
    let h = hamiltonian_oracle(4, -0.8, 0.2);
    let exact = (h * c(0.0, -1.0)).exp();
    let err = |steps: usize| {
        let spec = TrotterSpec::new(4, -0.8, 0.2, 1.0 / steps as f64, steps);
        let u = circuit_unitary(&build_trotter_circuit(&spec).unwrap()).unwrap();
        (u - &exact).norm()
    };
    let (e10, e20, e40) = (err(10), err(20), err(40));
    // operator error is first order in dt
    assert!((e10 / e20 - 2.0).abs() < 0.2, "{e10} {e20}");
    assert!((e20 / e40 - 2.0).abs() < 0.2, "{e20} {e40}");
}

#[test]
fn step_layout_and_costs() {
    let c = build_trotter_circuit(&TrotterSpec::new(5, -0.8, 0.2, 0.1, 3)).unwrap();
    assert_eq!(c.len(), 12);
    assert_eq!(cnot_count(&c), 24);
    assert_eq!(c.depth(), 6);
    let bonds: Vec<usize> = c.blocks()[..4].iter().map(|b| b.bond).collect();
    assert_eq!(bonds, vec![0, 2, 1, 3]);
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(build_trotter_circuit(&TrotterSpec::new(1, -0.8, 0.2, 0.1, 1)).is_err());
    assert!(build_trotter_circuit(&TrotterSpec::new(3, -0.8, 0.2, f64::NAN, 1)).is_err());
    assert!(Circuit::new(3, vec![RBlock::new(2, 0.1, 0.1)]).is_err());
}

fn arb_circuit() -> impl Strategy<Value = Circuit> {
    (3usize..=5).prop_flat_map(|n| {
        prop::collection::vec((0..n - 1, -3.0f64..3.0, -3.0f64..3.0), 0..12).prop_map(move |bs| {
            Circuit::new(
                n,
                bs.into_iter()
                    .map(|(b, x, y)| RBlock::new(b, x, y))
                    .collect(),
            )
            .unwrap()
        })
    })
}

proptest! {
    #[test]
    fn circuits_are_unitary(c in arb_circuit()) {
        let u = circuit_unitary(&c).unwrap();
        let dim = u.nrows();
        prop_assert!(max_abs_diff(&(u.adjoint() * &u), &CMat::identity(dim, dim)) < 1e-12);
    }

    #[test]
    fn inverse_undoes_circuit(c in arb_circuit()) {
        let u = circuit_unitary(&c.then(&c.inverse())).unwrap();
        let dim = u.nrows();
        prop_assert!(max_abs_diff(&u, &CMat::identity(dim, dim)) < 1e-11);
    }

    #[test]
    fn layers_never_share_a_qubit(c in arb_circuit()) {
        let mut seen = 0;
        for layer in c.layered() {
            for (i, a) in layer.iter().enumerate() {
                for b in &layer[i + 1..] {
                    prop_assert!(!a.overlaps(b));
                }
            }
            seen += layer.len();
        }
        prop_assert_eq!(seen, c.len());
        prop_assert!(c.depth() <= c.len());
    }

    #[test]
    fn canonical_angle_wraps(theta in -100.0f64..100.0) {
        let w = canonical_angle(theta);
        prop_assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        let k = (theta - w) / (2.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(k, k.round(), epsilon = 1e-9);
    }
}
