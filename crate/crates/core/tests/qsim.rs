mod support;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use qphase::qsim::*;
use qphase::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::oracles;

fn amp_distance(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn apply_gate_examples() {
    let mut s = StateVector::zero(1).unwrap();
    apply_gate(&mut s, &GateOp::ry(0, Angle::Fixed(PI)), &[]).unwrap();
    assert!(s.amplitudes()[0].norm() < 1e-15);
    assert!((s.amplitudes()[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);

    let mut s = StateVector::basis(2, 0b10).unwrap();
    apply_gate(&mut s, &GateOp::cnot(0, 1), &[]).unwrap();
    assert_eq!(s, StateVector::basis(2, 0b11).unwrap());

    let plus = StateVector::from_real(1, &[1.0, 1.0]).unwrap();
    for theta in [0.3, -1.7, 2.9] {
        let mut s = plus.clone();
        apply_gate(&mut s, &GateOp::rz(0, Angle::Param(0)), &[theta]).unwrap();
        let p = s.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }
}

#[test]
fn apply_gate_errors() {
    let mut s = StateVector::zero(2).unwrap();
    assert!(matches!(
        apply_gate(&mut s, &GateOp::ry(2, Angle::Fixed(0.1)), &[]),
        Err(Error::Structural(_))
    ));
    assert!(matches!(
        apply_gate(&mut s, &GateOp::ry(0, Angle::Param(3)), &[0.1]),
        Err(Error::Structural(_))
    ));
}

#[test]
fn expectation_examples() {
    let z0: PauliSum = [PauliString::new(1.0, [(0, Pauli::Z)]).unwrap()].into_iter().collect();
    assert_eq!(expectation(&StateVector::zero(1).unwrap(), &z0).unwrap(), 1.0);

    let xx: PauliSum = [PauliString::new(1.0, [(0, Pauli::X), (1, Pauli::X)]).unwrap()]
        .into_iter()
        .collect();
    assert_eq!(expectation(&StateVector::basis(2, 0b11).unwrap(), &xx).unwrap(), 0.0);
    let minus_bell = StateVector::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
    assert!((expectation(&minus_bell, &xx).unwrap() + 1.0).abs() < 1e-15);

    let complex: PauliSum = [PauliString::with_complex(Complex64::new(0.0, 1.0), [(0, Pauli::Z)]).unwrap()]
        .into_iter()
        .collect();
    assert!(matches!(
        expectation(&StateVector::zero(1).unwrap(), &complex),
        Err(Error::Validation(_))
    ));
}

#[test]
fn basis_probability_examples() {
    let s = StateVector::basis(2, 0b01).unwrap();
    assert_eq!(s.basis_probabilities(&[0, 1]).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
    let bell = StateVector::from_real(2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
    let p0 = bell.basis_probabilities(&[0]).unwrap();
    assert!((p0[0] - 0.5).abs() < 1e-15 && (p0[1] - 0.5).abs() < 1e-15);
    let p01 = bell.basis_probabilities(&[0, 1]).unwrap();
    for (got, want) in p01.iter().zip([0.5, 0.0, 0.0, 0.5]) {
        assert!((got - want).abs() < 1e-15);
    }
    assert!(matches!(bell.basis_probabilities(&[1, 1]), Err(Error::Validation(_))));
}

#[test]
fn gradient_examples() {
    let mut c = Circuit::new(1);
    c.push(GateOp::ry(0, Angle::Param(0))).unwrap();
    let z: PauliSum = [PauliString::new(1.0, [(0, Pauli::Z)]).unwrap()].into_iter().collect();
    assert!(gradient(&c, &[0.0], Functional::Energy(&z)).unwrap()[0].abs() < 1e-15);
    assert!((gradient(&c, &[PI / 2.0], Functional::Energy(&z)).unwrap()[0] + 1.0).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = oracles::random_circuit(&mut rng, 3, 12);
    let params: Vec<f64> = (0..c.n_params()).map(|k| 0.3 * k as f64).collect();
    let empty = PauliSum::default();
    assert!(gradient(&c, &params, Functional::Energy(&empty)).unwrap().iter().all(|g| *g == 0.0));
}

#[test]
fn fidelity_examples() {
    let zero = StateVector::zero(1).unwrap();
    assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(fidelity(&zero, &StateVector::basis(1, 1).unwrap()).unwrap(), 0.0);
    let mut half = zero.clone();
    apply_gate(&mut half, &GateOp::ry(0, Angle::Fixed(PI / 2.0)), &[]).unwrap();
    assert!((fidelity(&zero, &half).unwrap() - 0.5).abs() < 1e-15);
    assert!(matches!(fidelity(&zero, &StateVector::zero(2).unwrap()), Err(Error::Structural(_))));
}

/// 50 random circuits, each checked on an energy functional and on a
/// probability functional, against central differences.
#[test]
fn adjoint_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = 1 + case % 5;
        let c = oracles::random_circuit(&mut rng, n.max(2), 8 + case % 25);
        let n = c.n_qubits();
        let params: Vec<f64> = (0..c.n_params()).map(|_| rand::Rng::random_range(&mut rng, -PI..PI)).collect();

        let obs = oracles::random_observable(&mut rng, n, 4);
        let adj = gradient(&c, &params, Functional::Energy(&obs)).unwrap();
        let fd = oracles::central_differences(&c, &params, None, |s| oracles::dense_expectation(s, &obs), 1e-5);
        worst = adj.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);

        let qubits: Vec<usize> = (0..n).filter(|q| q % 2 == case % 2).collect();
        let weights: Vec<f64> = (0..1usize << qubits.len()).map(|i| (i as f64 * 0.7).sin()).collect();
        let w = weights.clone();
        let loss = move |p: &[f64]| {
            let v = p.iter().zip(&w).map(|(a, b)| a * b + a * a).sum();
            let g = p.iter().zip(&w).map(|(a, b)| b + 2.0 * a).collect();
            (v, g)
        };
        let f = Functional::Probabilities { qubits: &qubits, loss: &loss };
        let adj = gradient(&c, &params, f).unwrap();
        let fd = oracles::central_differences(
            &c,
            &params,
            None,
            |s| {
                let p = s.basis_probabilities(&qubits).unwrap();
                p.iter().zip(&weights).map(|(a, b)| a * b + a * a).sum()
            },
            1e-5,
        );
        worst = adj.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    assert!(worst < 1e-6, "max |adjoint - fd| = {worst:e}");
}

#[test]
fn gradient_from_custom_initial_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let prep = oracles::random_circuit(&mut rng, 4, 20);
    let prep_params: Vec<f64> = (0..prep.n_params()).map(|k| 0.37 * k as f64).collect();
    let init = prep.run(&prep_params).unwrap();
    let c = oracles::random_circuit(&mut rng, 4, 15);
    let params: Vec<f64> = (0..c.n_params()).map(|k| 1.0 - 0.21 * k as f64).collect();
    let obs = oracles::random_observable(&mut rng, 4, 5);
    let (v, adj) = value_and_gradient(&c, &params, Some(&init), Functional::Energy(&obs)).unwrap();
    let fd = oracles::central_differences(&c, &params, Some(&init), |s| oracles::dense_expectation(s, &obs), 1e-5);
    for (a, b) in adj.iter().zip(&fd) {
        assert!((a - b).abs() < 1e-6);
    }
    let mut s = init.clone();
    c.apply(&mut s, &params).unwrap();
    assert!((v - oracles::dense_expectation(&s, &obs)).abs() < 1e-12);
}

#[test]
fn gate_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let prep = oracles::random_circuit(&mut rng, 3, 20);
    let params: Vec<f64> = (0..prep.n_params()).map(|k| 0.1 * k as f64).collect();
    let base = prep.run(&params).unwrap();
    for (a, b) in [(0.3, 1.1), (-2.0, 0.4), (PI, PI)] {
        let mut two = base.clone();
        apply_gate(&mut two, &GateOp::ry(1, Angle::Fixed(a)), &[]).unwrap();
        apply_gate(&mut two, &GateOp::ry(1, Angle::Fixed(b)), &[]).unwrap();
        let mut one = base.clone();
        apply_gate(&mut one, &GateOp::ry(1, Angle::Fixed(a + b)), &[]).unwrap();
        assert!(amp_distance(&one, &two) < 1e-12);
    }
    let mut twice = base.clone();
    apply_gate(&mut twice, &GateOp::cnot(2, 0), &[]).unwrap();
    apply_gate(&mut twice, &GateOp::cnot(2, 0), &[]).unwrap();
    assert!(amp_distance(&twice, &base) < 1e-15);
}

#[test]
fn dense_limit_is_enforced() {
    assert!(matches!(StateVector::zero(MAX_QUBITS + 1), Err(Error::Resource(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn circuits_preserve_norm(seed in any::<u64>(), n in 1usize..=8, depth in 1usize..=40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = oracles::random_circuit(&mut rng, n.max(2), depth);
        let params: Vec<f64> = (0..c.n_params()).map(|_| rand::Rng::random_range(&mut rng, -10.0..10.0)).collect();
        let s = c.run(&params).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn marginals_are_consistent(seed in any::<u64>(), n in 2usize..=6, subset_bits in any::<u8>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = oracles::random_circuit(&mut rng, n, 25);
        let params: Vec<f64> = (0..c.n_params()).map(|_| rand::Rng::random_range(&mut rng, -PI..PI)).collect();
        let s = c.run(&params).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let full = s.basis_probabilities(&all).unwrap();
        prop_assert!((full.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let subset: Vec<usize> = (0..n).filter(|q| subset_bits >> q & 1 == 1).collect();
        prop_assume!(!subset.is_empty());
        let mut by_hand = vec![0.0; 1 << subset.len()];
        for (i, p) in full.iter().enumerate() {
            let mut o = 0;
            for &q in &subset {
                o = (o << 1) | ((i >> (n - 1 - q)) & 1);
            }
            by_hand[o] += p;
        }
        let got = s.basis_probabilities(&subset).unwrap();
        for (a, b) in got.iter().zip(&by_hand) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
