//! Reference implementations that share no kernels with the library.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qphase::qcnn::{QcnnArchitecture, Stage};
use qphase::qsim::{Circuit, StateVector};

type C = Complex64;
type Mat2 = [[C; 2]; 2];

const fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn ry(t: f64) -> Mat2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub fn rx(t: f64) -> Mat2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

/// Applies a 2x2 matrix to `qubit` (qubit 0 = most significant bit).
pub fn apply_1q(amps: &mut [C], n: usize, qubit: usize, m: &Mat2) {
    let bit = n - 1 - qubit;
    for i in 0..amps.len() {
        if (i >> bit) & 1 == 0 {
            let j = i | (1 << bit);
            let (a, b) = (amps[i], amps[j]);
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[j] = m[1][0] * a + m[1][1] * b;
        }
    }
}

pub fn apply_cx(amps: &mut [C], n: usize, control: usize, target: usize) {
    let (cb, tb) = (n - 1 - control, n - 1 - target);
    for i in 0..amps.len() {
        if (i >> cb) & 1 == 1 && (i >> tb) & 1 == 0 {
            amps.swap(i, i | (1 << tb));
        }
    }
}

/// Keeps only the amplitudes where `qubit` reads `value`.
pub fn project(amps: &[C], n: usize, qubit: usize, value: usize) -> Vec<C> {
    let bit = n - 1 - qubit;
    amps.iter()
        .enumerate()
        .map(|(i, &a)| if (i >> bit) & 1 == value { a } else { c(0.0, 0.0) })
        .collect()
}

/// Output distribution of the classifier computed by branching on every
/// mid-circuit measurement and weighting each branch by its Born
/// probability (carried in the unnormalised branch vector).
pub fn qcnn_branch_marginals(arch: &QcnnArchitecture, params: &[f64], input: &StateVector) -> [f64; 4] {
    stage_branch_marginals(&arch.stages(), arch.final_active, params, input)
}

/// [`qcnn_branch_marginals`] for an explicit stage list.
pub fn stage_branch_marginals(
    stages: &[Stage],
    final_active: [usize; 2],
    params: &[f64],
    input: &StateVector,
) -> [f64; 4] {
    let n = input.n_qubits();
    let mut branches: Vec<Vec<C>> = vec![input.amplitudes().to_vec()];
    for stage in stages.iter().cloned() {
        match stage {
            Stage::Rotations { qubits, params: ks } => {
                for b in &mut branches {
                    for (&q, &k) in qubits.iter().zip(&ks) {
                        apply_1q(b, n, q, &ry(params[k]));
                    }
                }
            }
            Stage::Conv { pairs, param, entangling } => {
                for b in &mut branches {
                    for &(x, y) in &pairs {
                        if entangling {
                            apply_cx(b, n, x, y);
                        }
                        apply_1q(b, n, x, &ry(params[param]));
                        apply_1q(b, n, y, &ry(params[param]));
                    }
                }
            }
            Stage::Pool(p) => {
                let mut next = Vec::with_capacity(2 * branches.len());
                for b in &branches {
                    for outcome in 0..2 {
                        let mut s = project(b, n, p.measured, outcome);
                        apply_1q(&mut s, n, p.kept, &rx(params[p.phi]));
                        let theta = if outcome == 1 { params[p.theta1] } else { params[p.theta0] };
                        apply_1q(&mut s, n, p.kept, &ry(theta));
                        next.push(s);
                    }
                }
                branches = next;
            }
            Stage::Fc { qubits: [a, b2], params: f } => {
                for b in &mut branches {
                    apply_cx(b, n, a, b2);
                    for (q, ks) in [(a, &f[..3]), (b2, &f[3..])] {
                        apply_1q(b, n, q, &ry(params[ks[0]]));
                        apply_1q(b, n, q, &rx(params[ks[1]]));
                        apply_1q(b, n, q, &ry(params[ks[2]]));
                    }
                }
            }
        }
    }
    let [f0, f1] = final_active;
    let mut out = [0.0; 4];
    for b in &branches {
        for (i, a) in b.iter().enumerate() {
            let o = ((i >> (n - 1 - f0)) & 1) * 2 + ((i >> (n - 1 - f1)) & 1);
            out[o] += a.norm_sqr();
        }
    }
    out
}

fn pauli_x() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

fn pauli_z() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// `⊗_q ops(q)` with identities elsewhere, qubit 0 leftmost.
fn kron_chain(n: usize, ops: &[(usize, DMatrix<f64>)]) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::identity(1, 1);
    for q in 0..n {
        let f = ops
            .iter()
            .find(|(site, _)| *site == q)
            .map(|(_, op)| op.clone())
            .unwrap_or_else(|| DMatrix::identity(2, 2));
        m = m.kronecker(&f);
    }
    m
}

/// `-Σ X_i X_{i+1} + κ Σ X_i X_{i+2} - h Σ Z_i` from explicit Kronecker
/// products.
pub fn kron_annni(n: usize, kappa: f64, h: f64) -> DMatrix<f64> {
    let dim = 1 << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n.saturating_sub(1) {
        m -= kron_chain(n, &[(i, pauli_x()), (i + 1, pauli_x())]);
    }
    for i in 0..n.saturating_sub(2) {
        m += kron_chain(n, &[(i, pauli_x()), (i + 2, pauli_x())]) * kappa;
    }
    for i in 0..n {
        m -= kron_chain(n, &[(i, pauli_z())]) * h;
    }
    m
}

pub fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Central finite differences of `f(circuit(params))`.
pub fn central_differences(
    circuit: &Circuit,
    params: &[f64],
    initial: Option<&StateVector>,
    f: impl Fn(&StateVector) -> f64,
    step: f64,
) -> Vec<f64> {
    let eval = |p: &[f64]| {
        let mut s = match initial {
            Some(s) => s.clone(),
            None => StateVector::zero(circuit.n_qubits()).unwrap(),
        };
        circuit.apply(&mut s, p).unwrap();
        f(&s)
    };
    (0..circuit.n_params())
        .map(|k| {
            let mut a = params.to_vec();
            let mut b = params.to_vec();
            a[k] += step;
            b[k] -= step;
            (eval(&a) - eval(&b)) / (2.0 * step)
        })
        .collect()
}

/// Random circuit over every gate kind. Parameters are sometimes reused and
/// some rotations carry fixed angles.
pub fn random_circuit(rng: &mut impl rand::Rng, n: usize, n_gates: usize) -> Circuit {
    use qphase::qsim::{Angle, GateOp};
    let mut circuit = Circuit::new(n);
    let mut n_params = 0usize;
    for _ in 0..n_gates {
        let angle = if rng.random_bool(0.15) {
            Angle::Fixed(rng.random_range(-3.0..3.0))
        } else if n_params > 0 && rng.random_bool(0.2) {
            Angle::Param(rng.random_range(0..n_params))
        } else {
            n_params += 1;
            Angle::Param(n_params - 1)
        };
        let t = rng.random_range(0..n);
        let mut other = rng.random_range(0..n - 1);
        if other >= t {
            other += 1;
        }
        let op = match rng.random_range(0..7) {
            0 => GateOp::rx(t, angle),
            1 => GateOp::ry(t, angle),
            2 => GateOp::rz(t, angle),
            3 => GateOp::cnot(other, t),
            4 => GateOp::cz(other, t),
            5 => GateOp::cry(other, true, t, angle),
            _ => GateOp::cry(other, false, t, angle),
        };
        circuit.push(op).unwrap();
    }
    circuit
}

/// Random Hermitian Pauli sum with real coefficients.
pub fn random_observable(rng: &mut impl rand::Rng, n: usize, n_terms: usize) -> qphase::qsim::PauliSum {
    use qphase::qsim::{Pauli, PauliString, PauliSum};
    let mut sum = PauliSum::default();
    for _ in 0..n_terms {
        let sites: Vec<(usize, Pauli)> = (0..n)
            .filter_map(|q| match rng.random_range(0..5) {
                0 => Some((q, Pauli::X)),
                1 => Some((q, Pauli::Y)),
                2 => Some((q, Pauli::Z)),
                _ => None,
            })
            .collect();
        if sites.is_empty() {
            continue;
        }
        sum.push(PauliString::new(rng.random_range(-1.0..1.0), sites).unwrap());
    }
    sum
}

/// Dense `<ψ|H|ψ>` using the Pauli sum's own matrix representation is not
/// independent, so build it from 2x2 factors instead.
pub fn dense_expectation(state: &StateVector, observable: &qphase::qsim::PauliSum) -> f64 {
    use qphase::qsim::Pauli;
    let n = state.n_qubits();
    let amps = state.amplitudes();
    let mut total = 0.0;
    for term in observable.terms() {
        let mut out = amps.to_vec();
        for &(q, p) in term.sites() {
            let m: Mat2 = match p {
                Pauli::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
                Pauli::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
                Pauli::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
            };
            apply_1q(&mut out, n, q, &m);
        }
        let z: C = amps.iter().zip(&out).map(|(a, b)| a.conj() * b).sum();
        total += (term.coefficient * z).re;
    }
    total
}
