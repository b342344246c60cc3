//! Adjoint-mode differentiation of circuit functionals.
//!
//! One forward pass produces `|ψ>` and the adjoint vector `|λ> = M|ψ>`; a
//! single backward sweep then un-applies each gate from both vectors and
//! reads off `∂f/∂θ = Im <λ|G|ψ>` at every rotation with generator `G`.

use num_complex::Complex64;

use super::circuit::Circuit;
use super::pauli::{expectation, PauliSum};
use super::state::{outcome_index, StateVector};
use crate::error::{Error, Result};

/// Scalar loss over a marginal distribution: returns the value and its
/// gradient with respect to each outcome probability.
pub type ProbabilityLoss<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + Sync + 'a;

/// What to differentiate.
#[derive(Clone, Copy)]
pub enum Functional<'a> {
    /// `<ψ|H|ψ>`.
    Energy(&'a PauliSum),
    /// `loss(p)` where `p` is the marginal over `qubits`.
    Probabilities {
        qubits: &'a [usize],
        loss: &'a ProbabilityLoss<'a>,
    },
}

impl std::fmt::Debug for Functional<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Functional::Energy(h) => write!(f, "Energy({} terms)", h.len()),
            Functional::Probabilities { qubits, .. } => write!(f, "Probabilities({qubits:?})"),
        }
    }
}

impl Functional<'_> {
    /// Evaluates the functional on a final state, returning the value and the
    /// adjoint seed `M|ψ>`.
    fn seed(&self, state: &StateVector) -> Result<(f64, StateVector)> {
        match self {
            Functional::Energy(h) => Ok((expectation(state, h)?, h.apply(state)?)),
            Functional::Probabilities { qubits, loss } => {
                if qubits.is_empty() {
                    return Err(Error::validation("probability loss over no qubits"));
                }
                let probs = state.basis_probabilities(qubits)?;
                let (value, dp) = loss(&probs);
                if dp.len() != probs.len() {
                    return Err(Error::validation(format!(
                        "loss gradient has {} entries for {} outcomes",
                        dp.len(),
                        probs.len()
                    )));
                }
                if !value.is_finite() || dp.iter().any(|g| !g.is_finite()) {
                    return Err(Error::validation("loss is not differentiable here"));
                }
                let masks: Vec<usize> = qubits.iter().map(|&q| 1usize << (state.n_qubits() - 1 - q)).collect();
                let mut lambda = state.clone();
                for (i, a) in lambda.amplitudes_mut().iter_mut().enumerate() {
                    *a *= dp[outcome_index(i, &masks)];
                }
                Ok((value, lambda))
            }
        }
    }

    /// Value of the functional on a state.
    pub fn evaluate(&self, state: &StateVector) -> Result<f64> {
        self.seed(state).map(|(v, _)| v)
    }
}

/// Value and gradient of `functional(U(θ)|init>)`, where `init` defaults to
/// `|0...0>`.
pub fn value_and_gradient(
    circuit: &Circuit,
    params: &[f64],
    initial: Option<&StateVector>,
    functional: Functional<'_>,
) -> Result<(f64, Vec<f64>)> {
    let mut psi = match initial {
        Some(s) => s.clone(),
        None => StateVector::zero(circuit.n_qubits())?,
    };
    circuit.apply(&mut psi, params)?;
    let (value, mut lambda) = functional.seed(&psi)?;

    let mut grad = vec![0.0; circuit.n_params()];
    for op in circuit.ops().iter().rev() {
        let theta = op.resolve_angle(params)?;
        if let Some(k) = op.param_index() {
            let z: Complex64 = op.generator_overlap(&lambda, &psi);
            grad[k] += z.im;
        }
        op.apply_resolved(&mut psi, theta, true);
        op.apply_resolved(&mut lambda, theta, true);
    }
    Ok((value, grad))
}

/// `∂functional/∂θ` for every circuit parameter, starting from `|0...0>`.
pub fn gradient(circuit: &Circuit, params: &[f64], functional: Functional<'_>) -> Result<Vec<f64>> {
    value_and_gradient(circuit, params, None, functional).map(|(_, g)| g)
}

/// Central finite differences; the reference the adjoint path is tested
/// against.
pub fn finite_difference_gradient(
    circuit: &Circuit,
    params: &[f64],
    initial: Option<&StateVector>,
    functional: Functional<'_>,
    step: f64,
) -> Result<Vec<f64>> {
    let eval = |p: &[f64]| -> Result<f64> {
        let mut psi = match initial {
            Some(s) => s.clone(),
            None => StateVector::zero(circuit.n_qubits())?,
        };
        circuit.apply(&mut psi, p)?;
        functional.evaluate(&psi)
    };
    let mut p = params.to_vec();
    (0..circuit.n_params())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + step;
            let plus = eval(&p)?;
            p[k] = orig - step;
            let minus = eval(&p)?;
            p[k] = orig;
            Ok((plus - minus) / (2.0 * step))
        })
        .collect()
}
