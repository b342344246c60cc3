use serde::{Deserialize, Serialize};

use super::gate::{Angle, GateOp};
use super::state::StateVector;
use crate::error::{Error, Result};

/// Ordered gate list over a fixed register with `n_params` trainable angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
    n_params: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, ops: Vec::new(), n_params: 0 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    /// Reserves a fresh trainable parameter and returns its angle handle.
    pub fn new_param(&mut self) -> Angle {
        self.n_params += 1;
        Angle::Param(self.n_params - 1)
    }

    /// Appends a gate. Parameter references beyond the current count grow
    /// `n_params`.
    pub fn push(&mut self, op: GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        if let Some(k) = op.param_index() {
            self.n_params = self.n_params.max(k + 1);
        }
        self.ops.push(op);
        Ok(())
    }

    /// Appends `other`, shifting its parameter indices past ours.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::structural(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.n_qubits, self.n_qubits
            )));
        }
        let offset = self.n_params;
        for op in &other.ops {
            let mut op = *op;
            if let Some(Angle::Param(k)) = op.angle {
                op.angle = Some(Angle::Param(k + offset));
            }
            self.ops.push(op);
        }
        self.n_params = offset + other.n_params;
        Ok(())
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() < self.n_params {
            return Err(Error::structural(format!(
                "circuit needs {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::validation(format!("non-finite parameter {bad}")));
        }
        Ok(())
    }

    /// Applies every gate to `state` in order.
    pub fn apply(&self, state: &mut StateVector, params: &[f64]) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::structural(format!(
                "{}-qubit circuit applied to a {}-qubit state",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        self.check_params(params)?;
        for op in &self.ops {
            let theta = op.resolve_angle(params)?;
            op.apply_resolved(state, theta, false);
        }
        Ok(())
    }

    /// Runs the circuit from `|0...0>`.
    pub fn run(&self, params: &[f64]) -> Result<StateVector> {
        let mut s = StateVector::zero(self.n_qubits)?;
        self.apply(&mut s, params)?;
        Ok(s)
    }
}
