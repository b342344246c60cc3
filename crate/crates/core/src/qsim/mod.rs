//! Dense statevector simulator with adjoint gradients.

mod circuit;
mod gate;
mod gradient;
mod pauli;
mod state;

pub use circuit::Circuit;
pub use gate::{apply_gate, Angle, GateKind, GateOp};
pub use gradient::{finite_difference_gradient, gradient, value_and_gradient, Functional, ProbabilityLoss};
pub use pauli::{expectation, Pauli, PauliString, PauliSum};
pub use state::{fidelity, StateVector, MAX_QUBITS};
