//! Quantum phase detection on the ANNNI spin chain.
//!
//! The crate bundles a dense statevector simulator ([`qsim`]), the ANNNI
//! Hamiltonian with an exact-diagonalisation oracle ([`hamiltonian`]), a VQE
//! dataset generator ([`vqe`]), a quantum convolutional classifier trained on
//! the two integrable axes of the phase diagram ([`qcnn`]), an autoencoder
//! anomaly-detection baseline ([`anomaly`]) and the analytical phase geometry
//! used for labels and evaluation ([`phasemap`]).

pub mod anomaly;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod grid;
pub mod hamiltonian;
pub mod optim;
pub mod phasemap;
pub mod qcnn;
pub mod qsim;
pub mod vqe;

pub use error::{Error, Result};
pub use exec::Exec;
