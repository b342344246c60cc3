//! Autoencoder anomaly detection.
//!
//! The encoder splits the register into a kept block `q_C` (the first
//! `⌊N/2⌋` qubits) and a trash block `q_T` (the rest). It applies an `RY`
//! column and three layers of: `CX` from the `i`-th kept qubit to trash qubit
//! `q_T[(i + layer) mod |q_T|]`, `CZ` on every trash pair, and an `RZ`
//! column. Training drives the trash register to `|0...0>` for one reference
//! state; the score of any other state is the expected Hamming weight of the
//! trash register.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::optim::{Adam, AdamMoments};
use crate::qsim::{value_and_gradient, Angle, Circuit, Functional, GateOp, StateVector};
use crate::vqe::random_angles;

pub const ENCODER_LAYERS: usize = 3;

/// Training counts as converged below this score.
pub const CONVERGENCE_GATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderArchitecture {
    pub n_qubits: usize,
    pub k: usize,
    pub kept: Vec<usize>,
    pub trash: Vec<usize>,
    pub depth: usize,
    pub n_params: usize,
}

impl EncoderArchitecture {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::validation("the encoder needs at least two qubits"));
        }
        let k = n_qubits / 2;
        Ok(Self {
            n_qubits,
            k,
            kept: (0..k).collect(),
            trash: (k..n_qubits).collect(),
            depth: ENCODER_LAYERS,
            n_params: n_qubits * (1 + ENCODER_LAYERS),
        })
    }

    /// Largest possible score.
    pub fn max_score(&self) -> f64 {
        self.trash.len() as f64
    }

    pub fn circuit(&self) -> Circuit {
        let n = self.n_qubits;
        let mut c = Circuit::new(n);
        let mut push = |op: GateOp| c.push(op).expect("encoder qubits are in range");
        for q in 0..n {
            push(GateOp::ry(q, Angle::Param(q)));
        }
        for layer in 0..self.depth {
            for (i, &qc) in self.kept.iter().enumerate() {
                push(GateOp::cnot(qc, self.trash[(i + layer) % self.trash.len()]));
            }
            for (a, &ta) in self.trash.iter().enumerate() {
                for &tb in &self.trash[a + 1..] {
                    push(GateOp::cz(ta, tb));
                }
            }
            for q in 0..n {
                push(GateOp::rz(q, Angle::Param(n * (layer + 1) + q)));
            }
        }
        c
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::structural(format!(
                "encoder has {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        Ok(())
    }
}

/// Expected Hamming weight of a marginal distribution, with its gradient.
fn hamming_loss(p: &[f64]) -> (f64, Vec<f64>) {
    let w: Vec<f64> = (0..p.len()).map(|i| i.count_ones() as f64).collect();
    let value = p.iter().zip(&w).map(|(a, b)| a * b).sum();
    (value, w)
}

/// `½ Σ_{j ∈ q_T} (1 - <Z_j>)` of a state already passed through the
/// encoder.
pub fn anomaly_score(state: &StateVector, arch: &EncoderArchitecture) -> Result<f64> {
    if state.n_qubits() != arch.n_qubits {
        return Err(Error::structural(format!(
            "{}-qubit state for a {}-qubit encoder",
            state.n_qubits(),
            arch.n_qubits
        )));
    }
    arch.trash
        .iter()
        .map(|&q| state.expectation_z(q).map(|z| 0.5 * (1.0 - z)))
        .sum()
}

/// Score of `state` after running the encoder.
pub fn encoded_score(arch: &EncoderArchitecture, params: &[f64], state: &StateVector) -> Result<f64> {
    arch.check_params(params)?;
    let mut s = state.clone();
    arch.circuit().apply(&mut s, params)?;
    anomaly_score(&s, arch)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderInit {
    /// Uniform `[-π, π]` angles from the config seed.
    Random,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub epochs: usize,
    pub lr: f64,
    pub moments: AdamMoments,
    pub seed: u64,
    pub init: EncoderInit,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            lr: 0.1,
            moments: AdamMoments::default(),
            seed: 0,
            init: EncoderInit::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderOutcome {
    /// Lowest-score parameters seen.
    pub params: Vec<f64>,
    pub score: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Minimises the reference state's score with ADAM. Non-convergence is
/// logged, not an error; the best parameters seen are returned either way.
pub fn train_encoder(
    arch: &EncoderArchitecture,
    reference: &StateVector,
    cfg: &EncoderConfig,
) -> Result<EncoderOutcome> {
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(Error::validation("learning rate must be positive"));
    }
    if reference.n_qubits() != arch.n_qubits {
        return Err(Error::structural("reference state size does not match the encoder"));
    }
    let circuit = arch.circuit();
    let mut params = match cfg.init {
        EncoderInit::Random => random_angles(cfg.seed, u64::MAX - 1, arch.n_params),
        EncoderInit::Zero => vec![0.0; arch.n_params],
    };
    let mut opt = Adam::new(params.len(), cfg.lr, cfg.moments);
    let functional = Functional::Probabilities { qubits: &arch.trash, loss: &hamming_loss };
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let mut best = (f64::INFINITY, params.clone());
    for epoch in 0..=cfg.epochs {
        let (score, grad) = value_and_gradient(&circuit, &params, Some(reference), functional)?;
        if !score.is_finite() {
            return Err(Error::Optimization { step: epoch, message: "non-finite score".into() });
        }
        trace.push(score);
        if score < best.0 {
            best = (score, params.clone());
        }
        if epoch < cfg.epochs {
            opt.step(&mut params, &grad);
        }
    }
    let (score, params) = best;
    let converged = score < CONVERGENCE_GATE;
    if !converged {
        log::warn!("encoder did not reach score {CONVERGENCE_GATE} (best {score:.4})");
    }
    Ok(EncoderOutcome { params, score, trace, converged })
}

/// Scores every state through the trained encoder.
pub fn score_map(
    arch: &EncoderArchitecture,
    params: &[f64],
    states: &[StateVector],
    exec: Exec,
) -> Result<Vec<f64>> {
    arch.check_params(params)?;
    let circuit = arch.circuit();
    exec.try_map(states.len(), |i| {
        let mut s = states[i].clone();
        circuit.apply(&mut s, params)?;
        anomaly_score(&s, arch)
    })
}

/// References closer than this (in h, or in κ to 0.5) to a transition line
/// trigger a warning.
pub const REFERENCE_MARGIN: f64 = 0.1;

/// Logs a warning when the reference sits near a phase boundary. Returns
/// whether it did.
pub fn warn_if_near_boundary(kappa: f64, h: f64) -> Result<bool> {
    let d = crate::phasemap::distance_to_boundary(kappa, h)?;
    let near = d < REFERENCE_MARGIN;
    if near {
        log::warn!("reference (kappa={kappa}, h={h}) lies within {d:.3} of a transition line");
    }
    Ok(near)
}

/// Persisted encoder, mirroring the classifier model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderModel {
    pub architecture: EncoderArchitecture,
    pub params: Vec<f64>,
    pub config: EncoderConfig,
    pub seed: u64,
    pub dataset_hash: String,
    pub reference: (f64, f64),
    pub reference_index: usize,
    pub training_score: f64,
    pub converged: bool,
}

impl EncoderModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        if EncoderArchitecture::new(model.architecture.n_qubits)? != model.architecture {
            return Err(Error::Format("encoder architecture does not match this version".into()));
        }
        model.architecture.check_params(&model.params)?;
        Ok(model)
    }
}
