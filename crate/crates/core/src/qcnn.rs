//! Quantum convolutional classifier over prepared ground states.
//!
//! Layout for `N` qubits: an initial `RY` column, then blocks that each run a
//! two-offset shared-angle convolution, a free `RY` column on the active
//! qubits and a pooling layer, until two qubits remain; a fully connected
//! two-qubit gate closes the circuit. A convolution on the pair `(a, b)` is
//! `CX(a → b)` followed by `RY(θ) ⊗ RY(θ)`; [`ConvGate::Product`] drops the
//! `CX`. Pooling pairs the active list as
//! `(a0,a1), (a2,a3), ...`, measures the first member and keeps the second;
//! an odd leftover passes through. Measurement is deferred: the kept qubit
//! receives `RX(φ)` and then `RY(θ_b)` controlled on the measured qubit being
//! `b`, and the measured qubit is never touched again.
//!
//! The marginal over the final pair reads `|00>` garbage, `|01>`
//! ferromagnetic, `|10>` paramagnetic, `|11>` antiphase.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::Grid;
use crate::optim::{Adam, AdamMoments};
use crate::phasemap::{LabeledPoint, PhaseLabel};
use crate::qsim::{value_and_gradient, Angle, Circuit, Functional, GateOp, StateVector, MAX_QUBITS};
use crate::vqe::random_angles;

/// Probabilities below this are clamped inside the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Number of parameters of the fully connected gate: `RY RX RY` on each of
/// the two qubits.
pub const FC_PARAMS: usize = 6;

/// Two-qubit convolution gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvGate {
    /// `(RY(θ) ⊗ RY(θ)) · CX(a → b)`.
    #[default]
    Entangling,
    /// `RY(θ) ⊗ RY(θ)` alone.
    Product,
}

/// One pooled pair: `measured` conditions rotations on `kept`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pool {
    pub measured: usize,
    pub kept: usize,
    pub phi: usize,
    pub theta0: usize,
    pub theta1: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub active: Vec<usize>,
    /// Shared angles of the offset-0 and offset-1 convolution sublayers.
    pub conv_params: [usize; 2],
    /// One free `RY` angle per active qubit.
    pub rot_params: Vec<usize>,
    pub pools: Vec<Pool>,
    /// Active qubits after pooling.
    pub survivors: Vec<usize>,
}

impl Block {
    /// Convolution pairs of sublayer `offset` (0 or 1).
    pub fn conv_pairs(&self, offset: usize) -> Vec<(usize, usize)> {
        self.active
            .windows(2)
            .skip(offset)
            .step_by(2)
            .map(|w| (w[0], w[1]))
            .collect()
    }
}

/// Sequence of operations the circuit is assembled from. Exposed so the
/// pooling semantics can be checked against an explicit measurement
/// simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    /// Independent `RY(params[i])` on `qubits[i]`.
    Rotations { qubits: Vec<usize>, params: Vec<usize> },
    /// On every pair `(a, b)`: `CX(a → b)` when `entangling`, then
    /// `RY(θ) ⊗ RY(θ)` with one shared angle.
    Conv { pairs: Vec<(usize, usize)>, param: usize, entangling: bool },
    Pool(Pool),
    /// `CX(q0 → q1)`, then `RY(p[0]) RX(p[1]) RY(p[2])` on `q0` and
    /// `RY(p[3]) RX(p[4]) RY(p[5])` on `q1`, each list applied left to right.
    Fc { qubits: [usize; 2], params: [usize; FC_PARAMS] },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcnnArchitecture {
    pub n_qubits: usize,
    pub conv_gate: ConvGate,
    pub initial_params: Vec<usize>,
    pub blocks: Vec<Block>,
    pub final_active: [usize; 2],
    pub fc_params: [usize; FC_PARAMS],
    pub n_params: usize,
}

impl QcnnArchitecture {
    /// Even `N` from 4 to the simulator limit, entangling convolutions.
    pub fn new(n_qubits: usize) -> Result<Self> {
        Self::with_conv(n_qubits, ConvGate::default())
    }

    pub fn with_conv(n_qubits: usize, conv_gate: ConvGate) -> Result<Self> {
        if n_qubits < 4 || n_qubits % 2 != 0 || n_qubits > MAX_QUBITS {
            return Err(Error::validation(format!(
                "the classifier supports even N in 4..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut next = 0usize;
        let mut fresh = |k: usize| -> Vec<usize> {
            let v: Vec<usize> = (next..next + k).collect();
            next += k;
            v
        };
        let initial_params = fresh(n_qubits);
        let mut active: Vec<usize> = (0..n_qubits).collect();
        let mut blocks = Vec::new();
        while active.len() > 2 {
            let conv = fresh(2);
            let rot_params = fresh(active.len());
            let pools: Vec<Pool> = active
                .chunks_exact(2)
                .map(|pair| {
                    let p = fresh(3);
                    Pool { measured: pair[0], kept: pair[1], phi: p[0], theta0: p[1], theta1: p[2] }
                })
                .collect();
            let mut survivors: Vec<usize> = pools.iter().map(|p| p.kept).collect();
            if active.len() % 2 == 1 {
                survivors.push(*active.last().expect("non-empty"));
            }
            blocks.push(Block {
                active: active.clone(),
                conv_params: [conv[0], conv[1]],
                rot_params,
                pools,
                survivors: survivors.clone(),
            });
            active = survivors;
        }
        let fc = fresh(FC_PARAMS);
        let fc_params: [usize; FC_PARAMS] = fc.try_into().expect("six indices");
        Ok(Self {
            n_qubits,
            conv_gate,
            initial_params,
            blocks,
            final_active: [active[0], active[1]],
            fc_params,
            n_params: next,
        })
    }

    /// Active-register sizes from the input down to the final pair.
    pub fn active_sequence(&self) -> Vec<usize> {
        let mut seq: Vec<usize> = self.blocks.iter().map(|b| b.active.len()).collect();
        seq.push(2);
        seq
    }

    pub fn stages(&self) -> Vec<Stage> {
        let mut out = vec![Stage::Rotations {
            qubits: (0..self.n_qubits).collect(),
            params: self.initial_params.clone(),
        }];
        for b in &self.blocks {
            for offset in 0..2 {
                let pairs = b.conv_pairs(offset);
                if !pairs.is_empty() {
                    out.push(Stage::Conv {
                        pairs,
                        param: b.conv_params[offset],
                        entangling: self.conv_gate == ConvGate::Entangling,
                    });
                }
            }
            out.push(Stage::Rotations { qubits: b.active.clone(), params: b.rot_params.clone() });
            out.extend(b.pools.iter().copied().map(Stage::Pool));
        }
        out.push(Stage::Fc { qubits: self.final_active, params: self.fc_params });
        out
    }

    /// The classifier as a standalone circuit fragment.
    pub fn circuit(&self) -> Circuit {
        let mut c = Circuit::new(self.n_qubits);
        let mut push = |op: GateOp| c.push(op).expect("architecture qubits are in range");
        let p = Angle::Param;
        for stage in self.stages() {
            match stage {
                Stage::Rotations { qubits, params } => {
                    for (q, k) in qubits.into_iter().zip(params) {
                        push(GateOp::ry(q, p(k)));
                    }
                }
                Stage::Conv { pairs, param, entangling } => {
                    for (a, b) in pairs {
                        if entangling {
                            push(GateOp::cnot(a, b));
                        }
                        push(GateOp::ry(a, p(param)));
                        push(GateOp::ry(b, p(param)));
                    }
                }
                Stage::Pool(pool) => {
                    push(GateOp::rx(pool.kept, p(pool.phi)));
                    push(GateOp::cry(pool.measured, true, pool.kept, p(pool.theta1)));
                    push(GateOp::cry(pool.measured, false, pool.kept, p(pool.theta0)));
                }
                Stage::Fc { qubits: [a, b], params: f } => {
                    push(GateOp::cnot(a, b));
                    for (q, ks) in [(a, &f[..3]), (b, &f[3..])] {
                        push(GateOp::ry(q, p(ks[0])));
                        push(GateOp::rx(q, p(ks[1])));
                        push(GateOp::ry(q, p(ks[2])));
                    }
                }
            }
        }
        debug_assert_eq!(c.n_params(), self.n_params);
        c
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::structural(format!(
                "classifier has {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        Ok(())
    }
}

/// Outcome probabilities over the final pair and the physical argmax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePrediction {
    /// `[garbage, ferromagnetic, paramagnetic, antiphase]`.
    pub p: [f64; 4],
    pub label: PhaseLabel,
}

impl PhasePrediction {
    pub fn from_probabilities(p: [f64; 4]) -> Self {
        let mut best = 1;
        for i in 2..4 {
            if p[i] > p[best] {
                best = i;
            }
        }
        Self { p, label: PhaseLabel::from_index(best - 1).expect("three classes") }
    }

    pub fn garbage_prob(&self) -> f64 {
        self.p[0]
    }

    pub fn prob_of(&self, label: PhaseLabel) -> f64 {
        self.p[outcome(label)]
    }
}

/// Output outcome index of a physical class.
pub fn outcome(label: PhaseLabel) -> usize {
    label.index() + 1
}

pub fn predict(arch: &QcnnArchitecture, params: &[f64], state: &StateVector) -> Result<PhasePrediction> {
    arch.check_params(params)?;
    let mut s = state.clone();
    arch.circuit().apply(&mut s, params)?;
    let p = s.basis_probabilities(&arch.final_active)?;
    Ok(PhasePrediction::from_probabilities([p[0], p[1], p[2], p[3]]))
}

pub fn predict_all(
    arch: &QcnnArchitecture,
    params: &[f64],
    states: &[StateVector],
    exec: Exec,
) -> Result<Vec<PhasePrediction>> {
    arch.check_params(params)?;
    let circuit = arch.circuit();
    exec.try_map(states.len(), |i| {
        let mut s = states[i].clone();
        circuit.apply(&mut s, params)?;
        let p = s.basis_probabilities(&arch.final_active)?;
        Ok(PhasePrediction::from_probabilities([p[0], p[1], p[2], p[3]]))
    })
}

/// Mean `-log p_label`, clamped at [`PROB_FLOOR`].
pub fn cross_entropy(predictions: &[PhasePrediction], labels: &[PhaseLabel]) -> Result<f64> {
    if predictions.len() != labels.len() || labels.is_empty() {
        return Err(Error::structural("predictions and labels differ in length or are empty"));
    }
    let total: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, &l)| -p.prob_of(l).max(PROB_FLOOR).ln())
        .sum();
    Ok(total / labels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub moments: AdamMoments,
    pub seed: u64,
    /// Convolution gate of the architecture built by [`QcnnModel::fit`].
    #[serde(default)]
    pub conv_gate: ConvGate,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            lr: 0.05,
            moments: AdamMoments::default(),
            seed: 0,
            conv_gate: ConvGate::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::validation("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    /// Loss before each epoch's update, then the final loss.
    pub loss_trace: Vec<f64>,
}

/// Uniform `[-π, π]` initial angles for `seed`.
pub fn initial_params(arch: &QcnnArchitecture, seed: u64) -> Vec<f64> {
    random_angles(seed, u64::MAX, arch.n_params)
}

/// Loss and gradient of the training objective at `params`.
pub fn loss_and_gradient(
    circuit: &Circuit,
    final_active: &[usize; 2],
    params: &[f64],
    inputs: &[StateVector],
    labels: &[PhaseLabel],
    exec: Exec,
) -> Result<(f64, Vec<f64>)> {
    let scale = 1.0 / inputs.len() as f64;
    let parts = exec.try_map(inputs.len(), |i| {
        let o = outcome(labels[i]);
        let loss = move |p: &[f64]| {
            let mut dp = vec![0.0; p.len()];
            let value = if p[o] > PROB_FLOOR {
                dp[o] = -scale / p[o];
                -scale * p[o].ln()
            } else {
                -scale * PROB_FLOOR.ln()
            };
            (value, dp)
        };
        value_and_gradient(
            circuit,
            params,
            Some(&inputs[i]),
            Functional::Probabilities { qubits: final_active, loss: &loss },
        )
    })?;
    let mut total = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (v, g) in parts {
        total += v;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    Ok((total, grad))
}

/// Full-batch ADAM on the cross-entropy over `inputs`.
pub fn train(
    arch: &QcnnArchitecture,
    inputs: &[StateVector],
    labels: &[PhaseLabel],
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::validation("empty training set"));
    }
    if inputs.len() != labels.len() {
        return Err(Error::structural("inputs and labels differ in length"));
    }
    if let Some(s) = inputs.iter().find(|s| s.n_qubits() != arch.n_qubits) {
        return Err(Error::structural(format!(
            "{}-qubit input for a {}-qubit classifier",
            s.n_qubits(),
            arch.n_qubits
        )));
    }
    let circuit = arch.circuit();
    let mut params = initial_params(arch, cfg.seed);
    let mut opt = Adam::new(params.len(), cfg.lr, cfg.moments);
    let mut loss_trace = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..cfg.epochs {
        let (loss, grad) = loss_and_gradient(&circuit, &arch.final_active, &params, inputs, labels, exec)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Optimization { step: epoch, message: "non-finite loss".into() });
        }
        loss_trace.push(loss);
        opt.step(&mut params, &grad);
    }
    let (loss, _) = loss_and_gradient(&circuit, &arch.final_active, &params, inputs, labels, exec)?;
    loss_trace.push(loss);
    Ok(TrainOutcome { params, loss_trace })
}

/// A training point after snapping to the dataset grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnappedPoint {
    pub requested_kappa: f64,
    pub requested_h: f64,
    pub grid_index: usize,
    pub kappa: f64,
    pub h: f64,
    pub label: PhaseLabel,
}

/// Moves each point to its nearest grid node, keeping the sampled label.
/// Duplicates are kept, so several samples on one node weigh it more.
pub fn snap_points(grid: &Grid, points: &[LabeledPoint]) -> Vec<SnappedPoint> {
    points
        .iter()
        .map(|p| {
            let idx = grid.nearest(p.kappa, p.h);
            let (kappa, h) = grid.point(idx);
            SnappedPoint {
                requested_kappa: p.kappa,
                requested_h: p.h,
                grid_index: idx,
                kappa,
                h,
                label: p.label,
            }
        })
        .collect()
}

/// Accuracy plus the full prediction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub predictions: Vec<PhasePrediction>,
}

impl Evaluation {
    pub fn mean_garbage(&self) -> f64 {
        self.predictions.iter().map(|p| p.garbage_prob()).sum::<f64>() / self.predictions.len() as f64
    }
}

pub fn evaluate(
    arch: &QcnnArchitecture,
    params: &[f64],
    states: &[StateVector],
    truth: &[PhaseLabel],
    exec: Exec,
) -> Result<Evaluation> {
    if states.len() != truth.len() {
        return Err(Error::structural("truth labels must cover every grid point"));
    }
    let predictions = predict_all(arch, params, states, exec)?;
    let labels: Vec<Option<PhaseLabel>> = predictions.iter().map(|p| Some(p.label)).collect();
    let accuracy = crate::phasemap::accuracy(&labels, truth)?;
    Ok(Evaluation { accuracy, predictions })
}

/// Persisted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcnnModel {
    pub architecture: QcnnArchitecture,
    pub params: Vec<f64>,
    pub config: TrainConfig,
    pub seed: u64,
    pub dataset_hash: String,
    pub training_points: Vec<SnappedPoint>,
    pub loss_trace: Vec<f64>,
}

impl QcnnModel {
    /// Trains on `points` snapped to the dataset grid. `states` are the
    /// dataset's prepared states in flat grid order.
    pub fn fit(
        grid: &Grid,
        states: &[StateVector],
        dataset_hash: &str,
        points: &[LabeledPoint],
        cfg: &TrainConfig,
        exec: Exec,
    ) -> Result<Self> {
        if states.len() != grid.len() {
            return Err(Error::structural("one prepared state per grid point is required"));
        }
        let n = states
            .first()
            .ok_or_else(|| Error::validation("empty dataset"))?
            .n_qubits();
        let architecture = QcnnArchitecture::with_conv(n, cfg.conv_gate)?;
        let snapped = snap_points(grid, points);
        let inputs: Vec<StateVector> = snapped.iter().map(|p| states[p.grid_index].clone()).collect();
        let labels: Vec<PhaseLabel> = snapped.iter().map(|p| p.label).collect();
        let out = train(&architecture, &inputs, &labels, cfg, exec)?;
        Ok(Self {
            architecture,
            params: out.params,
            config: *cfg,
            seed: cfg.seed,
            dataset_hash: dataset_hash.to_string(),
            training_points: snapped,
            loss_trace: out.loss_trace,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        let arch = &model.architecture;
        if QcnnArchitecture::with_conv(arch.n_qubits, arch.conv_gate)? != *arch {
            return Err(Error::Format("model architecture does not match this version".into()));
        }
        model.architecture.check_params(&model.params)?;
        Ok(model)
    }
}
