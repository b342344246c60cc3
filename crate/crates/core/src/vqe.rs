//! Variational ground-state preparation over the (κ, h) plane.
//!
//! The ansatz is a hardware-efficient stack of `D` layers, each a column of
//! independent `RY` rotations followed by a linear CNOT chain. The angle of
//! layer `l` on qubit `q` lives at index `l * N + q`. An optional trailing
//! `RY` column adds `N` more parameters at indices `D * N + q`, so the ansatz
//! has `N * D` or `N * (D + 1)` parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::Grid;
use crate::hamiltonian::{build_annni, exact_spectrum, relative_energy_error, AnnniParams};
use crate::optim::{Adam, AdamMoments};
use crate::qsim::{fidelity, value_and_gradient, Angle, Circuit, Functional, GateOp};

pub use crate::dataset::{DatasetEntry, GroundStateDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaAnsatz {
    pub n_qubits: usize,
    pub depth: usize,
    /// Trailing `RY` column after the last CNOT chain (on by default).
    pub final_rotations: bool,
}

impl HeaAnsatz {
    pub fn new(n_qubits: usize, depth: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::validation("the ansatz needs at least two qubits"));
        }
        if depth == 0 {
            return Err(Error::validation("the ansatz needs at least one layer"));
        }
        Ok(Self { n_qubits, depth, final_rotations: true })
    }

    pub fn with_final_rotations(self, final_rotations: bool) -> Self {
        Self { final_rotations, ..self }
    }

    /// `N/2 + 3` layers: 6 for six qubits, 9 for twelve.
    pub fn default_depth(n_qubits: usize) -> usize {
        n_qubits / 2 + 3
    }

    pub fn with_default_depth(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, Self::default_depth(n_qubits))
    }

    pub fn n_params(&self) -> usize {
        self.n_qubits * (self.depth + usize::from(self.final_rotations))
    }

    pub fn circuit(&self) -> Circuit {
        let n = self.n_qubits;
        let mut c = Circuit::new(n);
        for layer in 0..self.depth {
            for q in 0..n {
                c.push(GateOp::ry(q, Angle::Param(layer * n + q)))
                    .expect("qubit in range");
            }
            for q in 0..n - 1 {
                c.push(GateOp::cnot(q, q + 1)).expect("qubit in range");
            }
        }
        if self.final_rotations {
            for q in 0..n {
                c.push(GateOp::ry(q, Angle::Param(self.depth * n + q)))
                    .expect("qubit in range");
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqeConfig {
    pub rounds: usize,
    pub steps_per_round: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub moments: AdamMoments,
    pub seed: u64,
    /// Keep every `trace_stride`-th energy in the returned trace.
    pub trace_stride: usize,
}

impl Default for VqeConfig {
    fn default() -> Self {
        Self {
            rounds: 5,
            steps_per_round: 1000,
            lr_start: 0.3,
            lr_end: 0.1,
            moments: AdamMoments::default(),
            seed: 0,
            trace_stride: 1,
        }
    }
}

impl VqeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::validation("at least one optimisation round is required"));
        }
        if !(self.lr_start > 0.0 && self.lr_end > 0.0) {
            return Err(Error::validation("learning rates must be positive"));
        }
        if self.trace_stride == 0 {
            return Err(Error::validation("trace stride must be positive"));
        }
        Ok(())
    }

    /// Learning rate of round `r`, linear from `lr_start` to `lr_end`.
    pub fn lr_for_round(&self, r: usize) -> f64 {
        if self.rounds <= 1 {
            return self.lr_start;
        }
        let t = r as f64 / (self.rounds - 1) as f64;
        self.lr_start + (self.lr_end - self.lr_start) * t
    }

    pub fn total_steps(&self) -> usize {
        self.rounds * self.steps_per_round
    }
}

#[derive(Debug, Clone)]
pub struct VqeOutcome {
    pub params: Vec<f64>,
    pub energy: f64,
    /// Energy before each update step, decimated by `trace_stride`.
    pub trace: Vec<f64>,
    /// First step after which the energy stays within 1e-6 (relative) of
    /// its final value.
    pub converged_steps: usize,
}

/// Minimises `<ψ(θ)|H|ψ(θ)>` with ADAM. Each round starts a fresh optimizer
/// at that round's learning rate.
pub fn vqe_optimize(
    p: &AnnniParams,
    ansatz: &HeaAnsatz,
    init_params: &[f64],
    cfg: &VqeConfig,
) -> Result<VqeOutcome> {
    cfg.validate()?;
    if ansatz.n_qubits != p.n_spins {
        return Err(Error::structural(format!(
            "{}-qubit ansatz for a {}-spin chain",
            ansatz.n_qubits, p.n_spins
        )));
    }
    if init_params.len() != ansatz.n_params() {
        return Err(Error::structural(format!(
            "ansatz has {} parameters, got {}",
            ansatz.n_params(),
            init_params.len()
        )));
    }
    let h = build_annni(p)?;
    let circuit = ansatz.circuit();
    let mut params = init_params.to_vec();
    let mut energies = Vec::with_capacity(cfg.total_steps());
    let mut step = 0;
    for round in 0..cfg.rounds {
        let mut opt = Adam::new(params.len(), cfg.lr_for_round(round), cfg.moments);
        for _ in 0..cfg.steps_per_round {
            let (e, g) = value_and_gradient(&circuit, &params, None, Functional::Energy(&h))
                .map_err(|err| Error::Optimization { step, message: err.to_string() })?;
            if !e.is_finite() || g.iter().any(|x| !x.is_finite()) {
                return Err(Error::Optimization {
                    step,
                    message: "non-finite energy or gradient".into(),
                });
            }
            energies.push(e);
            opt.step(&mut params, &g);
            step += 1;
        }
    }
    let energy = crate::qsim::expectation(&circuit.run(&params)?, &h)?;
    if !energy.is_finite() {
        return Err(Error::Optimization { step, message: "non-finite final energy".into() });
    }
    let tol = 1e-6 * energy.abs().max(1e-12);
    let converged_steps = energies
        .iter()
        .rposition(|e| (e - energy).abs() > tol)
        .map_or(0, |k| k + 1);
    let trace = energies.into_iter().step_by(cfg.trace_stride).collect();
    Ok(VqeOutcome { params, energy, trace, converged_steps })
}

/// How a grid point's initial parameters are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recycling {
    /// Fresh uniform angles in `[-π, π]` at every point.
    None,
    /// Converged parameters of the previously solved neighbour along a
    /// serpentine sweep.
    Sweep,
}

impl std::str::FromStr for Recycling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Recycling::None),
            "sweep" => Ok(Recycling::Sweep),
            other => Err(Error::validation(format!("unknown recycling mode {other:?}"))),
        }
    }
}

/// Uniform `[-π, π]` angles from an independent stream per grid point, so the
/// draw does not depend on visiting order.
pub fn random_angles(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n)
        .map(|_| rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI))
        .collect()
}

/// Solves every grid point and assembles the dataset.
///
/// Points are visited in serpentine order. With [`Recycling::None`] points are
/// independent and `exec` may fan them out; with [`Recycling::Sweep`] the sweep
/// is serial.
pub fn build_dataset(
    ansatz: HeaAnsatz,
    grid: Grid,
    cfg: &VqeConfig,
    recycling: Recycling,
    exec: Exec,
) -> Result<GroundStateDataset> {
    cfg.validate()?;
    let n = ansatz.n_qubits;
    let solve = |idx: usize, init: &[f64]| -> Result<VqeOutcome> {
        let (kappa, h) = grid.point(idx);
        let annotate = |e: Error| Error::AtGridPoint { kappa, h, source: Box::new(e) };
        let p = AnnniParams::new(n, kappa, h).map_err(annotate)?;
        vqe_optimize(&p, &ansatz, init, cfg).map_err(annotate)
    };
    let order = grid.serpentine();
    let mut entries: Vec<Option<DatasetEntry>> = vec![None; grid.len()];
    match recycling {
        Recycling::None => {
            let solved = exec.try_map(order.len(), |k| {
                let idx = order[k];
                let init = random_angles(cfg.seed, idx as u64, ansatz.n_params());
                solve(idx, &init).map(|o| (idx, o))
            })?;
            for (idx, o) in solved {
                entries[idx] = Some(DatasetEntry::from_outcome(o, None));
            }
        }
        Recycling::Sweep => {
            let mut prev: Option<(usize, Vec<f64>)> = None;
            for &idx in &order {
                let init = match &prev {
                    Some((_, params)) => params.clone(),
                    None => random_angles(cfg.seed, idx as u64, ansatz.n_params()),
                };
                let o = solve(idx, &init)?;
                let params = o.params.clone();
                entries[idx] = Some(DatasetEntry::from_outcome(o, prev.as_ref().map(|p| p.0)));
                prev = Some((idx, params));
            }
        }
    }
    Ok(GroundStateDataset {
        ansatz,
        grid,
        config: *cfg,
        recycling,
        entries: entries.into_iter().map(|e| e.expect("every point visited")).collect(),
    })
}

/// Per-point comparison against exact diagonalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub exact_energy: Vec<f64>,
    pub delta_e: Vec<f64>,
    pub fidelity: Vec<f64>,
    /// Size of the (numerically) degenerate ground space at each point.
    pub ground_multiplicity: Vec<usize>,
}

/// Levels within this distance of the ground energy (scaled by
/// `max(1, |E0|)`) count as one degenerate ground space.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Fills `delta_e` and `fidelity_exact` of every entry. Fidelity is measured
/// against the projector onto the degenerate ground space, which at `h = 0`
/// contains the symmetry-broken partners.
pub fn validate_dataset(ds: &mut GroundStateDataset, exec: Exec) -> Result<ValidationReport> {
    let n = ds.ansatz.n_qubits;
    let circuit = ds.ansatz.circuit();
    let rows = exec.try_map(ds.entries.len(), |idx| -> Result<(f64, f64, f64, usize)> {
        let (kappa, h) = ds.grid.point(idx);
        let annotate = |e: Error| Error::AtGridPoint { kappa, h, source: Box::new(e) };
        let p = AnnniParams::new(n, kappa, h).map_err(annotate)?;
        let spec = exact_spectrum(&p, 1usize << n, true).map_err(annotate)?;
        let e0 = spec.ground_energy();
        let mult = spec.ground_multiplicity(DEGENERACY_TOL * e0.abs().max(1.0));
        let entry = &ds.entries[idx];
        let psi = circuit.run(&entry.params).map_err(annotate)?;
        let states = spec.states.as_ref().expect("states requested");
        let mut fid = 0.0;
        for s in &states[..mult] {
            fid += fidelity(s, &psi)?;
        }
        let de = relative_energy_error(entry.energy, e0).map_err(annotate)?;
        Ok((e0, de, fid.min(1.0), mult))
    })?;
    let mut report = ValidationReport {
        exact_energy: Vec::with_capacity(rows.len()),
        delta_e: Vec::with_capacity(rows.len()),
        fidelity: Vec::with_capacity(rows.len()),
        ground_multiplicity: Vec::with_capacity(rows.len()),
    };
    for (entry, (e0, de, fid, mult)) in ds.entries.iter_mut().zip(rows) {
        entry.delta_e = Some(de);
        entry.fidelity_exact = Some(fid);
        report.exact_energy.push(e0);
        report.delta_e.push(de);
        report.fidelity.push(fid);
        report.ground_multiplicity.push(mult);
    }
    Ok(report)
}
