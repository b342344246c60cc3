use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cnot,
    Cz,
    /// `RY` on the target when the control reads `|1>`.
    CryOn1,
    /// `RY` on the target when the control reads `|0>`.
    CryOn0,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        !matches!(self, GateKind::Cnot | GateKind::Cz)
    }

    pub fn is_controlled(self) -> bool {
        matches!(
            self,
            GateKind::Cnot | GateKind::Cz | GateKind::CryOn1 | GateKind::CryOn0
        )
    }
}

/// Rotation angle source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    /// Index into the circuit parameter vector.
    Param(usize),
    /// Non-trainable angle in radians.
    Fixed(f64),
}

/// One gate application. Rotations are `exp(-i θ σ / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub target: usize,
    /// Control qubit for CNOT/CRY gates; the second qubit for CZ.
    pub control: Option<usize>,
    pub angle: Option<Angle>,
}

impl GateOp {
    pub fn rx(target: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::Rx, target, angle)
    }

    pub fn ry(target: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::Ry, target, angle)
    }

    pub fn rz(target: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::Rz, target, angle)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self { kind: GateKind::Cnot, target, control: Some(control), angle: None }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self { kind: GateKind::Cz, target: b, control: Some(a), angle: None }
    }

    /// Controlled `RY`; fires when the control qubit equals `on`.
    pub fn cry(control: usize, on: bool, target: usize, angle: Angle) -> Self {
        let kind = if on { GateKind::CryOn1 } else { GateKind::CryOn0 };
        Self { kind, target, control: Some(control), angle: Some(angle) }
    }

    fn rotation(kind: GateKind, target: usize, angle: Angle) -> Self {
        Self { kind, target, control: None, angle: Some(angle) }
    }

    pub fn param_index(&self) -> Option<usize> {
        match self.angle {
            Some(Angle::Param(k)) => Some(k),
            _ => None,
        }
    }

    /// Checks the structural invariants against a register size.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.target >= n_qubits {
            return Err(Error::structural(format!(
                "{:?} target {} out of range for {n_qubits} qubits",
                self.kind, self.target
            )));
        }
        match (self.kind.is_controlled(), self.control) {
            (true, Some(c)) if c >= n_qubits => {
                return Err(Error::structural(format!(
                    "{:?} control {c} out of range for {n_qubits} qubits",
                    self.kind
                )))
            }
            (true, Some(c)) if c == self.target => {
                return Err(Error::structural(format!(
                    "{:?} control and target coincide on qubit {c}",
                    self.kind
                )))
            }
            (true, None) => {
                return Err(Error::structural(format!("{:?} needs a control", self.kind)))
            }
            (false, Some(_)) => {
                return Err(Error::structural(format!(
                    "{:?} takes no control qubit",
                    self.kind
                )))
            }
            _ => {}
        }
        match (self.kind.is_rotation(), self.angle) {
            (true, None) => Err(Error::structural(format!("{:?} needs an angle", self.kind))),
            (false, Some(_)) => Err(Error::structural(format!(
                "{:?} takes no angle",
                self.kind
            ))),
            (true, Some(Angle::Fixed(a))) if !a.is_finite() => {
                Err(Error::validation(format!("non-finite fixed angle {a}")))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn resolve_angle(&self, params: &[f64]) -> Result<f64> {
        match self.angle {
            Some(Angle::Fixed(a)) => Ok(a),
            Some(Angle::Param(k)) => params.get(k).copied().ok_or_else(|| {
                Error::structural(format!(
                    "parameter {k} missing (got {} parameters)",
                    params.len()
                ))
            }),
            None => Ok(0.0),
        }
    }

    /// Applies the gate (or its inverse) with a resolved angle. The op must
    /// already be validated for the state's register.
    pub(crate) fn apply_resolved(&self, state: &mut StateVector, theta: f64, inverse: bool) {
        let theta = if inverse { -theta } else { theta };
        let t = state.mask(self.target);
        let c = self.control.map(|q| state.mask(q));
        let amps = state.amplitudes_mut();
        match self.kind {
            GateKind::Ry => {
                let (s, co) = (0.5 * theta).sin_cos();
                pair_loop(amps, t, 0, 0, |a0, a1| (co * a0 - s * a1, s * a0 + co * a1));
            }
            GateKind::Rx => {
                let (s, co) = (0.5 * theta).sin_cos();
                let mis = Complex64::new(0.0, -s);
                pair_loop(amps, t, 0, 0, |a0, a1| (co * a0 + mis * a1, mis * a0 + co * a1));
            }
            GateKind::Rz => {
                let (s, co) = (0.5 * theta).sin_cos();
                let p0 = Complex64::new(co, -s);
                let p1 = Complex64::new(co, s);
                pair_loop(amps, t, 0, 0, |a0, a1| (p0 * a0, p1 * a1));
            }
            GateKind::Cnot => {
                let c = c.expect("validated");
                pair_loop(amps, t, c, c, |a0, a1| (a1, a0));
            }
            GateKind::Cz => {
                let c = c.expect("validated");
                for (i, a) in amps.iter_mut().enumerate() {
                    if i & c != 0 && i & t != 0 {
                        *a = -*a;
                    }
                }
            }
            GateKind::CryOn1 | GateKind::CryOn0 => {
                let c = c.expect("validated");
                let want = if self.kind == GateKind::CryOn1 { c } else { 0 };
                let (s, co) = (0.5 * theta).sin_cos();
                pair_loop(amps, t, c, want, |a0, a1| (co * a0 - s * a1, s * a0 + co * a1));
            }
        }
    }

    /// `<bra| G |ket>` where `G` is the Hermitian generator of the rotation,
    /// `U(θ) = exp(-i θ G / 2)`. Controlled rotations use `P_b ⊗ Y`.
    pub(crate) fn generator_overlap(&self, bra: &StateVector, ket: &StateVector) -> Complex64 {
        let t = ket.mask(self.target);
        let c = self.control.map(|q| ket.mask(q)).unwrap_or(0);
        let (cm, want) = match self.kind {
            GateKind::CryOn1 => (c, c),
            GateKind::CryOn0 => (c, 0),
            _ => (0, 0),
        };
        let b = bra.amplitudes();
        let k = ket.amplitudes();
        let mut acc = ZERO;
        for i0 in 0..k.len() {
            if i0 & t != 0 || i0 & cm != want {
                continue;
            }
            let i1 = i0 | t;
            let (g0, g1) = match self.kind {
                GateKind::Rx => (k[i1], k[i0]),
                GateKind::Rz => (k[i0], -k[i1]),
                // Y|0> = i|1>, Y|1> = -i|0>
                _ => (-I * k[i1], I * k[i0]),
            };
            acc += b[i0].conj() * g0 + b[i1].conj() * g1;
        }
        acc
    }
}

/// Visits every amplitude pair differing only in the `t` bit whose `cm`-masked
/// bits equal `want`, replacing `(a0, a1)` by `f(a0, a1)`.
#[inline]
fn pair_loop<F>(amps: &mut [Complex64], t: usize, cm: usize, want: usize, f: F)
where
    F: Fn(Complex64, Complex64) -> (Complex64, Complex64),
{
    let dim = amps.len();
    // Blocks of 2t amplitudes: the first half has the t bit clear.
    let mut base = 0;
    while base < dim {
        for i0 in base..base + t {
            if i0 & cm != want {
                continue;
            }
            let i1 = i0 + t;
            let (n0, n1) = f(amps[i0], amps[i1]);
            amps[i0] = n0;
            amps[i1] = n1;
        }
        base += 2 * t;
    }
}

/// Applies a single validated-on-the-fly gate to `state`.
pub fn apply_gate(state: &mut StateVector, op: &GateOp, params: &[f64]) -> Result<()> {
    op.validate(state.n_qubits())?;
    let theta = op.resolve_angle(params)?;
    op.apply_resolved(state, theta, false);
    Ok(())
}
