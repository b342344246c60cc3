use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the dense representation accepts.
pub const MAX_QUBITS: usize = 16;

/// Dense statevector of `n_qubits` qubits.
///
/// Basis ordering: qubit 0 is the most significant bit of the amplitude
/// index, so `|q0 q1 ... q_{n-1}>` maps to index `q0 * 2^(n-1) + ... + q_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::structural(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The vector must have length `2^n_qubits` and unit
    /// norm within 1e-10.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_size(n_qubits)?;
        if amps.len() != 1usize << n_qubits {
            return Err(Error::structural(format!(
                "expected {} amplitudes for {n_qubits} qubits, got {}",
                1usize << n_qubits,
                amps.len()
            )));
        }
        let state = Self { n_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::validation(format!("state norm^2 is {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Real amplitudes, normalised on the way in.
    pub fn from_real(n_qubits: usize, amps: &[f64]) -> Result<Self> {
        let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::validation("cannot normalise a zero vector"));
        }
        Self::from_amplitudes(
            n_qubits,
            amps.iter().map(|a| Complex64::new(a / norm, 0.0)).collect(),
        )
    }

    /// All-zero amplitudes; not a physical state, used for adjoint vectors.
    pub(crate) fn blank(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        Ok(Self {
            n_qubits,
            amps: vec![Complex64::new(0.0, 0.0); 1usize << n_qubits],
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_dim(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Bit mask of `qubit` inside an amplitude index.
    #[inline]
    pub(crate) fn mask(&self, qubit: usize) -> usize {
        1usize << (self.n_qubits - 1 - qubit)
    }

    pub(crate) fn check_same_dim(&self, other: &StateVector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::structural(format!(
                "dimension mismatch: {} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(())
    }

    /// Full computational-basis distribution.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal distribution over `qubits`. The first listed qubit is the most
    /// significant bit of the outcome index.
    pub fn basis_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_qubit_list(qubits)?;
        let masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        let mut out = vec![0.0; 1usize << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            out[outcome_index(i, &masks)] += a.norm_sqr();
        }
        Ok(out)
    }

    /// `<Z_q>`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit_list(&[qubit])?;
        let m = self.mask(qubit);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & m == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    pub(crate) fn check_qubit_list(&self, qubits: &[usize]) -> Result<()> {
        for (k, &q) in qubits.iter().enumerate() {
            if q >= self.n_qubits {
                return Err(Error::structural(format!(
                    "qubit {q} out of range for {} qubits",
                    self.n_qubits
                )));
            }
            if qubits[..k].contains(&q) {
                return Err(Error::validation(format!("duplicate qubit index {q}")));
            }
        }
        Ok(())
    }
}

/// Packs the bits selected by `masks` into an outcome index, first mask most
/// significant.
#[inline]
pub(crate) fn outcome_index(i: usize, masks: &[usize]) -> usize {
    masks
        .iter()
        .fold(0usize, |acc, &m| (acc << 1) | usize::from(i & m != 0))
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::structural("a register needs at least one qubit"));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::Resource(format!(
            "{n_qubits} qubits exceeds the dense limit of {MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}
