use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Coefficient times a tensor product of single-site Paulis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub coefficient: Complex64,
    /// Sorted by qubit index, no repeats.
    sites: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn new(coefficient: f64, sites: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        Self::with_complex(Complex64::new(coefficient, 0.0), sites)
    }

    /// Allows a complex coefficient so that callers can represent (and have
    /// rejected) non-Hermitian input.
    pub fn with_complex(
        coefficient: Complex64,
        sites: impl IntoIterator<Item = (usize, Pauli)>,
    ) -> Result<Self> {
        let mut sites: Vec<(usize, Pauli)> = sites.into_iter().collect();
        if sites.is_empty() {
            return Err(Error::validation("a Pauli string needs at least one site"));
        }
        sites.sort_by_key(|&(q, _)| q);
        if sites.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::validation("repeated site in Pauli string"));
        }
        Ok(Self { coefficient, sites })
    }

    pub fn sites(&self) -> &[(usize, Pauli)] {
        &self.sites
    }

    pub fn max_site(&self) -> usize {
        self.sites.last().map(|&(q, _)| q).unwrap_or(0)
    }

    /// Masks describing `P = i^{n_y} X^{flip} Z^{sign}` in the amplitude
    /// index convention of `n_qubits` qubits.
    pub(crate) fn masks(&self, n_qubits: usize) -> PauliMasks {
        let mut m = PauliMasks { flip: 0, sign: 0, n_y: 0 };
        for &(q, p) in &self.sites {
            let bit = 1usize << (n_qubits - 1 - q);
            match p {
                Pauli::X => m.flip |= bit,
                Pauli::Z => m.sign |= bit,
                Pauli::Y => {
                    m.flip |= bit;
                    m.sign |= bit;
                    m.n_y += 1;
                }
            }
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficient.im == 0.0 {
            write!(f, "{}", self.coefficient.re)?;
        } else {
            write!(f, "({})", self.coefficient)?;
        }
        for (q, p) in &self.sites {
            write!(f, " {p:?}{q}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PauliMasks {
    pub flip: usize,
    pub sign: usize,
    pub n_y: u32,
}

impl PauliMasks {
    /// Phase picked up by basis state `i`: `P|i> = phase(i) |i ^ flip>`.
    #[inline]
    pub fn phase(&self, i: usize) -> Complex64 {
        let neg = (i & self.sign).count_ones() & 1 == 1;
        let s = if neg { -1.0 } else { 1.0 };
        match self.n_y % 4 {
            0 => Complex64::new(s, 0.0),
            1 => Complex64::new(0.0, s),
            2 => Complex64::new(-s, 0.0),
            _ => Complex64::new(0.0, -s),
        }
    }
}

/// Sum of Pauli strings, e.g. a Hamiltonian.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PauliSum {
    terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn new(terms: Vec<PauliString>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn push(&mut self, term: PauliString) {
        self.terms.push(term);
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        for t in &self.terms {
            if t.coefficient.im != 0.0 {
                return Err(Error::validation(format!(
                    "non-Hermitian term with complex coefficient: {t}"
                )));
            }
            if t.max_site() >= n_qubits {
                return Err(Error::structural(format!(
                    "term {t} acts outside a {n_qubits}-qubit register"
                )));
            }
        }
        Ok(())
    }

    /// `H|ψ>`.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let n = state.n_qubits();
        self.check(n)?;
        let src = state.amplitudes();
        let mut out = StateVector::blank(n)?;
        let dst = out.amplitudes_mut();
        for t in &self.terms {
            let m = t.masks(n);
            let c = t.coefficient;
            for (i, a) in src.iter().enumerate() {
                dst[i ^ m.flip] += c * m.phase(i) * a;
            }
        }
        Ok(out)
    }

    /// Dense real matrix in the computational basis. Fails when some term
    /// carries an odd number of `Y` factors (the matrix would be complex).
    pub fn dense_real(&self, n_qubits: usize) -> Result<nalgebra::DMatrix<f64>> {
        self.check(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut m = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for t in &self.terms {
            let pm = t.masks(n_qubits);
            if pm.n_y % 2 == 1 {
                return Err(Error::validation(format!("term {t} has a complex matrix")));
            }
            for col in 0..dim {
                let ph = t.coefficient * pm.phase(col);
                m[(col ^ pm.flip, col)] += ph.re;
            }
        }
        Ok(m)
    }
}

impl FromIterator<PauliString> for PauliSum {
    fn from_iter<I: IntoIterator<Item = PauliString>>(iter: I) -> Self {
        Self { terms: iter.into_iter().collect() }
    }
}

/// `<ψ|H|ψ>` for a Hermitian Pauli sum.
pub fn expectation(state: &StateVector, observable: &PauliSum) -> Result<f64> {
    let n = state.n_qubits();
    observable.check(n)?;
    let a = state.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for t in observable.terms() {
        let m = t.masks(n);
        let mut term = Complex64::new(0.0, 0.0);
        for (i, ai) in a.iter().enumerate() {
            term += a[i ^ m.flip].conj() * m.phase(i) * ai;
        }
        acc += t.coefficient * term;
    }
    if acc.im.abs() > 1e-10 {
        return Err(Error::validation(format!(
            "expectation has imaginary residue {}",
            acc.im
        )));
    }
    Ok(acc.re)
}
