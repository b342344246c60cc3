//! ANNNI chain Hamiltonian and its exact-diagonalisation oracle.
//!
//! With open boundaries on `N` spins:
//!
//! ```text
//! H = -Σ_{i<N-1} X_i X_{i+1} + κ Σ_{i<N-2} X_i X_{i+2} - h Σ_i Z_i
//! ```
//!
//! Nearest-neighbour coupling is ferromagnetic and the next-nearest one
//! antiferromagnetic, so the two compete for κ > 0. At `h = 0` the classical
//! ground state switches from the aligned configuration to the `++--` antiphase
//! at κ = 1/2.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{Pauli, PauliString, PauliSum, StateVector};

/// Largest chain accepted by [`exact_spectrum`].
pub const MAX_EXACT_SPINS: usize = 14;

/// Point in the ANNNI parameter plane (J = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnniParams {
    pub n_spins: usize,
    pub kappa: f64,
    pub h: f64,
}

impl AnnniParams {
    pub fn new(n_spins: usize, kappa: f64, h: f64) -> Result<Self> {
        let p = Self { n_spins, kappa, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins < 2 || self.n_spins % 2 != 0 {
            return Err(Error::validation(format!(
                "the chain length must be even and at least 2, got {}",
                self.n_spins
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::validation(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(Error::validation(format!("h must be >= 0, got {}", self.h)));
        }
        Ok(())
    }
}

/// ANNNI terms for any chain length, parity unchecked.
pub fn annni_terms(n_spins: usize, kappa: f64, h: f64) -> PauliSum {
    let mut terms = Vec::with_capacity(3 * n_spins);
    let string = |c: f64, sites: &[(usize, Pauli)]| {
        PauliString::new(c, sites.iter().copied()).expect("sites are distinct and non-empty")
    };
    for i in 0..n_spins.saturating_sub(1) {
        terms.push(string(-1.0, &[(i, Pauli::X), (i + 1, Pauli::X)]));
    }
    if kappa != 0.0 {
        for i in 0..n_spins.saturating_sub(2) {
            terms.push(string(kappa, &[(i, Pauli::X), (i + 2, Pauli::X)]));
        }
    }
    if h != 0.0 {
        for i in 0..n_spins {
            terms.push(string(-h, &[(i, Pauli::Z)]));
        }
    }
    PauliSum::new(terms)
}

/// The validated ANNNI Hamiltonian as a Pauli sum. Zero-coefficient groups
/// (κ = 0 or h = 0) are omitted.
pub fn build_annni(p: &AnnniParams) -> Result<PauliSum> {
    p.validate()?;
    Ok(annni_terms(p.n_spins, p.kappa, p.h))
}

/// Lowest eigenpairs of the ANNNI Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending.
    pub energies: Vec<f64>,
    pub states: Option<Vec<StateVector>>,
    /// Difference between the two lowest eigenvalues of the full spectrum.
    pub gap: f64,
}

impl SpectrumResult {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Number of returned levels within `tol` of the ground energy.
    pub fn ground_multiplicity(&self, tol: f64) -> usize {
        let e0 = self.energies[0];
        self.energies.iter().take_while(|&&e| e - e0 <= tol).count()
    }
}

/// Exact lowest `m` eigenvalues (and optionally eigenvectors).
///
/// The Hamiltonian conserves the parity `Π Z_i`, so each parity sector is
/// diagonalised separately and the results merged.
pub fn exact_spectrum(p: &AnnniParams, m: usize, want_states: bool) -> Result<SpectrumResult> {
    p.validate()?;
    if m == 0 {
        return Err(Error::validation("requested zero eigenvalues"));
    }
    if p.n_spins > MAX_EXACT_SPINS {
        return Err(Error::Resource(format!(
            "exact diagonalisation is limited to {MAX_EXACT_SPINS} spins, got {}",
            p.n_spins
        )));
    }
    let n = p.n_spins;
    let h = build_annni(p)?;
    let dim = 1usize << n;

    // (energy, sector, column) for every eigenpair.
    let mut levels: Vec<(f64, usize, usize)> = Vec::with_capacity(dim);
    let mut sectors = Vec::with_capacity(2);
    for parity in 0..2u32 {
        let basis: Vec<usize> = (0..dim).filter(|i| i.count_ones() % 2 == parity).collect();
        let mut local = vec![usize::MAX; dim];
        for (k, &i) in basis.iter().enumerate() {
            local[i] = k;
        }
        let mut mat = DMatrix::<f64>::zeros(basis.len(), basis.len());
        for t in h.terms() {
            let masks = t.masks(n);
            for (col, &i) in basis.iter().enumerate() {
                let v = t.coefficient * masks.phase(i);
                mat[(local[i ^ masks.flip], col)] += v.re;
            }
        }
        let eig = SymmetricEigen::new(mat);
        for (col, &e) in eig.eigenvalues.iter().enumerate() {
            levels.push((e, sectors.len(), col));
        }
        sectors.push((basis, eig.eigenvectors));
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));

    let gap = levels[1].0 - levels[0].0;
    let take = m.min(levels.len());
    let energies: Vec<f64> = levels[..take].iter().map(|l| l.0).collect();
    let states = if want_states {
        let mut out = Vec::with_capacity(take);
        for &(_, s, col) in &levels[..take] {
            let (basis, vecs) = &sectors[s];
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            for (k, &i) in basis.iter().enumerate() {
                amps[i] = Complex64::new(vecs[(k, col)], 0.0);
            }
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in &mut amps {
                *a /= norm;
            }
            out.push(StateVector::from_amplitudes(n, amps)?);
        }
        Some(out)
    } else {
        None
    };
    Ok(SpectrumResult { energies, states, gap })
}

/// `|(E_vqe - E_exact) / E_exact|`.
pub fn relative_energy_error(e_vqe: f64, e_exact: f64) -> Result<f64> {
    if e_exact == 0.0 {
        return Err(Error::validation(
            "relative error undefined for a zero exact energy",
        ));
    }
    Ok(((e_vqe - e_exact) / e_exact).abs())
}
