//! Analytical phase geometry of the ANNNI chain: transition lines, truth
//! labels, training-set samplers on the integrable axes, and fidelity
//! clustering along a slice of the grid.

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::GroundStateDataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{Grid, H_RANGE, KAPPA_RANGE};
use crate::qsim::{fidelity, StateVector};

/// The multicritical value of κ where the two second-order lines meet.
pub const KAPPA_MULTICRITICAL: f64 = 0.5;

const WINDOW_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseLabel {
    Ferromagnetic,
    Paramagnetic,
    Antiphase,
}

impl PhaseLabel {
    pub const ALL: [PhaseLabel; 3] = [
        PhaseLabel::Ferromagnetic,
        PhaseLabel::Paramagnetic,
        PhaseLabel::Antiphase,
    ];

    /// Position in `ALL`, also the one-hot slot.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn one_hot(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.index()] = 1.0;
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseLabel::Ferromagnetic => "ferromagnetic",
            PhaseLabel::Paramagnetic => "paramagnetic",
            PhaseLabel::Antiphase => "antiphase",
        }
    }
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Ferromagnetic/paramagnetic line for `0 <= κ < 0.5`.
///
/// Evaluated in the rationalised form `2(1-2κ) / (1 + √r)` with
/// `r = (1-3κ+4κ²)/(1-κ)`, which is finite at κ = 0 (value 1).
pub fn h_ising(kappa: f64) -> Result<f64> {
    if !(0.0..KAPPA_MULTICRITICAL).contains(&kappa) {
        return Err(Error::domain(format!("h_I needs 0 <= kappa < 0.5, got {kappa}")));
    }
    let r = (1.0 - 3.0 * kappa + 4.0 * kappa * kappa) / (1.0 - kappa);
    Ok(2.0 * (1.0 - 2.0 * kappa) / (1.0 + r.sqrt()))
}

/// Paramagnetic/antiphase line for `0.5 <= κ`. The endpoint κ = 0.5 is
/// accepted and returns the limit 0.
pub fn h_commensurate(kappa: f64) -> Result<f64> {
    if !(kappa >= KAPPA_MULTICRITICAL && kappa.is_finite()) {
        return Err(Error::domain(format!("h_C needs kappa >= 0.5, got {kappa}")));
    }
    Ok(1.05 * ((kappa - 0.5) * (kappa - 0.1)).sqrt())
}

/// Upper edge of the floating phase (overlay only).
pub fn h_bkt(kappa: f64) -> f64 {
    1.05 * (kappa - 0.5)
}

/// Peschel-Emery disorder line (overlay only).
pub fn h_pe(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!("h_PE needs kappa > 0, got {kappa}")));
    }
    Ok(0.25 / kappa - kappa)
}

fn check_window(kappa: f64, h: f64) -> Result<()> {
    let inside = |x: f64, (lo, hi): (f64, f64)| x >= lo - WINDOW_SLACK && x <= hi + WINDOW_SLACK;
    if inside(kappa, KAPPA_RANGE) && inside(h, H_RANGE) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "(kappa={kappa}, h={h}) lies outside [0,1] x [0,2]"
        )))
    }
}

/// Three-phase truth label. Points exactly on a line take the lower-h phase;
/// on κ = 0.5 only `h = 0` is ferromagnetic.
pub fn analytical_label(kappa: f64, h: f64) -> Result<PhaseLabel> {
    check_window(kappa, h)?;
    let label = if kappa < KAPPA_MULTICRITICAL {
        if h <= h_ising(kappa.max(0.0))? {
            PhaseLabel::Ferromagnetic
        } else {
            PhaseLabel::Paramagnetic
        }
    } else if kappa > KAPPA_MULTICRITICAL {
        if h <= h_commensurate(kappa)? {
            PhaseLabel::Antiphase
        } else {
            PhaseLabel::Paramagnetic
        }
    } else if h <= 0.0 {
        PhaseLabel::Ferromagnetic
    } else {
        PhaseLabel::Paramagnetic
    };
    Ok(label)
}

/// Label on one of the two integrable axes. Errors off the axes.
pub fn axis_label(kappa: f64, h: f64) -> Result<PhaseLabel> {
    check_window(kappa, h)?;
    if kappa == 0.0 {
        Ok(if h <= 1.0 { PhaseLabel::Ferromagnetic } else { PhaseLabel::Paramagnetic })
    } else if h == 0.0 {
        Ok(if kappa <= KAPPA_MULTICRITICAL {
            PhaseLabel::Ferromagnetic
        } else {
            PhaseLabel::Antiphase
        })
    } else {
        Err(Error::validation(format!(
            "(kappa={kappa}, h={h}) is on neither marginal axis"
        )))
    }
}

/// Truth labels for every node, flat index order.
pub fn truth_labels(grid: &Grid) -> Result<Vec<PhaseLabel>> {
    grid.points().map(|(k, h)| analytical_label(k, h)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Gaussians around the two axis critical points.
    Gc,
    /// Gaussians around the middle of each axis phase.
    G2,
    /// Uniform on both axis segments.
    U,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Gc, Scheme::G2, Scheme::U];

    pub fn anchors(self) -> &'static [(f64, f64)] {
        match self {
            Scheme::Gc => &[(0.0, 1.0), (0.5, 0.0)],
            Scheme::G2 => &[(0.0, 1.5), (0.0, 0.5), (0.25, 0.0), (0.75, 0.0)],
            Scheme::U => &[],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gc => "gc",
            Scheme::G2 => "g2",
            Scheme::U => "u",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gc" => Ok(Scheme::Gc),
            "g2" => Ok(Scheme::G2),
            "u" => Ok(Scheme::U),
            other => Err(Error::validation(format!("unknown sampling scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub scheme: Scheme,
    /// Total number of points.
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(scheme: Scheme, n: usize, seed: u64) -> Self {
        Self { scheme, n, sigma: DEFAULT_SIGMA, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub kappa: f64,
    pub h: f64,
    pub label: PhaseLabel,
}

impl LabeledPoint {
    pub fn one_hot(&self) -> [f64; 3] {
        self.label.one_hot()
    }
}

/// Splits `n` into `parts` nearly equal counts, remainder to the front.
fn split(n: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| n / parts + usize::from(i < n % parts)).collect()
}

/// Draws a marginal training set. Gaussian schemes move each point along its
/// anchor's axis only and clip to the segment, so every sample sits exactly on
/// `κ = 0` or `h = 0`.
pub fn sample_training_set(spec: &SamplerSpec) -> Result<Vec<LabeledPoint>> {
    if spec.n == 0 {
        return Err(Error::validation("a training set needs at least one point"));
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::validation("sigma must be finite and non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coords = Vec::with_capacity(spec.n);
    match spec.scheme {
        Scheme::U => {
            let counts = split(spec.n, 2);
            for _ in 0..counts[0] {
                coords.push((0.0, rng.random_range(H_RANGE.0..=H_RANGE.1)));
            }
            for _ in 0..counts[1] {
                coords.push((rng.random_range(KAPPA_RANGE.0..=KAPPA_RANGE.1), 0.0));
            }
        }
        scheme => {
            let anchors = scheme.anchors();
            for (&(k0, h0), count) in anchors.iter().zip(split(spec.n, anchors.len())) {
                for _ in 0..count {
                    let z: f64 = rng.sample(StandardNormal);
                    let d = spec.sigma * z;
                    coords.push(if k0 == 0.0 {
                        (0.0, (h0 + d).clamp(H_RANGE.0, H_RANGE.1))
                    } else {
                        ((k0 + d).clamp(KAPPA_RANGE.0, KAPPA_RANGE.1), 0.0)
                    });
                }
            }
        }
    }
    coords
        .into_iter()
        .map(|(kappa, h)| Ok(LabeledPoint { kappa, h, label: axis_label(kappa, h)? }))
        .collect()
}

/// A line through the grid at fixed h or fixed κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Slice {
    H(f64),
    Kappa(f64),
}

impl std::str::FromStr for Slice {
    type Err = Error;

    /// Parses `h=0.3` or `kappa=0.6` (`k=` also accepted).
    fn from_str(s: &str) -> Result<Self> {
        let (axis, value) = s
            .split_once('=')
            .ok_or_else(|| Error::validation(format!("slice {s:?} is not of the form axis=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("slice value {value:?} is not a number")))?;
        match axis.trim() {
            "h" => Ok(Slice::H(value)),
            "kappa" | "k" => Ok(Slice::Kappa(value)),
            other => Err(Error::validation(format!("unknown slice axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySlice {
    /// Grid node the slice snapped to, as `(axis name, value)`.
    pub fixed: (&'static str, f64),
    /// Coordinates along the varying axis.
    pub coords: Vec<f64>,
    /// Flat grid indices of the slice points.
    pub indices: Vec<usize>,
    /// Truth labels of the slice points.
    pub labels: Vec<PhaseLabel>,
    /// Symmetric pairwise fidelities, row-major.
    pub matrix: Vec<Vec<f64>>,
}

/// Pairwise fidelities between the VQE states on a slice. The slice snaps to
/// the nearest grid row.
pub fn fidelity_matrix(ds: &GroundStateDataset, slice: Slice, exec: Exec) -> Result<FidelitySlice> {
    let grid = &ds.grid;
    let (fixed, coords, indices) = match slice {
        Slice::H(h) => {
            check_window(0.0, h)?;
            let j = grid.nearest_h_row(h);
            let idx: Vec<usize> = (0..grid.n_kappa()).map(|i| grid.index(i, j)).collect();
            (("h", grid.h[j]), grid.kappa.clone(), idx)
        }
        Slice::Kappa(k) => {
            check_window(k, 0.0)?;
            let i = grid.nearest_kappa_row(k);
            let idx: Vec<usize> = (0..grid.n_h()).map(|j| grid.index(i, j)).collect();
            (("kappa", grid.kappa[i]), grid.h.clone(), idx)
        }
    };
    let states: Vec<StateVector> = exec.try_map(indices.len(), |a| ds.state(indices[a]))?;
    let labels = indices
        .iter()
        .map(|&i| {
            let (k, h) = grid.point(i);
            analytical_label(k, h)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = states.len();
    let upper: Vec<Vec<f64>> = exec.try_map(m, |a| {
        (a..m).map(|b| fidelity(&states[a], &states[b])).collect::<Result<Vec<_>>>()
    })?;
    let mut matrix = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in a..m {
            let f = if a == b { 1.0 } else { upper[a][b - a] };
            matrix[a][b] = f;
            matrix[b][a] = f;
        }
    }
    Ok(FidelitySlice { fixed, coords, indices, labels, matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Mean fidelity over off-diagonal pairs with equal labels.
    pub within_mean: f64,
    /// Mean fidelity over pairs with different labels.
    pub cross_mean: f64,
    /// Number of maximal runs of equal labels along the slice.
    pub n_blocks: usize,
}

impl ClusterStats {
    pub fn contrast(&self) -> f64 {
        self.within_mean - self.cross_mean
    }
}

/// Block structure of a fidelity matrix under a label partition.
pub fn cluster_stats(matrix: &[Vec<f64>], labels: &[PhaseLabel]) -> Result<ClusterStats> {
    let m = labels.len();
    if matrix.len() != m || matrix.iter().any(|r| r.len() != m) {
        return Err(Error::structural("fidelity matrix and label list disagree in size"));
    }
    let (mut within, mut n_within, mut cross, mut n_cross) = (0.0, 0usize, 0.0, 0usize);
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            if labels[a] == labels[b] {
                within += matrix[a][b];
                n_within += 1;
            } else {
                cross += matrix[a][b];
                n_cross += 1;
            }
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
    let n_blocks = if m == 0 { 0 } else { 1 + labels.windows(2).filter(|w| w[0] != w[1]).count() };
    Ok(ClusterStats {
        within_mean: mean(within, n_within),
        cross_mean: mean(cross, n_cross),
        n_blocks,
    })
}

/// Fraction of positions where `predicted` matches `truth`; `None`
/// predictions never count.
pub fn accuracy(predicted: &[Option<PhaseLabel>], truth: &[PhaseLabel]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::structural("prediction and truth grids differ in size or are empty"));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| **p == Some(**t)).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Distance in h from `(κ, h)` to the nearest truth-defining line, or to the
/// κ = 0.5 vertical for points near the multicritical value.
pub fn distance_to_boundary(kappa: f64, h: f64) -> Result<f64> {
    check_window(kappa, h)?;
    let line = if kappa < KAPPA_MULTICRITICAL {
        h_ising(kappa.max(0.0))?
    } else {
        h_commensurate(kappa)?
    };
    Ok((h - line).abs().min((kappa - KAPPA_MULTICRITICAL).abs()))
}
