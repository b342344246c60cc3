//! The persisted ground-state dataset.
//!
//! File layout (all integers and floats little-endian):
//!
//! | bytes            | content                                        |
//! |------------------|------------------------------------------------|
//! | 8                | magic `QPHDSET\0`                              |
//! | 4                | `u32` length `L` of the JSON header             |
//! | L                | UTF-8 JSON [`DatasetHeader`]                   |
//! | per grid point   | record, flat index order (κ-major)             |
//!
//! Each record is `n_params` `f64` parameters, then `f64` energy, `f64`
//! relative energy error, `f64` exact-state fidelity (both `NaN` when not
//! validated), `u64` converged steps and `i64` seeding neighbour (`-1` for
//! none).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::Grid;
use crate::qsim::StateVector;
use crate::vqe::{HeaAnsatz, Recycling, VqeConfig, VqeOutcome};

pub const MAGIC: &[u8; 8] = b"QPHDSET\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub params: Vec<f64>,
    pub energy: f64,
    pub delta_e: Option<f64>,
    pub fidelity_exact: Option<f64>,
    pub converged_steps: u64,
    /// Flat index of the grid point whose parameters seeded this one.
    pub seeded_from: Option<usize>,
}

impl DatasetEntry {
    pub(crate) fn from_outcome(o: VqeOutcome, seeded_from: Option<usize>) -> Self {
        Self {
            params: o.params,
            energy: o.energy,
            delta_e: None,
            fidelity_exact: None,
            converged_steps: o.converged_steps as u64,
            seeded_from,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateDataset {
    pub ansatz: HeaAnsatz,
    pub grid: Grid,
    pub config: VqeConfig,
    pub recycling: Recycling,
    /// One entry per grid point, flat index order.
    pub entries: Vec<DatasetEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub n_qubits: usize,
    pub depth: usize,
    pub final_rotations: bool,
    pub n_params: usize,
    pub grid: Grid,
    pub config: VqeConfig,
    pub recycling: Recycling,
    pub seed: u64,
    pub n_points: usize,
}

impl GroundStateDataset {
    pub fn n_qubits(&self) -> usize {
        self.ansatz.n_qubits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Prepared VQE state of grid point `idx`.
    pub fn state(&self, idx: usize) -> Result<StateVector> {
        let entry = self.entries.get(idx).ok_or_else(|| {
            Error::structural(format!("grid index {idx} out of range ({} points)", self.len()))
        })?;
        self.ansatz.circuit().run(&entry.params)
    }

    /// All prepared states, flat index order.
    pub fn states(&self, exec: Exec) -> Result<Vec<StateVector>> {
        let circuit = self.ansatz.circuit();
        exec.try_map(self.len(), |i| circuit.run(&self.entries[i].params))
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            format_version: FORMAT_VERSION,
            n_qubits: self.ansatz.n_qubits,
            depth: self.ansatz.depth,
            final_rotations: self.ansatz.final_rotations,
            n_params: self.ansatz.n_params(),
            grid: self.grid.clone(),
            config: self.config,
            recycling: self.recycling,
            seed: self.config.seed,
            n_points: self.entries.len(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&self.header())?;
        w.write_all(MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
        for e in &self.entries {
            for p in &e.params {
                w.write_all(&p.to_le_bytes())?;
            }
            w.write_all(&e.energy.to_le_bytes())?;
            w.write_all(&opt(e.delta_e).to_le_bytes())?;
            w.write_all(&opt(e.fidelity_exact).to_le_bytes())?;
            w.write_all(&e.converged_steps.to_le_bytes())?;
            let seeded = e.seeded_from.map_or(-1i64, |i| i as i64);
            w.write_all(&seeded.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a dataset file (bad magic)".into()));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut header)?;
        let header: DatasetHeader = serde_json::from_slice(&header)?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset format version {}",
                header.format_version
            )));
        }
        let ansatz =
            HeaAnsatz::new(header.n_qubits, header.depth)?.with_final_rotations(header.final_rotations);
        if ansatz.n_params() != header.n_params || header.grid.len() != header.n_points {
            return Err(Error::Format("inconsistent dataset header".into()));
        }
        let grid = Grid::new(header.grid.kappa, header.grid.h)?;
        let mut f64_buf = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut f64_buf)?;
            Ok(f64_buf)
        };
        let opt = |v: f64| if v.is_nan() { None } else { Some(v) };
        let mut entries = Vec::with_capacity(header.n_points);
        for _ in 0..header.n_points {
            let params = (0..header.n_params)
                .map(|_| next(&mut r).map(f64::from_le_bytes))
                .collect::<Result<Vec<_>>>()?;
            let energy = f64::from_le_bytes(next(&mut r)?);
            let delta_e = opt(f64::from_le_bytes(next(&mut r)?));
            let fidelity_exact = opt(f64::from_le_bytes(next(&mut r)?));
            let converged_steps = u64::from_le_bytes(next(&mut r)?);
            let seeded = i64::from_le_bytes(next(&mut r)?);
            entries.push(DatasetEntry {
                params,
                energy,
                delta_e,
                fidelity_exact,
                converged_steps,
                seeded_from: usize::try_from(seeded).ok(),
            });
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after dataset records".into()));
        }
        Ok(Self {
            ansatz,
            grid,
            config: header.config,
            recycling: header.recycling,
            entries,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// SHA-256 of the serialised dataset, hex encoded.
    pub fn hash(&self) -> String {
        sha256_hex(&self.to_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
