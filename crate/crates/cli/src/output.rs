//! Output directory handling: CSV grids, JSON summaries, optional SVG
//! heatmaps and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use qphase::dataset::sha256_hex;
use qphase::grid::Grid;
use qphase::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::args::Command;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub dataset_hash: Option<String>,
    /// Files written next to the manifest, sorted by name.
    pub outputs: Vec<FileDigest>,
    pub results: serde_json::Value,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Collects the files of one run and writes the manifest last.
pub struct OutDir {
    root: PathBuf,
    svg: bool,
    written: Vec<FileDigest>,
}

impl OutDir {
    pub fn create(root: &Path, svg: bool) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), svg, written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Records a file some other writer already produced.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let bytes = fs::read(self.path(name))?;
        self.written.push(FileDigest { path: name.to_string(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.path(name), bytes)?;
        self.written.push(FileDigest { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// A table with a header row and string cells.
    pub fn write_table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        self.write_bytes(name, &bytes)
    }

    /// One value per grid node as `kappa [1],h [1],<column>`, κ-major.
    pub fn write_grid(&mut self, name: &str, grid: &Grid, column: &str, values: &[f64]) -> Result<()> {
        let rows: Vec<Vec<String>> = grid
            .points()
            .zip(values)
            .map(|((k, h), v)| vec![k.to_string(), h.to_string(), fmt_value(*v)])
            .collect();
        self.write_table(name, &["kappa [1]", "h [1]", column], &rows)?;
        if self.svg {
            let svg_name = name.replace(".csv", ".svg");
            let svg = heatmap(grid, values, column);
            self.write_bytes(&svg_name, svg.as_bytes())?;
        }
        Ok(())
    }

    pub fn finish(mut self, mut manifest: RunManifest) -> Result<RunManifest> {
        self.written.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.outputs = self.written;
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        Ok(manifest)
    }
}

/// Missing values (`NaN`) become empty cells.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

const RAMP: [(f64, [f64; 3]); 5] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { return "#cccccc".into() };
    let i = RAMP.iter().rposition(|(s, _)| *s <= t).unwrap_or(0).min(RAMP.len() - 2);
    let (s0, c0) = RAMP[i];
    let (s1, c1) = RAMP[i + 1];
    let u = (t - s0) / (s1 - s0);
    let c: Vec<u8> = (0..3).map(|j| (c0[j] + u * (c1[j] - c0[j])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Plain heatmap, κ to the right and h upwards, colour scaled to the value
/// range.
pub fn heatmap(grid: &Grid, values: &[f64], title: &str) -> String {
    let cell = 12.0;
    let (nk, nh) = (grid.n_kappa(), grid.n_h());
    let (w, h) = (nk as f64 * cell, nh as f64 * cell);
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n",
        w + 20.0,
        h + 40.0
    );
    s += &format!(
        "<text x=\"10\" y=\"16\" font-size=\"12\" font-family=\"sans-serif\">{} [{} .. {}]</text>\n",
        xml_escape(title),
        fmt_value(lo),
        fmt_value(hi)
    );
    for (idx, v) in values.iter().enumerate() {
        let (i, j) = grid.coords(idx);
        let x = 10.0 + i as f64 * cell;
        let y = 30.0 + (nh - 1 - j) as f64 * cell;
        s += &format!(
            "<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\"/>\n",
            color((v - lo) / span)
        );
    }
    s += "</svg>\n";
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
