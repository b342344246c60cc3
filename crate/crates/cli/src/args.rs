//! Command-line arguments. Every subcommand's arguments also serialise into
//! the run manifest, minus the output directory, so a manifest can be
//! replayed.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use qphase::phasemap::{Scheme, Slice, DEFAULT_SIGMA};
use qphase::qcnn::ConvGate;
use qphase::vqe::Recycling;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "qphase", version, about = "Quantum phase detection on the ANNNI chain")]
pub struct Cli {
    /// Worker threads for grid-point work.
    #[arg(long, global = true, env = "QPHASE_JOBS")]
    pub jobs: Option<usize>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Prepare VQE ground states over a (kappa, h) grid.
    Dataset(DatasetArgs),
    /// Train the convolutional classifier on marginal-axis labels.
    TrainQcnn(TrainArgs),
    /// Predict phase probabilities over the full grid.
    Eval(EvalArgs),
    /// Accuracy as a function of training-set size.
    SweepN(SweepArgs),
    /// Train the anomaly-detection encoder and map its score.
    Anomaly(AnomalyArgs),
    /// Pairwise state fidelities along a grid line.
    Fidelity(FidelityArgs),
    /// Sample the transition lines for plot overlays.
    Lines(LinesArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn set_out(&mut self, out: PathBuf) {
        let slot = match self {
            Command::Dataset(a) => &mut a.out.out,
            Command::TrainQcnn(a) => &mut a.out.out,
            Command::Eval(a) => &mut a.out.out,
            Command::SweepN(a) => &mut a.out.out,
            Command::Anomaly(a) => &mut a.out.out,
            Command::Fidelity(a) => &mut a.out.out,
            Command::Lines(a) => &mut a.out.out,
            Command::Replay(a) => &mut a.out,
        };
        *slot = out;
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Also render grid outputs as SVG heatmaps.
    #[arg(long)]
    pub svg: bool,
}

/// Grid resolution written as `KxH`, e.g. `32x32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_kappa: usize,
    pub n_h: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (k, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("grid {s:?} is not of the form KxH"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad grid size {v:?}"));
        Ok(Self { n_kappa: parse(k)?, n_h: parse(h)? })
    }
}

/// A `(kappa, h)` pair written as `k,h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub kappa: f64,
    pub h: f64,
}

impl FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (k, h) = s.split_once(',').ok_or_else(|| format!("point {s:?} is not of the form k,h"))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad coordinate {v:?}"));
        Ok(Self { kappa: parse(k)?, h: parse(h)? })
    }
}

fn parse_conv(s: &str) -> Result<ConvGate, String> {
    match s {
        "entangling" => Ok(ConvGate::Entangling),
        "product" => Ok(ConvGate::Product),
        other => Err(format!("unknown convolution {other:?} (entangling, product)")),
    }
}

fn parse_core<T: FromStr<Err = qphase::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: qphase::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DatasetArgs {
    #[arg(long, default_value_t = 6)]
    pub n_qubits: usize,
    #[arg(long, default_value = "32x32")]
    pub grid: GridSpec,
    /// Ansatz layers; defaults to N/2 + 3.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Drop the trailing rotation column of the ansatz.
    #[arg(long)]
    pub no_final_rotations: bool,
    #[arg(long, default_value_t = 5)]
    pub rounds: usize,
    /// ADAM steps per round.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value = "sweep", value_parser = parse_core::<Recycling>)]
    pub recycling: Recycling,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Compare against exact diagonalisation (N <= 14).
    #[arg(long)]
    pub validate: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Dataset file or a directory containing `dataset.bin`.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "g2", value_parser = parse_core::<Scheme>)]
    pub scheme: Scheme,
    /// Total number of training points.
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "entangling", value_parser = parse_conv)]
    pub conv: ConvGate,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Model file or a directory containing `model.json`.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "gc,g2,u", value_parser = parse_core::<Scheme>)]
    pub schemes: Vec<Scheme>,
    #[arg(long, value_delimiter = ',', default_value = "4,8,20,40")]
    pub n_list: Vec<usize>,
    /// Number of seeds per (scheme, n), starting at `--seed`.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value = "entangling", value_parser = parse_conv)]
    pub conv: ConvGate,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnomalyArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Reference point `kappa,h`; snapped to the nearest grid node.
    #[arg(long, default_value = "0.1,0.1")]
    pub reference: Point,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FidelityArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// `h=<value>` or `kappa=<value>`.
    #[arg(long, default_value = "h=0.3", value_parser = parse_core::<Slice>)]
    pub slice: Slice,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LinesArgs {
    #[arg(long, default_value_t = 512)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
