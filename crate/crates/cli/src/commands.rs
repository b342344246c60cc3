use std::path::{Path, PathBuf};

use log::{info, warn};
use qphase::anomaly::{
    score_map, train_encoder, warn_if_near_boundary, EncoderArchitecture, EncoderConfig, EncoderInit,
    EncoderModel,
};
use qphase::dataset::sha256_hex;
use qphase::exec::Exec;
use qphase::grid::{linspace, Grid};
use qphase::phasemap::{
    analytical_label, cluster_stats, fidelity_matrix, h_bkt, h_commensurate, h_ising, h_pe,
    sample_training_set, truth_labels, PhaseLabel, SamplerSpec, KAPPA_MULTICRITICAL,
};
use qphase::qcnn::{evaluate, PhasePrediction, QcnnModel, TrainConfig};
use qphase::qsim::StateVector;
use qphase::vqe::{build_dataset, validate_dataset, GroundStateDataset, HeaAnsatz, VqeConfig};
use qphase::{Error, Result};
use serde_json::json;

use crate::args::*;
use crate::output::{fmt_value, FileDigest, OutDir, RunManifest};

pub const DATASET_FILE: &str = "dataset.bin";
pub const MODEL_FILE: &str = "model.json";

/// Runs one subcommand, writing its outputs and manifest.
pub fn run(command: Command, exec: Exec) -> Result<RunManifest> {
    match command {
        Command::Replay(r) => {
            let mut recorded = RunManifest::load(&r.manifest)?.command;
            recorded.set_out(r.out);
            run(recorded, exec)
        }
        Command::Dataset(ref a) => dataset(a, &command, exec),
        Command::TrainQcnn(ref a) => train_qcnn(a, &command, exec),
        Command::Eval(ref a) => eval(a, &command, exec),
        Command::SweepN(ref a) => sweep_n(a, &command, exec),
        Command::Anomaly(ref a) => anomaly(a, &command, exec),
        Command::Fidelity(ref a) => fidelity(a, &command, exec),
        Command::Lines(ref a) => lines(a, &command),
    }
}

fn manifest(command: &Command, seeds: Vec<u64>, inputs: Vec<FileDigest>) -> RunManifest {
    RunManifest {
        tool: "qphase".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.clone(),
        seeds,
        inputs,
        dataset_hash: None,
        outputs: Vec::new(),
        results: serde_json::Value::Null,
    }
}

fn resolve(path: &Path, default_name: &str) -> PathBuf {
    if path.is_dir() {
        path.join(default_name)
    } else {
        path.to_path_buf()
    }
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path)?;
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

struct Loaded {
    ds: GroundStateDataset,
    states: Vec<StateVector>,
    hash: String,
    input: FileDigest,
}

fn load_dataset(path: &Path, exec: Exec) -> Result<Loaded> {
    let file = resolve(path, DATASET_FILE);
    let ds = GroundStateDataset::load(&file)?;
    let states = ds.states(exec)?;
    let hash = ds.hash();
    Ok(Loaded { ds, states, hash, input: digest(&file)? })
}

fn dataset(a: &DatasetArgs, command: &Command, exec: Exec) -> Result<RunManifest> {
    let depth = a.depth.unwrap_or_else(|| HeaAnsatz::default_depth(a.n_qubits));
    let ansatz = HeaAnsatz::new(a.n_qubits, depth)?.with_final_rotations(!a.no_final_rotations);
    let grid = Grid::uniform(a.grid.n_kappa, a.grid.n_h)?;
    let cfg = VqeConfig { rounds: a.rounds, steps_per_round: a.steps, seed: a.seed, ..VqeConfig::default() };
    if a.validate && a.n_qubits > qphase::hamiltonian::MAX_EXACT_SPINS {
        return Err(Error::Resource(format!(
            "validation needs exact diagonalisation, limited to {} spins",
            qphase::hamiltonian::MAX_EXACT_SPINS
        )));
    }
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    info!("solving {} grid points with {} parameters each", grid.len(), ansatz.n_params());
    let mut ds = build_dataset(ansatz, grid.clone(), &cfg, a.recycling, exec)?;
    let mut results = json!({ "n_points": grid.len(), "n_params": ansatz.n_params() });
    if a.validate {
        let report = validate_dataset(&mut ds, exec)?;
        out.write_grid("delta_e.csv", &grid, "delta_e [1]", &report.delta_e)?;
        out.write_grid("fidelity_exact.csv", &grid, "fidelity [1]", &report.fidelity)?;
        out.write_grid("exact_energy.csv", &grid, "energy [J]", &report.exact_energy)?;
        let n = report.delta_e.len() as f64;
        let below = report.delta_e.iter().filter(|&&d| d < 0.01).count() as f64 / n;
        results["fraction_delta_e_below_0.01"] = json!(below);
        results["max_delta_e"] = json!(report.delta_e.iter().cloned().fold(0.0, f64::max));
        results["mean_delta_e"] = json!(report.delta_e.iter().sum::<f64>() / n);
        results["mean_fidelity"] = json!(report.fidelity.iter().sum::<f64>() / n);
    }
    let energies: Vec<f64> = ds.entries.iter().map(|e| e.energy).collect();
    out.write_grid("energy.csv", &grid, "energy [J]", &energies)?;
    ds.save(out.path(DATASET_FILE))?;
    out.record(DATASET_FILE)?;
    let mut m = manifest(command, vec![a.seed], Vec::new());
    m.dataset_hash = Some(ds.hash());
    m.results = results;
    out.finish(m)
}

fn train_qcnn(a: &TrainArgs, command: &Command, exec: Exec) -> Result<RunManifest> {
    let spec = SamplerSpec { scheme: a.scheme, n: a.n, sigma: a.sigma, seed: a.seed };
    let points = sample_training_set(&spec)?;
    let cfg = TrainConfig { epochs: a.epochs, lr: a.lr, seed: a.seed, conv_gate: a.conv, ..TrainConfig::default() };
    cfg.validate()?;
    let data = load_dataset(&a.dataset, exec)?;
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let model = QcnnModel::fit(&data.ds.grid, &data.states, &data.hash, &points, &cfg, exec)?;
    model.save(out.path(MODEL_FILE))?;
    out.record(MODEL_FILE)?;
    let loss: Vec<Vec<String>> = model
        .loss_trace
        .iter()
        .enumerate()
        .map(|(e, l)| vec![e.to_string(), l.to_string()])
        .collect();
    out.write_table("loss.csv", &["epoch [1]", "loss [nats]"], &loss)?;
    let tp: Vec<Vec<String>> = model
        .training_points
        .iter()
        .map(|p| {
            vec![
                p.requested_kappa.to_string(),
                p.requested_h.to_string(),
                p.kappa.to_string(),
                p.h.to_string(),
                p.grid_index.to_string(),
                p.label.to_string(),
            ]
        })
        .collect();
    out.write_table(
        "training_points.csv",
        &["requested_kappa [1]", "requested_h [1]", "kappa [1]", "h [1]", "grid_index [1]", "label [class]"],
        &tp,
    )?;
    let mut m = manifest(command, vec![a.seed], vec![data.input]);
    m.dataset_hash = Some(data.hash);
    m.results = json!({
        "initial_loss": model.loss_trace.first(),
        "final_loss": model.loss_trace.last(),
        "n_params": model.architecture.n_params,
    });
    out.finish(m)
}

/// Label changes between neighbouring nodes, placed at the edge midpoint.
fn boundary_rows(grid: &Grid, labels: &[PhaseLabel]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for i in 0..grid.n_kappa() {
        for j in 0..grid.n_h() {
            let here = labels[grid.index(i, j)];
            if j + 1 < grid.n_h() {
                let up = labels[grid.index(i, j + 1)];
                if up != here {
                    let h = 0.5 * (grid.h[j] + grid.h[j + 1]);
                    rows.push(vec!["h".into(), grid.kappa[i].to_string(), h.to_string(), here.to_string(), up.to_string()]);
                }
            }
            if i + 1 < grid.n_kappa() {
                let right = labels[grid.index(i + 1, j)];
                if right != here {
                    let k = 0.5 * (grid.kappa[i] + grid.kappa[i + 1]);
                    rows.push(vec!["kappa".into(), k.to_string(), grid.h[j].to_string(), here.to_string(), right.to_string()]);
                }
            }
        }
    }
    rows
}

fn eval(a: &EvalArgs, command: &Command, exec: Exec) -> Result<RunManifest> {
    let data = load_dataset(&a.dataset, exec)?;
    let model_file = resolve(&a.model, MODEL_FILE);
    let model = QcnnModel::load(&model_file)?;
    if model.dataset_hash != data.hash {
        warn!("model was trained on a different dataset ({})", model.dataset_hash);
    }
    let grid = &data.ds.grid;
    let truth = truth_labels(grid)?;
    let ev = evaluate(&model.architecture, &model.params, &data.states, &truth, exec)?;
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let names = ["p_garbage", "p_ferromagnetic", "p_paramagnetic", "p_antiphase"];
    for (o, name) in names.iter().enumerate() {
        let v: Vec<f64> = ev.predictions.iter().map(|p| p.p[o]).collect();
        out.write_grid(&format!("p{o}.csv"), grid, &format!("{name} [1]"), &v)?;
    }
    let predicted: Vec<PhaseLabel> = ev.predictions.iter().map(|p| p.label).collect();
    let as_index = |l: &[PhaseLabel]| l.iter().map(|x| x.index() as f64).collect::<Vec<_>>();
    out.write_grid("label.csv", grid, "label [class]", &as_index(&predicted))?;
    out.write_grid("truth.csv", grid, "label [class]", &as_index(&truth))?;
    out.write_table(
        "boundary.csv",
        &["edge", "kappa [1]", "h [1]", "from [class]", "to [class]"],
        &boundary_rows(grid, &predicted),
    )?;
    let mut confusion = [[0usize; 3]; 3];
    for (t, p) in truth.iter().zip(&predicted) {
        confusion[t.index()][p.index()] += 1;
    }
    let (worst, worst_p) = ev
        .predictions
        .iter()
        .map(PhasePrediction::garbage_prob)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
    let summary = json!({
        "accuracy": ev.accuracy,
        "mean_garbage": ev.mean_garbage(),
        "max_garbage": worst_p,
        "max_garbage_at": grid.point(worst),
        "confusion_truth_by_predicted": confusion,
        "classes": PhaseLabel::ALL.map(|l| l.name()),
        "n_points": grid.len(),
    });
    out.write_json("summary.json", &summary)?;
    let mut m = manifest(command, vec![model.seed], vec![data.input, digest(&model_file)?]);
    m.dataset_hash = Some(data.hash);
    m.results = json!({ "accuracy": ev.accuracy, "mean_garbage": ev.mean_garbage() });
    out.finish(m)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn sweep_n(a: &SweepArgs, command: &Command, exec: Exec) -> Result<RunManifest> {
    if a.seeds == 0 || a.schemes.is_empty() || a.n_list.is_empty() {
        return Err(Error::Validation("sweep needs at least one scheme, size and seed".into()));
    }
    let cfg = TrainConfig { epochs: a.epochs, lr: a.lr, conv_gate: a.conv, ..TrainConfig::default() };
    cfg.validate()?;
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    let mut runs = Vec::new();
    for &scheme in &a.schemes {
        for &n in &a.n_list {
            for &seed in &seeds {
                runs.push(SamplerSpec { scheme, n, sigma: a.sigma, seed });
            }
        }
    }
    for r in &runs {
        sample_training_set(r)?;
    }
    let data = load_dataset(&a.dataset, exec)?;
    let truth = truth_labels(&data.ds.grid)?;
    let results = exec.try_map(runs.len(), |i| -> Result<(f64, f64)> {
        let spec = &runs[i];
        let points = sample_training_set(spec)?;
        let cfg = TrainConfig { seed: spec.seed, ..cfg };
        let model = QcnnModel::fit(&data.ds.grid, &data.states, &data.hash, &points, &cfg, Exec::Sequential)?;
        let ev = evaluate(&model.architecture, &model.params, &data.states, &truth, Exec::Sequential)?;
        info!("{} n={} seed={}: accuracy {:.4}", spec.scheme, spec.n, spec.seed, ev.accuracy);
        Ok((ev.accuracy, ev.mean_garbage()))
    })?;
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let run_rows: Vec<Vec<String>> = runs
        .iter()
        .zip(&results)
        .map(|(r, (acc, g))| vec![r.scheme.to_string(), r.n.to_string(), r.seed.to_string(), acc.to_string(), g.to_string()])
        .collect();
    out.write_table("runs.csv", &["scheme", "n [1]", "seed [1]", "accuracy [1]", "mean_garbage [1]"], &run_rows)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (chunk, spec) in results.chunks(seeds.len()).zip(runs.chunks(seeds.len())) {
        let acc: Vec<f64> = chunk.iter().map(|r| r.0).collect();
        let (mean, std) = mean_std(&acc);
        rows.push(vec![spec[0].scheme.to_string(), spec[0].n.to_string(), mean.to_string(), std.to_string(), acc.len().to_string()]);
        summary.push(json!({ "scheme": spec[0].scheme, "n": spec[0].n, "mean": mean, "std": std }));
    }
    out.write_table("sweep.csv", &["scheme", "n [1]", "mean_accuracy [1]", "std_accuracy [1]", "seeds [1]"], &rows)?;
    let mut m = manifest(command, seeds, vec![data.input]);
    m.dataset_hash = Some(data.hash);
    m.results = json!(summary);
    out.finish(m)
}

fn anomaly(a: &AnomalyArgs, command: &Command, exec: Exec) -> Result<RunManifest> {
    let (kappa, h) = (a.reference.kappa, a.reference.h);
    analytical_label(kappa, h)?;
    warn_if_near_boundary(kappa, h)?;
    let data = load_dataset(&a.dataset, exec)?;
    let grid = &data.ds.grid;
    let idx = grid.nearest(kappa, h);
    let arch = EncoderArchitecture::new(data.ds.n_qubits())?;
    let config = EncoderConfig { epochs: a.epochs, lr: a.lr, seed: a.seed, init: EncoderInit::Random, ..EncoderConfig::default() };
    let trained = train_encoder(&arch, &data.states[idx], &config)?;
    let scores = score_map(&arch, &trained.params, &data.states, exec)?;
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let model = EncoderModel {
        architecture: arch,
        params: trained.params.clone(),
        config,
        seed: a.seed,
        dataset_hash: data.hash.clone(),
        reference: grid.point(idx),
        reference_index: idx,
        training_score: trained.score,
        converged: trained.converged,
    };
    model.save(out.path("encoder.json"))?;
    out.record("encoder.json")?;
    out.write_grid("score_map.csv", grid, "score [1]", &scores)?;
    let trace: Vec<Vec<String>> = trained
        .trace
        .iter()
        .enumerate()
        .map(|(e, s)| vec![e.to_string(), s.to_string()])
        .collect();
    out.write_table("trace.csv", &["epoch [1]", "score [1]"], &trace)?;
    let truth = truth_labels(grid)?;
    let mut region = serde_json::Map::new();
    for l in PhaseLabel::ALL {
        let v: Vec<f64> = (0..grid.len()).filter(|&i| truth[i] == l).map(|i| scores[i]).collect();
        let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        region.insert(l.name().into(), json!(mean));
    }
    let mut m = manifest(command, vec![a.seed], vec![data.input]);
    m.dataset_hash = Some(data.hash);
    m.results = json!({
        "reference": grid.point(idx),
        "training_score": trained.score,
        "converged": trained.converged,
        "region_mean_score": region,
    });
    out.finish(m)
}

fn fidelity(a: &FidelityArgs, command: &Command, exec: Exec) -> Result<RunManifest> {
    let data = load_dataset(&a.dataset, exec)?;
    let slice = fidelity_matrix(&data.ds, a.slice, exec)?;
    let stats = cluster_stats(&slice.matrix, &slice.labels)?;
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let axis = if slice.fixed.0 == "h" { "kappa" } else { "h" };
    let first = format!("{axis} [1]");
    let mut header: Vec<String> = vec![first];
    header.extend(slice.coords.iter().map(|c| format!("{c} [1]")));
    let rows: Vec<Vec<String>> = slice
        .coords
        .iter()
        .zip(&slice.matrix)
        .map(|(c, row)| std::iter::once(c.to_string()).chain(row.iter().map(|f| f.to_string())).collect())
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_table("fidelity.csv", &header_refs, &rows)?;
    let labels: Vec<Vec<String>> = slice
        .coords
        .iter()
        .zip(&slice.labels)
        .map(|(c, l)| vec![c.to_string(), l.to_string()])
        .collect();
    out.write_table("labels.csv", &[&header[0], "label [class]"], &labels)?;
    let results = json!({
        "fixed_axis": slice.fixed.0,
        "fixed_value": slice.fixed.1,
        "within_mean": stats.within_mean,
        "cross_mean": stats.cross_mean,
        "contrast": stats.contrast(),
        "n_blocks": stats.n_blocks,
    });
    out.write_json("summary.json", &results)?;
    let mut m = manifest(command, Vec::new(), vec![data.input]);
    m.dataset_hash = Some(data.hash);
    m.results = results;
    out.finish(m)
}

/// κ samples: half below the multicritical point, half from it to 1, so
/// both ferro- and antiphase lines end in a shared row at κ = 0.5.
fn line_kappas(samples: usize) -> Vec<f64> {
    let left = samples / 2;
    let right = samples - left;
    let mut k: Vec<f64> = (0..left).map(|i| KAPPA_MULTICRITICAL * i as f64 / left as f64).collect();
    k.extend(linspace((KAPPA_MULTICRITICAL, 1.0), right));
    k
}

fn lines(a: &LinesArgs, command: &Command) -> Result<RunManifest> {
    if a.samples < 4 {
        return Err(Error::Validation("at least 4 samples are required".into()));
    }
    let mut out = OutDir::create(&a.out.out, a.out.svg)?;
    let cell = |v: Option<f64>| v.map(fmt_value).unwrap_or_default();
    let rows: Vec<Vec<String>> = line_kappas(a.samples)
        .into_iter()
        .map(|k| {
            let ising = if k < KAPPA_MULTICRITICAL { h_ising(k).ok() } else if k == KAPPA_MULTICRITICAL { Some(0.0) } else { None };
            let comm = h_commensurate(k).ok();
            let bkt = (k >= KAPPA_MULTICRITICAL).then(|| h_bkt(k));
            vec![k.to_string(), cell(ising), cell(comm), cell(bkt), cell(h_pe(k).ok())]
        })
        .collect();
    out.write_table(
        "lines.csv",
        &["kappa [1]", "h_ising [1]", "h_commensurate [1]", "h_bkt [1]", "h_pe [1]"],
        &rows,
    )?;
    let mut m = manifest(command, Vec::new(), Vec::new());
    m.results = json!({ "samples": a.samples });
    out.finish(m)
}
