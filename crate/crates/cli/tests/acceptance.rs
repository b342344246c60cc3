//! End-to-end acceptance checks. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits non-zero if any fails. Runs the default VQE
//! budget on 16x16 and 32x32 grids, so expect several minutes.

#[path = "../../core/tests/support/oracles.rs"]
mod oracles;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use qphase::anomaly::{score_map, train_encoder, EncoderArchitecture, EncoderConfig};
use qphase::exec::Exec;
use qphase::grid::Grid;
use qphase::hamiltonian::{annni_terms, exact_spectrum, AnnniParams};
use qphase::phasemap::{
    cluster_stats, fidelity_matrix, h_commensurate, h_ising, h_pe, sample_training_set, truth_labels,
    PhaseLabel, SamplerSpec, Scheme, Slice,
};
use qphase::qcnn::{evaluate, predict, QcnnArchitecture, QcnnModel, TrainConfig};
use qphase::qsim::{gradient, Functional, StateVector};
use qphase::vqe::{build_dataset, random_angles, validate_dataset, GroundStateDataset, HeaAnsatz, Recycling, VqeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Suite {
    failed: Vec<usize>,
}

impl Suite {
    fn report(&mut self, id: usize, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>2}. {name}: {detail}");
        if !pass {
            self.failed.push(id);
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let amps: Vec<Complex64> = (0..1 << n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(n, amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn deferred_measurement(s: &mut Suite) {
    let arch = QcnnArchitecture::new(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let params = random_angles(1000 + case, 0, arch.n_params);
        let input = random_state(&mut rng, 4);
        let ours = predict(&arch, &params, &input).unwrap().p;
        let oracle = oracles::qcnn_branch_marginals(&arch, &params, &input);
        for (a, b) in ours.iter().zip(oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    s.report(6, "deferred-measurement oracle", worst < 1e-10, format!("20 cases, max deviation {worst:.2e} (tol 1e-10)"));
}

fn gradient_oracle(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = 2 + case % 4;
        let c = oracles::random_circuit(&mut rng, n, 10 + case % 20);
        let params: Vec<f64> = (0..c.n_params()).map(|_| rng.random_range(-PI..PI)).collect();
        let obs = oracles::random_observable(&mut rng, n, 5);
        let adj = gradient(&c, &params, Functional::Energy(&obs)).unwrap();
        let fd = oracles::central_differences(&c, &params, None, |st| oracles::dense_expectation(st, &obs), 1e-5);
        worst = adj.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    s.report(7, "gradient oracle", worst < 1e-6, format!("50 cases, max |adjoint - fd| {worst:.2e} (tol 1e-6)"));
}

fn diagonalisation_oracle(s: &mut Suite) {
    let e0 = exact_spectrum(&AnnniParams::new(2, 0.0, 1.0).unwrap(), 1, false).unwrap().ground_energy();
    let two_spin = (e0 + 5f64.sqrt()).abs();
    let mut worst: f64 = 0.0;
    for n in 2..=4 {
        for (k, h) in [(0.0, 1.0), (0.3, 0.4), (0.7, 1.3), (1.0, 0.0)] {
            let ours = oracles::sorted_eigenvalues(annni_terms(n, k, h).dense_real(n).unwrap());
            let kron = oracles::sorted_eigenvalues(oracles::kron_annni(n, k, h));
            for (a, b) in ours.iter().zip(&kron) {
                worst = worst.max((a - b).abs());
            }
            if n % 2 == 0 {
                let spec = exact_spectrum(&AnnniParams::new(n, k, h).unwrap(), 1 << n, false).unwrap();
                for (a, b) in spec.energies.iter().zip(&kron) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    s.report(
        8,
        "exact-diagonalisation oracle",
        two_spin < 1e-9 && worst < 1e-10,
        format!("|E0(N=2) + sqrt5| {two_spin:.2e}, N<=4 spectra max deviation {worst:.2e}"),
    );
}

fn analytical_lines(s: &mut Suite) {
    let hi = h_ising(0.25).unwrap();
    let hc = h_commensurate(0.75).unwrap();
    let hp = h_pe(0.25).unwrap();
    let pass = (hi - 0.5505).abs() < 1e-4 && (hc - 0.4233).abs() < 1e-4 && (hp - 0.75).abs() < 1e-4;
    s.report(9, "analytical lines", pass, format!("h_I(0.25)={hi:.5}, h_C(0.75)={hc:.5}, h_PE(0.25)={hp:.5}"));
}

fn dataset(n_side: usize) -> GroundStateDataset {
    let grid = Grid::uniform(n_side, n_side).unwrap();
    let ansatz = HeaAnsatz::with_default_depth(6).unwrap();
    build_dataset(ansatz, grid, &VqeConfig::default(), Recycling::Sweep, Exec::Parallel).unwrap()
}

fn vqe_accuracy(s: &mut Suite) {
    let t = Instant::now();
    let mut ds = dataset(16);
    let report = validate_dataset(&mut ds, Exec::Parallel).unwrap();
    let below = report.delta_e.iter().filter(|&&d| d < 0.01).count();
    let frac = below as f64 / report.delta_e.len() as f64;
    let max = report.delta_e.iter().cloned().fold(0.0, f64::max);
    s.report(
        1,
        "VQE accuracy",
        frac >= 0.95,
        format!(
            "N=6 16x16: {below}/{} points with dE < 1% ({:.1}%), max dE {max:.4} [{:.0}s]",
            report.delta_e.len(),
            100.0 * frac,
            t.elapsed().as_secs_f64()
        ),
    );
}

fn fidelity_clustering(s: &mut Suite, ds: &GroundStateDataset) {
    let slice = fidelity_matrix(ds, Slice::H(0.3), Exec::Parallel).unwrap();
    let st = cluster_stats(&slice.matrix, &slice.labels).unwrap();
    s.report(
        4,
        "fidelity clustering",
        st.contrast() >= 0.5 && st.n_blocks == 3,
        format!(
            "h={:.4} row: within {:.3} - cross {:.3} = {:.3}, {} blocks",
            slice.fixed.1,
            st.within_mean,
            st.cross_mean,
            st.contrast(),
            st.n_blocks
        ),
    );
}

fn anomaly_baseline(s: &mut Suite, ds: &GroundStateDataset, states: &[StateVector]) {
    let grid = &ds.grid;
    let truth = truth_labels(grid).unwrap();
    let r = grid.nearest(0.1, 0.1);
    let arch = EncoderArchitecture::new(6).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for seed in 0..3 {
        let out = train_encoder(&arch, &states[r], &EncoderConfig { seed, ..EncoderConfig::default() }).unwrap();
        let scores = score_map(&arch, &out.params, states, Exec::Parallel).unwrap();
        let region = |l: PhaseLabel| {
            let v: Vec<f64> = (0..grid.len()).filter(|&i| truth[i] == l).map(|i| scores[i]).collect();
            mean(&v)
        };
        let (f, p, a) = (region(PhaseLabel::Ferromagnetic), region(PhaseLabel::Paramagnetic), region(PhaseLabel::Antiphase));
        pass &= out.score < 0.05 && f < p && f < a;
        parts.push(format!("seed {seed}: score {:.4}, F/P/A {f:.3}/{p:.3}/{a:.3}", out.score));
    }
    s.report(5, "anomaly baseline", pass, parts.join("; "));
}

/// Accuracy and mean garbage probability of one trained classifier.
fn train_eval(ds: &GroundStateDataset, states: &[StateVector], hash: &str, scheme: Scheme, n: usize, seed: u64) -> (f64, f64) {
    let points = sample_training_set(&SamplerSpec::new(scheme, n, seed)).unwrap();
    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let m = QcnnModel::fit(&ds.grid, states, hash, &points, &cfg, Exec::Sequential).unwrap();
    let truth = truth_labels(&ds.grid).unwrap();
    let ev = evaluate(&m.architecture, &m.params, states, &truth, Exec::Sequential).unwrap();
    (ev.accuracy, ev.mean_garbage())
}

fn classifier(s: &mut Suite, ds: &GroundStateDataset, states: &[StateVector]) {
    let t = Instant::now();
    let hash = ds.hash();
    let ns = [4usize, 8, 20, 40];
    let seeds = 5u64;
    let mut runs = Vec::new();
    for scheme in Scheme::ALL {
        for &n in &ns {
            for seed in 0..seeds {
                runs.push((scheme, n, seed));
            }
        }
    }
    let results = Exec::Parallel.map(runs.len(), |i| {
        let (scheme, n, seed) = runs[i];
        train_eval(ds, states, &hash, scheme, n, seed)
    });
    let acc = |scheme: Scheme, n: usize, k: u64| -> Vec<f64> {
        runs.iter()
            .zip(&results)
            .filter(|((sc, nn, seed), _)| *sc == scheme && *nn == n && *seed < k)
            .map(|(_, r)| r.0)
            .collect()
    };

    let g20 = mean(&acc(Scheme::G2, 20, 3));
    let g40 = mean(&acc(Scheme::G2, 40, 3));
    s.report(
        2,
        "QCNN generalisation",
        g20 >= 0.90 && g40 >= 0.93,
        format!("N=6 32x32 G2, 3 seeds: n=20 {g20:.4} (>= 0.90), n=40 {g40:.4} (>= 0.93)"),
    );

    let mut trend_ok = true;
    let mut curves = Vec::new();
    let mut overall = vec![0.0; ns.len()];
    for scheme in Scheme::ALL {
        let per_n: Vec<Vec<f64>> = ns.iter().map(|&n| acc(scheme, n, seeds)).collect();
        let means: Vec<f64> = per_n.iter().map(|v| mean(v)).collect();
        let pooled = (per_n.iter().map(|v| variance(v)).sum::<f64>() / ns.len() as f64).sqrt();
        let monotone = means.windows(2).all(|w| w[1] >= w[0] - pooled);
        trend_ok &= monotone;
        for (o, m) in overall.iter_mut().zip(&means) {
            *o += m / Scheme::ALL.len() as f64;
        }
        curves.push(format!(
            "{scheme} [{}] pooled sd {pooled:.3}, gain {:+.3}{}",
            means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" "),
            means[3] - means[0],
            if monotone { "" } else { " NOT MONOTONE" }
        ));
    }
    let gain = overall[3] - overall[0];
    s.report(
        3,
        "accuracy-vs-n trend",
        trend_ok && gain > 0.05,
        format!(
            "n=4,8,20,40 x 5 seeds; scheme-averaged [{}] gain {gain:+.3} (> 0.05); {} [{:.0}s]",
            overall.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" "),
            curves.join("; "),
            t.elapsed().as_secs_f64()
        ),
    );

    let garbage: Vec<f64> = runs
        .iter()
        .zip(&results)
        .filter(|((sc, n, seed), _)| *sc == Scheme::G2 && *n == 40 && *seed < 3)
        .map(|(_, r)| r.1)
        .collect();
    let worst = garbage.iter().cloned().fold(0.0, f64::max);
    s.report(
        10,
        "garbage suppression",
        worst < 0.10,
        format!("G2 n=40 models, grid-mean garbage probability per seed {garbage:.4?} (< 0.10)"),
    );
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn cli_determinism(s: &mut Suite) {
    let root = tempfile::tempdir().unwrap();
    let dir = |name: &str| root.path().join(name).display().to_string();
    let ds = dir("dataset");
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("dataset", vec!["dataset", "--n-qubits", "6", "--grid", "6x6", "--steps", "100", "--validate", "--svg"].into_iter().map(String::from).collect()),
        ("lines", vec!["lines".into()]),
        ("train", vec!["train-qcnn".into(), "--dataset".into(), ds.clone(), "--n".into(), "20".into(), "--epochs".into(), "60".into()]),
        ("eval", vec!["eval".into(), "--dataset".into(), ds.clone(), "--model".into(), dir("train"), "--svg".into()]),
        ("sweep", vec!["sweep-n".into(), "--dataset".into(), ds.clone(), "--n-list".into(), "4,8".into(), "--seeds".into(), "2".into(), "--epochs".into(), "20".into()]),
        ("anomaly", vec!["anomaly".into(), "--dataset".into(), ds.clone(), "--epochs".into(), "60".into()]),
        ("fidelity", vec!["fidelity".into(), "--dataset".into(), ds.clone(), "--slice".into(), "h=0.3".into()]),
    ];
    let qphase = |args: &[String], jobs: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_qphase")).args(args).env("QPHASE_JOBS", jobs).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    let mut mismatches = Vec::new();
    for (name, mut args) in runs {
        args.extend(["--out".into(), dir(name)]);
        qphase(&args, "4");
        let manifest = root.path().join(name).join("manifest.json").display().to_string();
        let replay = format!("{name}-replay");
        qphase(&["replay".into(), "--manifest".into(), manifest, "--out".into(), dir(&replay)], "1");
        if files(&root.path().join(name)) != files(&root.path().join(&replay)) {
            mismatches.push(name);
        }
    }
    s.report(
        11,
        "determinism",
        mismatches.is_empty(),
        format!("7 subcommands replayed from their manifests (4 vs 1 worker); mismatching: {mismatches:?}"),
    );
}

fn main() {
    let start = Instant::now();
    let mut s = Suite { failed: Vec::new() };
    deferred_measurement(&mut s);
    gradient_oracle(&mut s);
    diagonalisation_oracle(&mut s);
    analytical_lines(&mut s);
    cli_determinism(&mut s);
    vqe_accuracy(&mut s);

    let t = Instant::now();
    let ds = dataset(32);
    let states = ds.states(Exec::Parallel).unwrap();
    println!("       (N=6 32x32 dataset built in {:.0}s)", t.elapsed().as_secs_f64());
    fidelity_clustering(&mut s, &ds);
    anomaly_baseline(&mut s, &ds, &states);
    classifier(&mut s, &ds, &states);

    println!("acceptance: {} failed, {:.0}s total", s.failed.len(), start.elapsed().as_secs_f64());
    if !s.failed.is_empty() {
        std::process::exit(1);
    }
}
