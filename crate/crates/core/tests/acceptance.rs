//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p caa --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use caa::data::{gen_planted, load_wisconsin, split_holdout, PlantedSpec, SpectraSpec};
use caa::detect::{auc, cross_validate_10fold, CaaDetector, DetectorKind};
use caa::matrix::{pearson, standardize, svd};
use caa::model::{build_hat_matrices, fit_caa};
use caa::protocol::{self, CAA_AUC_BAND, CAA_CV_BAND, PCA_AUC_BAND, PCA_CV_BAND, TRAIN_FRACTION};
use caa::sparse_cca::{pmd_rank1, SparseCcaConfig};
use caa::{CaaConfig, DenseMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion(id: &str, title: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass && elapsed <= limit, o.detail),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!(
        "{id} {} {title}: {detail} [{:.2} s, limit {} s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DenseMatrix {
    DenseMatrix::new(n, m, (0..n * m).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

fn wisconsin_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/breast-cancer-wisconsin.data")
}

fn bilinear(u: &[f64], m: &DenseMatrix, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            s += u[i] * m.get(i, j) * v[j];
        }
    }
    s
}

fn ac1_hat_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xac1_0000 + seed);
        let n = rng.random_range(2..=20);
        let m = rng.random_range(1..=8);
        let x = gaussian(&mut rng, n, m);
        let s1 = svd(&x).unwrap().s[0];
        for lambda in [0.0, 0.1 * s1 * s1, s1 * s1] {
            let hats = build_hat_matrices(&x, lambda).unwrap();
            let product = hats.x_hat.transpose().matmul(&hats.y_hat).unwrap();
            // direct X^T X - lambda I, accumulated independently of the library
            for i in 0..m {
                for j in 0..m {
                    let mut g: f64 = (0..n).map(|r| x.get(r, i) * x.get(r, j)).sum();
                    if i == j {
                        g -= lambda;
                    }
                    worst = worst.max((product.get(i, j) - g).abs());
                }
            }
            cases += 1;
        }
    }
    outcome(worst < 1e-8, format!("{cases} cases, max |diff| = {worst:.2e} (tol 1e-8)"))
}

/// Every 1- and 2-sparse unit vector in R^3 on a 0.01 grid with L1 norm at
/// most `c`.
fn sparse_grid(c: f64) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for i in 0..3 {
        for s in [1.0, -1.0] {
            let mut e = [0.0; 3];
            e[i] = s;
            out.push(e);
        }
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for k in -100..=100 {
            let a = k as f64 / 100.0;
            let b = (1.0 - a * a).max(0.0).sqrt();
            for b in [b, -b] {
                if a != 0.0 && b != 0.0 && a.abs() + b.abs() <= c + 1e-12 {
                    let mut w = [0.0; 3];
                    w[i] = a;
                    w[j] = b;
                    out.push(w);
                }
            }
        }
    }
    out
}

fn ac2_solver_oracles() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut worst_sv = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xac2_0000 + seed);
        let p = rng.random_range(1..=20);
        let q = rng.random_range(1..=20);
        let m = gaussian(&mut rng, p, q);
        let pair = pmd_rank1(&m, &SparseCcaConfig::inactive(p, q)).unwrap();
        worst_sv = worst_sv.max((pair.d - svd(&m).unwrap().s[0]).abs());
    }
    pass &= worst_sv < 1e-6;
    notes.push(format!("inactive caps max |d - s1| = {worst_sv:.1e}"));

    let diag = DenseMatrix::diag(&[5.0, 1.0]);
    let pair = pmd_rank1(&diag, &SparseCcaConfig::new(1.0, 1.0)).unwrap();
    let exact = pair.u.iter().map(|x| x.abs()).eq([1.0, 0.0]) && pair.v.iter().map(|x| x.abs()).eq([1.0, 0.0]);
    pass &= exact;
    notes.push(format!("diag(5,1) -> e1/e1 {}", if exact { "exact" } else { "MISSED" }));

    let grid = sparse_grid(1.2);
    let mut worst_gap = f64::NEG_INFINITY;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xac2_1000 + seed);
        let m = gaussian(&mut rng, 3, 3);
        let pair = pmd_rank1(&m, &SparseCcaConfig::new(1.2, 1.2)).unwrap();
        let solver = bilinear(&pair.u, &m, &pair.v);
        let mut best = f64::NEG_INFINITY;
        for u in &grid {
            for v in &grid {
                best = best.max(bilinear(u, &m, v));
            }
        }
        worst_gap = worst_gap.max(best - solver);
    }
    pass &= worst_gap <= 1e-3;
    notes.push(format!("3x3 c=1.2 worst grid - solver = {worst_gap:.2e} (tol 1e-3)"));
    outcome(pass, notes.join("; "))
}

fn ac3_planted_recovery() -> Outcome {
    let cfg = CaaConfig::default();
    let mut hits = 0;
    let mut runs = Vec::new();
    for seed in 0..10u64 {
        let spec = PlantedSpec::with_seed(seed);
        let data = gen_planted(&spec).unwrap();
        let (train, test) = split_holdout(&data.x, TRAIN_FRACTION, seed).unwrap();
        let det = match CaaDetector::fit(&train, &cfg) {
            Ok(d) => d,
            Err(e) => {
                runs.push(format!("{seed}:err({})", e.kind()));
                continue;
            }
        };
        let first = &det.pairs[0];
        let support_ok = first.features() == spec.planted_columns();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..test.rows() {
            let z = det.standardization.apply_row(test.row(i)).unwrap();
            a.push(first.u.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>());
            b.push(first.v.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>());
        }
        let corr = pearson(&a, &b).abs();
        if support_ok && corr >= 0.9 {
            hits += 1;
        }
        runs.push(format!("{seed}:{}cols/{corr:.2}", first.features().len()));
    }
    outcome(
        hits >= 9,
        format!(
            "{hits}/10 runs with support = planted columns and held-out corr >= 0.9 (need 9); seed:support size/corr {}",
            runs.join(" ")
        ),
    )
}

fn ac4_breast_cancer_auc() -> Outcome {
    let ds = load_wisconsin(&wisconsin_path()).unwrap();
    let h = protocol::holdout_auc(&ds, 0, &CaaConfig::default(), None).unwrap();
    let caa_ok = CAA_AUC_BAND.contains(h.caa.auc);
    let pca_ok = PCA_AUC_BAND.contains(h.pca.auc);
    outcome(
        caa_ok && pca_ok,
        format!(
            "seed 0: CAA AUC {:.4} [{:.3}, {:.3}] (band {CAA_AUC_BAND}) {}; PCA k={} AUC {:.4} [{:.3}, {:.3}] (band {PCA_AUC_BAND}) {}",
            h.caa.auc,
            h.caa.ci_low,
            h.caa.ci_high,
            if caa_ok { "ok" } else { "out" },
            h.pca_components,
            h.pca.auc,
            h.pca.ci_low,
            h.pca.ci_high,
            if pca_ok { "ok" } else { "out" },
        ),
    )
}

fn ac5_breast_cancer_cv() -> Outcome {
    let ds = load_wisconsin(&wisconsin_path()).unwrap();
    let caa = cross_validate_10fold(&ds.x, &ds.labels, 0, &DetectorKind::Caa(CaaConfig::default())).unwrap();
    let pca = cross_validate_10fold(&ds.x, &ds.labels, 0, &DetectorKind::Pca(None)).unwrap();
    let (c, p) = (100.0 * caa.mean_accuracy, 100.0 * pca.mean_accuracy);
    outcome(
        CAA_CV_BAND.contains(c) && PCA_CV_BAND.contains(p),
        format!(
            "seed 0: CAA {c:.2} +/- {:.2}% (band {CAA_CV_BAND}); PCA {p:.2} +/- {:.2}% (band {PCA_CV_BAND})",
            100.0 * caa.stdev,
            100.0 * pca.stdev
        ),
    )
}

fn ac6_spectra() -> Outcome {
    let r = protocol::spectra(&SpectraSpec::default(), &protocol::spectra_caa_config(), None).unwrap();
    let checks = r.checks();
    outcome(
        checks.iter().all(|c| c.pass),
        format!(
            "{} seed {}: CAA AUC {:.4} vs PCA AUC {:.4}; finite {}; bump attribution {:.3} (floor {})",
            r.kind,
            r.seed,
            r.caa_auc,
            r.pca_auc,
            r.all_finite,
            r.bump_attribution,
            protocol::ATTRIBUTION_FLOOR
        ),
    )
}

fn solver_constraints() -> Result<usize, String> {
    let mut n = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xac7_0000 + seed);
        let p = rng.random_range(2..=12);
        let q = rng.random_range(2..=12);
        let m = gaussian(&mut rng, p, q);
        let c1 = 1.0 + rng.random::<f64>() * ((p as f64).sqrt() - 1.0);
        let c2 = 1.0 + rng.random::<f64>() * ((q as f64).sqrt() - 1.0);
        let pair = pmd_rank1(&m, &SparseCcaConfig::new(c1, c2)).map_err(|e| e.to_string())?;
        let l1 = |w: &[f64]| w.iter().map(|x| x.abs()).sum::<f64>();
        let l2 = |w: &[f64]| w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if l2(&pair.u) > 1.0 + 1e-9 || l2(&pair.v) > 1.0 + 1e-9 || l1(&pair.u) > c1 + 1e-6 || l1(&pair.v) > c2 + 1e-6 {
            return Err(format!("seed {seed}: constraint violated"));
        }
        n += 1;
    }
    Ok(n)
}

fn pair_guarantees_and_dominance() -> Result<usize, String> {
    let mut n = 0;
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xac7_1000 + seed);
        let rows = rng.random_range(30..80);
        let m = rng.random_range(3..9);
        let mut x = gaussian(&mut rng, rows, m);
        let mut data = x.as_slice().to_vec();
        for r in 0..rows {
            data[r * m + m - 1] = 0.8 * data[r * m] + 0.2 * data[r * m + m - 1];
        }
        x = DenseMatrix::new(rows, m, data).unwrap();
        let (z, _) = standardize(&x).map_err(|e| e.to_string())?;
        let pairs = fit_caa(&z, &CaaConfig::default()).map_err(|e| e.to_string())?;
        for p in &pairs {
            let tu: f64 = p.u.iter().zip(&p.v).map(|(a, b)| (a * b).abs()).sum();
            if 1.0 - tu < 1.0 - 1e-6 {
                return Err(format!("seed {seed}: sparseness {}", 1.0 - tu));
            }
            if p.support_u.iter().any(|j| p.support_v.contains(j)) {
                return Err(format!("seed {seed}: overlapping supports"));
            }
        }
        if pairs.is_empty() {
            continue;
        }
        let det = CaaDetector::fit(&x, &CaaConfig::default()).map_err(|e| e.to_string())?;
        for r in det.score_rows(&x).map_err(|e| e.to_string())? {
            let top = r.per_pair_distances.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let first = r.per_pair_distances.iter().position(|&d| d == top).unwrap();
            if r.score != top || r.argmax_index != first {
                return Err(format!("seed {seed}: score is not the leftmost max"));
            }
        }
        n += 1;
    }
    Ok(n)
}

fn auc_monotone_invariance() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xac7_2000);
    for case in 0..100 {
        let len = rng.random_range(4..80);
        let scores: Vec<f64> = (0..len).map(|_| (rng.random::<f64>() * 20.0).round() / 4.0).collect();
        let mut labels: Vec<u8> = (0..len).map(|_| u8::from(rng.random::<bool>())).collect();
        labels[0] = 0;
        labels[1] = 1;
        let base = auc(&scores, &labels).map_err(|e| e.to_string())?;
        for f in [|s: f64| s.exp(), |s: f64| 3.0 * s - 7.0, |s: f64| s.powi(3) + s] {
            let mapped: Vec<f64> = scores.iter().map(|&s| f(s)).collect();
            if (auc(&mapped, &labels).map_err(|e| e.to_string())? - base).abs() > 1e-12 {
                return Err(format!("case {case}: AUC changed under a monotone map"));
            }
        }
    }
    Ok(100)
}

/// Runs `args` in-process and returns stdout, failing on a nonzero status.
fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("caa").chain(args.iter().copied());
    match caa::cli::main_with(argv, &mut out, &mut err) {
        0 => Ok(out),
        code => Err(format!("{args:?} exited {code}: {}", String::from_utf8_lossy(&err))),
    }
}

fn cli_determinism() -> Result<usize, String> {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let read = |name: &str| std::fs::read(Path::new(&p(name))).map_err(|e| format!("{name}: {e}"));
    let (planted, spectra, model, smodel) = (p("p.csv"), p("s.csv"), p("m.json"), p("sm.json"));
    cli(&["synth", "planted", "--seed", "5", "--out", &planted])?;
    let spectra_args = ["synth", "spectra", "--bins", "20", "--n-background", "300", "--n-anomalous", "60"];
    cli(&[&spectra_args[..], &["--out", &spectra]].concat())?;
    cli(&["train", "--data", &planted, "--out", &model])?;
    cli(&["train", "--data", &spectra, "--c1", "1", "--c2", "1", "--out", &smodel])?;

    let commands: Vec<(Vec<String>, Vec<&str>)> = vec![
        (vec!["synth", "planted", "--seed", "5"].into_iter().map(String::from).collect(), vec!["x.csv", "x.truth.json"]),
        (spectra_args.iter().map(|s| s.to_string()).collect(), vec!["x.csv", "x.truth.json"]),
        (vec!["train".into(), "--data".into(), planted.clone()], vec!["x"]),
        (vec!["score".into(), "--model".into(), model.clone(), "--data".into(), planted.clone()], vec!["x"]),
        (
            vec!["eval", "--data", &spectra, "--model", &smodel, "--cv", "--c1", "1", "--c2", "1"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec!["x"],
        ),
        (
            vec!["attribute", "--model", &smodel, "--data", &spectra, "--threshold", "3"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec!["x"],
        ),
        (
            vec!["repro", "spectra", "--bins", "16", "--n-background", "200", "--n-anomalous", "50"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec!["x"],
        ),
    ];
    for (i, (args, files)) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let base = format!("run{i}_{run}");
            let target = p(&format!("{base}.{}", if files.len() > 1 { "csv" } else { "out" }));
            let mut argv: Vec<&str> = args.iter().map(String::as_str).collect();
            argv.extend(["--out", &target]);
            let stdout = cli(&argv)?;
            let mut bytes = Vec::new();
            for f in files {
                let name = match *f {
                    "x.csv" => format!("{base}.csv"),
                    "x.truth.json" => format!("{base}.truth.json"),
                    _ => format!("{base}.out"),
                };
                bytes.extend(read(&name)?);
            }
            // stdout names the output path, which differs between runs
            let text = String::from_utf8_lossy(&stdout).replace(&base, "RUN");
            outputs.push((bytes, text));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("command {:?} is not deterministic", args[0]));
        }
    }
    Ok(commands.len())
}

fn ac7_invariants() -> Outcome {
    let suites: [(&str, fn() -> Result<usize, String>); 4] = [
        ("solver constraints", solver_constraints),
        ("pair sparseness/disjointness + max dominance", pair_guarantees_and_dominance),
        ("AUC monotone invariance", auc_monotone_invariance),
        ("CLI determinism", cli_determinism),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, f) in suites {
        match f() {
            Ok(n) => notes.push(format!("{name} ok ({n})")),
            Err(e) => {
                pass = false;
                notes.push(format!("{name} FAILED: {e}"));
            }
        }
    }
    outcome(pass, notes.join("; "))
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        criterion("AC1", "hat-matrix equivalence", secs(1), ac1_hat_equivalence),
        criterion("AC2", "sparse CCA oracles", secs(30), ac2_solver_oracles),
        criterion("AC3", "planted support recovery", secs(60), ac3_planted_recovery),
        criterion("AC4", "breast-cancer AUC", secs(120), ac4_breast_cancer_auc),
        criterion("AC5", "breast-cancer 10-fold accuracy", secs(300), ac5_breast_cancer_cv),
        criterion("AC6", "synthetic spectra", secs(120), ac6_spectra),
        criterion("AC7", "invariant suites", secs(300), ac7_invariants),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
