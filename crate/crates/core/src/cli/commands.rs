use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::{CliError, CliResult, ReproKind, RunConfig, SynthKind};
use crate::data::{gen_planted, gen_spectra, load_wisconsin, LabeledDataset, PlantedSpec, SpectraSpec};
use crate::detect::{attribute_batch, roc_auc, threshold_by_accuracy, CaaDetector, Confusion, CvReport};
use crate::detect::{cross_validate_10fold, DetectorKind};
use crate::error::CaaError;
use crate::model::LambdaSelection;
use crate::protocol::{self, Check};

/// Location of the Wisconsin file used by `repro breast-cancer` when no
/// `data` setting is given.
pub const DEFAULT_WISCONSIN_PATH: &str = "data/breast-cancer-wisconsin.data";

fn io_err(e: std::io::Error) -> CliError {
    CliError::new("io_error", e.to_string())
}

/// Files ending in `.data` are read in the raw Wisconsin layout, anything
/// else as the headered CSV written by `synth`.
fn load_dataset(path: &Path) -> CliResult<LabeledDataset> {
    let ds = if path.extension().is_some_and(|e| e == "data") {
        load_wisconsin(path)?
    } else {
        LabeledDataset::load_csv(path)?
    };
    Ok(ds)
}

fn load_detector(path: &Path) -> CliResult<CaaDetector> {
    let text = std::fs::read_to_string(path).map_err(|e| CaaError::io(path, e))?;
    Ok(CaaDetector::from_json(&text)?)
}

fn create_file(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        if !dir.is_dir() {
            let e = std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist");
            return Err(CaaError::io(dir, e).into());
        }
    }
    let file = File::create(path).map_err(|e| CaaError::io(path, e))?;
    Ok(BufWriter::new(file))
}

/// Writes `bytes` to the configured output file, or to `stdout` without one.
fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut f = create_file(path)?;
            f.write_all(bytes).map_err(|e| CaaError::io(path, e))?;
            f.flush().map_err(|e| CaaError::io(path, e))?;
        }
        None => stdout.write_all(bytes).map_err(io_err)?,
    }
    Ok(())
}

fn required(value: &Option<PathBuf>, key: &str) -> CliResult<PathBuf> {
    value
        .clone()
        .ok_or_else(|| CaaError::InvalidConfig(format!("missing required setting `{key}`")).into())
}

/// JSON number, with non-finite values spelled as strings.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn pretty(v: &Value) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v).map_err(|e| CliError::new("format_error", e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("truth.json")
}

pub fn synth(kind: SynthKind, cfg: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let out = required(&cfg.out, "out")?;
    let seed = cfg.seed();
    let (ds, truth, summary) = match kind {
        SynthKind::Planted => {
            let d = PlantedSpec::default();
            let spec = PlantedSpec {
                n: cfg.n.unwrap_or(d.n),
                m: cfg.m.unwrap_or(d.m),
                seed,
                ..d
            };
            let data = gen_planted(&spec)?;
            let width = (spec.m - 1).to_string().len().max(2);
            let names = (0..spec.m).map(|j| format!("x{j:0width$}")).collect();
            let ds = LabeledDataset::new(data.x, vec![0; spec.n], names)?;
            let truth = json!({
                "kind": "planted",
                "seed": seed,
                "n": spec.n,
                "m": spec.m,
                "support_u": spec.support_u,
                "support_v": spec.support_v,
                "coeffs_u": spec.coeffs_u,
                "coeffs_v": spec.coeffs_v,
                "planted_columns": spec.planted_columns(),
            });
            (ds, truth, format!("planted {}x{}", spec.n, spec.m))
        }
        SynthKind::Spectra => {
            let d = SpectraSpec::default();
            let spec = SpectraSpec {
                n_background: cfg.n_background.unwrap_or(d.n_background),
                n_anomalous: cfg.n_anomalous.unwrap_or(d.n_anomalous),
                bins: cfg.bins.unwrap_or(d.bins),
                seed,
            };
            let data = gen_spectra(&spec)?;
            let truth = json!({
                "kind": data.kind,
                "seed": seed,
                "bins": spec.bins,
                "n_background": spec.n_background,
                "n_anomalous": spec.n_anomalous,
                "bump_bins": data.bump_bins,
                "anomalous_rows": data.dataset.rows_with_label(1),
            });
            let summary = format!(
                "{} spectra {}x{} ({} anomalous)",
                data.kind,
                spec.n_background + spec.n_anomalous,
                spec.bins,
                spec.n_anomalous
            );
            (data.dataset, truth, summary)
        }
    };
    let mut f = create_file(&out)?;
    ds.write_csv(&mut f)?;
    f.flush().map_err(|e| CaaError::io(&out, e))?;
    let side = sidecar_path(&out);
    emit(Some(&side), &pretty(&truth)?, stdout)?;
    writeln!(stdout, "wrote {summary} to {} (truth: {})", out.display(), side.display()).map_err(io_err)
}

fn name_constant_column(e: CaaError, names: &[String]) -> CliError {
    match e {
        CaaError::ConstantColumn(j) if j < names.len() => CliError::new(
            e.kind(),
            format!("feature `{}` (column {j}) has zero sample variance", names[j]),
        ),
        other => other.into(),
    }
}

fn fmt_indices(idx: &[usize]) -> String {
    let parts: Vec<String> = idx.iter().map(usize::to_string).collect();
    format!("[{}]", parts.join(","))
}

pub fn train(cfg: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let data = required(&cfg.data, "data")?;
    let out = required(&cfg.out, "out")?;
    let ds = load_dataset(&data)?;
    let x = ds.normal()?;
    let det = CaaDetector::fit(&x, &cfg.caa_config())
        .map_err(|e| name_constant_column(e, &ds.feature_names))?
        .with_aggregation(cfg.aggregation());
    let mut bytes = det.to_json()?.into_bytes();
    bytes.push(b'\n');
    emit(Some(&out), &bytes, stdout)?;

    let mut text = format!(
        "trained on {} normal rows x {} features: k = {}\n",
        x.rows(),
        x.cols(),
        det.num_pairs()
    );
    for (i, p) in det.pairs.iter().enumerate() {
        text += &format!(
            "pair {i}: lambda={:.6e} sparseness={:.6} correlation={:.6} support_u={} support_v={} selection={}\n",
            p.lambda,
            p.sparseness,
            p.correlation,
            fmt_indices(&p.support_u),
            fmt_indices(&p.support_v),
            match p.selection {
                LambdaSelection::Grid => "grid",
                LambdaSelection::SupportSplit => "support_split",
            },
        );
    }
    text += &format!("model written to {}\n", out.display());
    stdout.write_all(text.as_bytes()).map_err(io_err)
}

pub fn score(cfg: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let mut det = load_detector(&required(&cfg.model, "model")?)?;
    if let Some(a) = cfg.aggregation {
        det = det.with_aggregation(a);
    }
    let ds = load_dataset(&required(&cfg.data, "data")?)?;
    let reports = det.score_rows(&ds.x)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::new("format_error", e.to_string());
    w.write_record(["row", "score", "argmax_pair", "features"]).map_err(csv_err)?;
    for (i, r) in reports.iter().enumerate() {
        let feats: Vec<String> = r.contributing_features.iter().map(usize::to_string).collect();
        w.write_record([
            i.to_string(),
            r.score.to_string(),
            r.argmax_index.to_string(),
            feats.join(";"),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::new("format_error", e.to_string()))?;
    emit(cfg.out.as_deref(), &bytes, stdout)
}

/// Reads the `score` column of a scores file, checking rows are in order.
fn read_scores(path: &Path) -> CliResult<Vec<f64>> {
    let file = File::open(path).map_err(|e| CaaError::io(path, e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let parse_err = |line: usize, message: String| CliError::from(CaaError::Parse { line, message });
    let header = r.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let col = header
        .iter()
        .position(|h| h == "score")
        .ok_or_else(|| parse_err(1, "scores file has no `score` column".into()))?;
    let row_col = header.iter().position(|h| h == "row");
    let mut scores = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if let Some(rc) = row_col {
            if rec.get(rc) != Some(k.to_string().as_str()) {
                return Err(parse_err(line, format!("expected row {k}")));
            }
        }
        let field = rec.get(col).unwrap_or_default();
        let s: f64 = field
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("not a number: {field:?}")))?;
        scores.push(s);
    }
    Ok(scores)
}

fn cv_json(r: &CvReport) -> Value {
    json!({
        "mean_accuracy": num(r.mean_accuracy),
        "stdev": num(r.stdev),
        "fold_accuracies": r.fold_accuracies.iter().map(|&a| num(a)).collect::<Vec<_>>(),
        "thresholds": r.thresholds.iter().map(|&t| num(t)).collect::<Vec<_>>(),
    })
}

pub fn eval(cfg: &RunConfig, cv: bool, stdout: &mut dyn Write) -> CliResult<()> {
    let ds = load_dataset(&required(&cfg.data, "data")?)?;
    let scores = match (&cfg.scores, &cfg.model) {
        (Some(path), _) => Some(read_scores(path)?),
        (None, Some(path)) => {
            let mut det = load_detector(path)?;
            if let Some(a) = cfg.aggregation {
                det = det.with_aggregation(a);
            }
            Some(det.scores(&ds.x)?)
        }
        (None, None) => None,
    };
    if scores.is_none() && !cv {
        return Err(CaaError::InvalidConfig("eval needs `scores`, `model` or --cv".into()).into());
    }
    let mut doc = serde_json::Map::new();
    doc.insert("n_rows".into(), json!(ds.labels.len()));
    doc.insert("n_anomalous".into(), json!(ds.rows_with_label(1).len()));
    if let Some(scores) = scores {
        if scores.len() != ds.labels.len() {
            return Err(CaaError::DimensionMismatch {
                expected: ds.labels.len(),
                found: scores.len(),
            }
            .into());
        }
        let auc = roc_auc(&scores, &ds.labels)?;
        let (threshold, accuracy) = threshold_by_accuracy(&scores, &ds.labels)?;
        let c = Confusion::at(&scores, &ds.labels, threshold);
        doc.insert(
            "auc".into(),
            json!({"auc": num(auc.auc), "ci_low": num(auc.ci_low), "ci_high": num(auc.ci_high)}),
        );
        doc.insert("threshold".into(), num(threshold));
        doc.insert("accuracy".into(), num(accuracy));
        doc.insert("confusion".into(), json!(c));
    }
    if cv {
        let seed = cfg.seed();
        let caa = cross_validate_10fold(&ds.x, &ds.labels, seed, &DetectorKind::Caa(cfg.caa_config()))?;
        let pca = cross_validate_10fold(&ds.x, &ds.labels, seed, &DetectorKind::Pca(cfg.k_pca))?;
        doc.insert(
            "cv".into(),
            json!({"seed": seed, "caa": cv_json(&caa), "pca": cv_json(&pca)}),
        );
    }
    emit(cfg.out.as_deref(), &pretty(&Value::Object(doc))?, stdout)
}

pub fn attribute(cfg: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let det = load_detector(&required(&cfg.model, "model")?)?;
    let ds = load_dataset(&required(&cfg.data, "data")?)?;
    let flagged: Vec<usize> = match (cfg.row, cfg.threshold) {
        (Some(row), _) => vec![row],
        (None, Some(t)) => {
            let scores = det.scores(&ds.x)?;
            (0..scores.len()).filter(|&i| scores[i] > t).collect()
        }
        (None, None) => {
            return Err(CaaError::InvalidConfig("attribute needs `threshold` or `row`".into()).into());
        }
    };
    let counts = attribute_batch(&ds.x, &det, &flagged)?;
    let mut text = String::from("feature,count\n");
    for (name, c) in ds.feature_names.iter().zip(&counts) {
        text += &format!("{name},{c}\n");
    }
    emit(cfg.out.as_deref(), text.as_bytes(), stdout)
}

fn render_checks(title: &str, checks: &[Check]) -> String {
    let mut s = format!("{title}\n{:<22} {:>12}  {:<16} result\n", "check", "value", "band");
    for c in checks {
        s += &format!(
            "{:<22} {:>12.4}  {:<16} {}\n",
            c.name,
            c.value,
            c.band.to_string(),
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    s += &format!("{passed}/{} checks passed\n", checks.len());
    s
}

pub fn repro(kind: ReproKind, cfg: &RunConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let seed = cfg.seed();
    let (text, report) = match kind {
        ReproKind::BreastCancer => {
            let path = cfg.data.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_WISCONSIN_PATH));
            let ds = load_dataset(&path)?;
            let r = protocol::breast_cancer(&ds, seed, &cfg.caa_config(), cfg.k_pca)?;
            let h = &r.holdout;
            let mut text = format!(
                "{} rows ({} anomalous); holdout trains on {} normal rows, tests on {}\n",
                ds.labels.len(),
                ds.rows_with_label(1).len(),
                h.n_train,
                h.n_test
            );
            text += &format!(
                "CAA: {} pairs, AUC {:.4} [{:.4}, {:.4}], 10-fold accuracy {:.2} +/- {:.2}%\n",
                h.caa_pairs,
                h.caa.auc,
                h.caa.ci_low,
                h.caa.ci_high,
                100.0 * r.cv_caa.mean_accuracy,
                100.0 * r.cv_caa.stdev
            );
            text += &format!(
                "PCA: {} components, AUC {:.4} [{:.4}, {:.4}], 10-fold accuracy {:.2} +/- {:.2}%\n",
                h.pca_components,
                h.pca.auc,
                h.pca.ci_low,
                h.pca.ci_high,
                100.0 * r.cv_pca.mean_accuracy,
                100.0 * r.cv_pca.stdev
            );
            let checks = r.checks();
            text += &render_checks(&format!("breast-cancer (seed {seed})"), &checks);
            let report = json!({
                "protocol": "breast-cancer",
                "seed": seed,
                "holdout": {
                    "n_train": h.n_train,
                    "n_test": h.n_test,
                    "caa_pairs": h.caa_pairs,
                    "pca_components": h.pca_components,
                    "caa": h.caa,
                    "pca": h.pca,
                },
                "cv": {"caa": cv_json(&r.cv_caa), "pca": cv_json(&r.cv_pca)},
                "checks": checks,
            });
            (text, report)
        }
        ReproKind::Spectra => {
            let d = SpectraSpec::default();
            let spec = SpectraSpec {
                n_background: cfg.n_background.unwrap_or(d.n_background),
                n_anomalous: cfg.n_anomalous.unwrap_or(d.n_anomalous),
                bins: cfg.bins.unwrap_or(d.bins),
                seed,
            };
            let tight = protocol::spectra_caa_config();
            let mut caa_cfg = cfg.caa_config();
            caa_cfg.c1 = caa_cfg.c1.or(tight.c1);
            caa_cfg.c2 = caa_cfg.c2.or(tight.c2);
            let r = protocol::spectra(&spec, &caa_cfg, cfg.k_pca)?;
            let mut text = format!(
                "{} spectra, {} bins, bump on bins {}\n",
                r.kind,
                spec.bins,
                fmt_indices(&r.bump_bins)
            );
            text += &format!(
                "CAA: {} pairs, AUC {:.4}; PCA: {} components, AUC {:.4}\n",
                r.caa_pairs, r.caa_auc, r.pca_components, r.pca_auc
            );
            let checks = r.checks();
            text += &render_checks(&format!("spectra (seed {seed})"), &checks);
            let report = json!({"protocol": "spectra", "report": r, "checks": checks});
            (text, report)
        }
    };
    stdout.write_all(text.as_bytes()).map_err(io_err)?;
    if let Some(out) = cfg.out.as_deref() {
        emit(Some(out), &pretty(&report)?, stdout)?;
    }
    Ok(())
}
