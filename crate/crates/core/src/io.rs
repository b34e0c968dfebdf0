//! CSV datasets, model files, and risk trajectories.
//!
//! Dataset CSV: a header row, one column per feature and one label column
//! named `y` or `label` holding `-1` or `1`. Floats are written with 17
//! significant digits so files reproduce values exactly.
//!
//! Model file: `key = value` lines; `#` starts a comment. Keys, all required:
//! `format`, `version`, `loss`, `penalty`, `lambda`, `mu`, `epsilon`, `alpha`,
//! `beta` (comma-separated), `iterations_run`, `converged`, `termination`,
//! `exact_risk`, `smoothed_risk`.
//!
//! Trajectory CSV: `iteration,exact_risk,smoothed_risk`, one row per iterate
//! including the starting point.
//!
//! Sweep summary CSV: `grid_value,terminal_exact_risk,terminal_smoothed_risk,accuracy`.
//! Hyperplane CSV: `grid_value,alpha,beta1,...,betaq`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dataset::{predict, Dataset, Label, ModelParams};
use crate::engine::{FitResult, TerminationReason};
use crate::error::{Error, Result};
use crate::spec::RiskSpec;

pub const MODEL_FORMAT: &str = "irls-svm-model";
pub const MODEL_VERSION: u32 = 1;

const LABEL_COLUMNS: [&str; 2] = ["y", "label"];

/// Round-trip-exact decimal form (17 significant digits).
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn is_label_column(name: &str) -> bool {
    let name = name.trim();
    LABEL_COLUMNS.iter().any(|l| name.eq_ignore_ascii_case(l))
}

fn csv_error(path: &Path, row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn from_csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

/// Parsed CSV table: feature column names, feature rows, and labels when
/// a label column is present. Rows are numbered from 1 (first data row).
struct Table {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<Label>>,
}

fn read_table(path: &Path, require_labels: bool) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(|e| from_csv_error(path, e))?.clone();
    let label_idx = headers.iter().position(is_label_column);
    if require_labels && label_idx.is_none() {
        return Err(Error::format(path, "missing label column (expected 'y' or 'label')"));
    }
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::format(path, "no feature columns"));
    }

    let mut rows = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| from_csv_error(path, e))?;
        let mut features = Vec::with_capacity(feature_names.len());
        for (c, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let name = &headers[c];
            if Some(c) == label_idx {
                let label = cell
                    .parse::<i64>()
                    .ok()
                    .and_then(Label::from_i64)
                    .ok_or_else(|| csv_error(path, row, name, format!("label '{cell}' is not -1 or 1")))?;
                labels.as_mut().expect("label column present").push(label);
            } else {
                let value: f64 = cell
                    .parse()
                    .map_err(|_| csv_error(path, row, name, format!("'{cell}' is not a number")))?;
                if !value.is_finite() {
                    return Err(csv_error(path, row, name, "value is not finite"));
                }
                features.push(value);
            }
        }
        rows.push(features);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "no samples"));
    }
    Ok(Table {
        feature_names,
        rows,
        labels,
    })
}

pub fn load_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let table = read_table(path, true)?;
    Dataset::from_rows(&table.rows, table.labels.expect("labels required"))
}

pub fn write_dataset_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let header: Vec<String> = (1..=dataset.q()).map(|j| format!("x{j}")).chain(["y".into()]).collect();
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let f = dataset.features();
    for (i, label) in dataset.labels().iter().enumerate() {
        for j in 0..dataset.q() {
            write!(out, "{},", format_f64(f[(i, j)])).map_err(io)?;
        }
        writeln!(out, "{}", label.as_i8()).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads feature rows from `input` (a label column, if any, is carried
/// through) and writes them back out with a `prediction` column appended.
pub fn write_predictions_csv(
    theta: &ModelParams,
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
) -> Result<Vec<Label>> {
    let (input, output) = (input.as_ref(), output.as_ref());
    let table = read_table(input, false)?;
    if table.feature_names.len() != theta.q() {
        return Err(Error::DimensionMismatch {
            expected: theta.q(),
            found: table.feature_names.len(),
        });
    }
    let mut out = create(output)?;
    let io = |e| Error::io(output, e);
    let mut header = table.feature_names.clone();
    if table.labels.is_some() {
        header.push("y".into());
    }
    header.push("prediction".into());
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let mut predictions = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let label = predict(theta, row)?;
        predictions.push(label);
        let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
        write!(out, "{}", cells.join(",")).map_err(io)?;
        if let Some(labels) = &table.labels {
            write!(out, ",{}", labels[i].as_i8()).map_err(io)?;
        }
        writeln!(out, ",{}", label.as_i8()).map_err(io)?;
    }
    out.flush().map_err(io)?;
    Ok(predictions)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Contents of a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub spec: RiskSpec,
    pub theta: ModelParams,
    pub iterations_run: usize,
    pub converged: bool,
    pub termination: TerminationReason,
    pub exact_risk: f64,
    pub smoothed_risk: f64,
}

impl ModelFile {
    pub fn from_fit(spec: &RiskSpec, result: &FitResult) -> Self {
        Self {
            spec: *spec,
            theta: result.theta.clone(),
            iterations_run: result.iterations_run,
            converged: result.converged,
            termination: result.termination_reason,
            exact_risk: result.final_exact_risk(),
            smoothed_risk: result.final_smoothed_risk(),
        }
    }
}

fn termination_name(t: TerminationReason) -> &'static str {
    match t {
        TerminationReason::MaxIterations => "max-iterations",
        TerminationReason::RiskTolerance => "risk-tolerance",
        TerminationReason::ClosedForm => "closed-form",
    }
}

fn parse_termination(s: &str) -> Option<TerminationReason> {
    [
        TerminationReason::MaxIterations,
        TerminationReason::RiskTolerance,
        TerminationReason::ClosedForm,
    ]
    .into_iter()
    .find(|&t| termination_name(t) == s)
}

const MODEL_KEYS: [&str; 14] = [
    "format",
    "version",
    "loss",
    "penalty",
    "lambda",
    "mu",
    "epsilon",
    "alpha",
    "beta",
    "iterations_run",
    "converged",
    "termination",
    "exact_risk",
    "smoothed_risk",
];

pub fn write_model(result: &FitResult, spec: &RiskSpec, path: impl AsRef<Path>) -> Result<()> {
    write_model_file(&ModelFile::from_fit(spec, result), path)
}

pub fn write_model_file(model: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let beta: Vec<String> = model.theta.beta.iter().map(|&b| format_f64(b)).collect();
    let values = [
        MODEL_FORMAT.to_string(),
        MODEL_VERSION.to_string(),
        model.spec.loss.to_string(),
        model.spec.penalty.to_string(),
        format_f64(model.spec.raw_lambda()),
        format_f64(model.spec.raw_mu()),
        format_f64(model.spec.epsilon),
        format_f64(model.theta.alpha),
        beta.join(","),
        model.iterations_run.to_string(),
        model.converged.to_string(),
        termination_name(model.termination).to_string(),
        format_f64(model.exact_risk),
        format_f64(model.smoothed_risk),
    ];
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    for (key, value) in MODEL_KEYS.iter().zip(values) {
        writeln!(out, "{key} = {value}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::format(path, format!("line {}: expected 'key = value'", lineno + 1)))?;
        let key = key.trim();
        if !MODEL_KEYS.contains(&key) {
            return Err(Error::format(path, format!("line {}: unknown key '{key}'", lineno + 1)));
        }
        if entries.insert(key, value.trim()).is_some() {
            return Err(Error::format(
                path,
                format!("line {}: duplicate key '{key}'", lineno + 1),
            ));
        }
    }
    let get = |key: &str| {
        entries
            .get(key)
            .copied()
            .ok_or_else(|| Error::format(path, format!("missing key '{key}'")))
    };
    let float = |key: &str| -> Result<f64> {
        let v = get(key)?;
        v.parse()
            .map_err(|_| Error::format(path, format!("{key}: '{v}' is not a number")))
    };
    let parsed = |key: &str, what: &str| Error::format(path, format!("{key}: invalid {what}"));

    if get("format")? != MODEL_FORMAT {
        return Err(Error::format(path, "not a model file"));
    }
    let version: u32 = get("version")?.parse().map_err(|_| parsed("version", "integer"))?;
    if version != MODEL_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported model version {version} (expected {MODEL_VERSION})"),
        ));
    }
    let spec = RiskSpec::with_epsilon(
        get("loss")?.parse()?,
        get("penalty")?.parse()?,
        float("lambda")?,
        float("mu")?,
        float("epsilon")?,
    )?;
    let beta = get("beta")?
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| parsed("beta", "number list")))
        .collect::<Result<Vec<_>>>()?;
    let theta = ModelParams::new(float("alpha")?, beta);
    if !theta.is_finite() {
        return Err(Error::format(path, "parameters must be finite"));
    }
    Ok(ModelFile {
        spec,
        theta,
        iterations_run: get("iterations_run")?
            .parse()
            .map_err(|_| parsed("iterations_run", "integer"))?,
        converged: get("converged")?.parse().map_err(|_| parsed("converged", "boolean"))?,
        termination: parse_termination(get("termination")?).ok_or_else(|| parsed("termination", "reason"))?,
        exact_risk: float("exact_risk")?,
        smoothed_risk: float("smoothed_risk")?,
    })
}

pub fn write_trajectory_csv(result: &FitResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "iteration,exact_risk,smoothed_risk").map_err(io)?;
    for (k, (e, s)) in result
        .exact_risk_trajectory
        .iter()
        .zip(&result.smoothed_risk_trajectory)
        .enumerate()
    {
        writeln!(out, "{k},{},{}", format_f64(*e), format_f64(*s)).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// One `(iteration, exact_risk, smoothed_risk)` row per recorded iterate.
pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, f64, f64)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(|e| from_csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["iteration", "exact_risk", "smoothed_risk"] {
        return Err(Error::format(path, "unexpected trajectory header"));
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| from_csv_error(path, e))?;
        let cell = |c: usize| -> Result<&str> {
            record
                .get(c)
                .ok_or_else(|| csv_error(path, r + 1, &headers[c], "missing value"))
        };
        let bad = |c: usize| csv_error(path, r + 1, &headers[c], "not a number");
        rows.push((
            cell(0)?.parse().map_err(|_| bad(0))?,
            cell(1)?.parse().map_err(|_| bad(1))?,
            cell(2)?.parse().map_err(|_| bad(2))?,
        ));
    }
    Ok(rows)
}

/// Terminal values of one fit in a penalty sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub grid_value: f64,
    pub exact_risk: f64,
    pub smoothed_risk: f64,
    pub accuracy: f64,
}

const SUMMARY_HEADER: [&str; 4] = [
    "grid_value",
    "terminal_exact_risk",
    "terminal_smoothed_risk",
    "accuracy",
];

/// Numeric CSV whose header must satisfy `check`; returns the header and rows.
fn read_numeric_csv(path: &Path, check: impl Fn(&[&str]) -> bool, what: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| from_csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if !check(&headers.iter().map(String::as_str).collect::<Vec<_>>()) {
        return Err(Error::format(path, format!("unexpected {what} header")));
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| from_csv_error(path, e))?;
        let row = record
            .iter()
            .zip(&headers)
            .map(|(cell, name)| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| csv_error(path, r + 1, name, format!("'{cell}' is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((headers, rows))
}

pub fn write_sweep_summary(rows: &[SweepSummary], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", SUMMARY_HEADER.join(",")).map_err(io)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            format_f64(r.grid_value),
            format_f64(r.exact_risk),
            format_f64(r.smoothed_risk),
            format_f64(r.accuracy)
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_sweep_summary(path: impl AsRef<Path>) -> Result<Vec<SweepSummary>> {
    let (_, rows) = read_numeric_csv(path.as_ref(), |h| h == SUMMARY_HEADER, "sweep summary")?;
    Ok(rows
        .into_iter()
        .map(|r| SweepSummary {
            grid_value: r[0],
            exact_risk: r[1],
            smoothed_risk: r[2],
            accuracy: r[3],
        })
        .collect())
}

/// One `(grid_value, theta)` row per fit; all thetas must share a dimension.
pub fn write_hyperplanes(rows: &[(f64, ModelParams)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let q = rows.first().map_or(0, |(_, t)| t.q());
    if let Some((_, t)) = rows.iter().find(|(_, t)| t.q() != q) {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: t.q(),
        });
    }
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    let betas: Vec<String> = (1..=q).map(|j| format!(",beta{j}")).collect();
    writeln!(out, "grid_value,alpha{}", betas.concat()).map_err(io)?;
    for (g, theta) in rows {
        let mut line = format!("{},{}", format_f64(*g), format_f64(theta.alpha));
        for b in theta.beta.iter() {
            line.push(',');
            line.push_str(&format_f64(*b));
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_hyperplanes(path: impl AsRef<Path>) -> Result<Vec<(f64, ModelParams)>> {
    let check = |h: &[&str]| {
        h.len() >= 3
            && h[0] == "grid_value"
            && h[1] == "alpha"
            && h[2..]
                .iter()
                .enumerate()
                .all(|(j, name)| *name == format!("beta{}", j + 1))
    };
    let (_, rows) = read_numeric_csv(path.as_ref(), check, "hyperplane")?;
    Ok(rows
        .into_iter()
        .map(|r| (r[0], ModelParams::new(r[1], r[2..].to_vec())))
        .collect())
}
