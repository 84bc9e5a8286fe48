//! Sample CSV input and JSON/CSV report output.
//!
//! Input CSV: one point per row, exactly `D` numeric columns, `.` decimal
//! separator, optionally one header row (detected when the first row is not
//! entirely numeric).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::distributions::GroundTruthValue;
use crate::error::{Error, Result};
use crate::estimators::Estimate;
use crate::harness::SweepResult;
use crate::metric::{MetricConfig, Norm};
use crate::neighbors::SampleSet;
use crate::selftest::SelftestCase;
use crate::theory::{ConcentrationReport, ErlangCheckReport, MomentReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Parameter(format!("unknown format {other:?}"))),
        }
    }
}

/// Column count of the first non-empty row.
pub fn detect_dimension(text: &str) -> Result<usize> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.iter().any(|c| !c.is_empty()) {
            return Ok(rec.len());
        }
    }
    Err(Error::Parse {
        line: 1,
        message: "empty input".into(),
    })
}

/// Parse CSV text into row-major coordinates with `dimension` columns.
pub fn parse_points(text: &str, dimension: usize) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut coords = Vec::new();
    let mut rows = 0usize;
    let mut header_checked = false;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(i + 1),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> =
            record.iter().map(|c| c.parse::<f64>()).collect();
        if !header_checked {
            header_checked = true;
            if parsed.iter().any(|p| p.is_err()) {
                continue;
            }
        }
        if record.len() != dimension {
            return Err(Error::Parse {
                line,
                message: format!("expected {dimension} columns, found {}", record.len()),
            });
        }
        for (cell, value) in record.iter().zip(parsed) {
            match value {
                Ok(v) if v.is_finite() => coords.push(v),
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("non-numeric cell {cell:?}"),
                    })
                }
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(coords)
}

/// Load a sample set from CSV text; points must lie in the unit cube unless
/// `allow_outside`.
pub fn samples_from_str(
    text: &str,
    dimension: usize,
    norm: Norm,
    allow_outside: bool,
) -> Result<SampleSet> {
    let metric = MetricConfig::new(dimension, norm)?;
    let set = SampleSet::from_flat(parse_points(text, dimension)?, metric)?;
    if !allow_outside {
        set.check_in_cube()?;
    }
    Ok(set)
}

pub fn load_samples(
    path: impl AsRef<Path>,
    dimension: usize,
    norm: Norm,
    allow_outside: bool,
) -> Result<SampleSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    samples_from_str(&text, dimension, norm, allow_outside)
}

fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

fn csv_line(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "{}", cells.join(","));
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn estimate_value(e: &Estimate) -> Value {
    json!({
        "functional": e.functional.to_string(),
        "k": e.k,
        "n": e.n,
        "value": e.value,
        "correction_description": e.correction_description,
    })
}

pub fn emit_estimate(e: &Estimate, format: Format) -> String {
    match format {
        Format::Json => to_json_string(&estimate_value(e)),
        Format::Csv => {
            let mut out = String::new();
            csv_line(
                &mut out,
                &["functional", "k", "n", "value", "correction_description"].map(String::from),
            );
            csv_line(
                &mut out,
                &[
                    e.functional.to_string(),
                    e.k.to_string(),
                    e.n.to_string(),
                    num(e.value),
                    format!("\"{}\"", e.correction_description.replace('"', "\"\"")),
                ],
            );
            out
        }
    }
}

fn truth_value(t: &GroundTruthValue) -> Value {
    json!({
        "functional": t.functional.to_string(),
        "value": t.value,
        "method": t.method.name(),
        "abs_error": t.abs_error,
    })
}

pub fn emit_truth(t: &GroundTruthValue, format: Format) -> String {
    match format {
        Format::Json => to_json_string(&truth_value(t)),
        Format::Csv => {
            let mut out = String::new();
            csv_line(&mut out, &["functional", "value", "method", "abs_error"].map(String::from));
            csv_line(
                &mut out,
                &[
                    t.functional.to_string(),
                    num(t.value),
                    t.method.name().into(),
                    num(t.abs_error),
                ],
            );
            out
        }
    }
}

const SWEEP_COLUMNS: [&str; 9] = [
    "n",
    "k",
    "trials",
    "aborted",
    "mean_estimate",
    "ground_truth",
    "bias",
    "variance",
    "mse",
];

/// JSON: one document with config, ground truth, rows, and fits. CSV: one
/// row per `(n, k)` grid point.
pub fn emit_sweep(r: &SweepResult, format: Format) -> String {
    match format {
        Format::Json => {
            let c = &r.config;
            let doc = json!({
                "functional": c.functional.to_string(),
                "dist_p": c.dist_p.to_string(),
                "dist_q": c.dist_q.as_ref().map(|q| q.to_string()),
                "r": c.norm.to_string(),
                "k": c.ks,
                "n_grid": c.n_grid,
                "trials": c.trials,
                "seed": c.master_seed,
                "expected_beta": c.expected_beta,
                "ground_truth": truth_value(&r.ground_truth),
                "rows": r.rows,
                "fits": r.fits,
            });
            to_json_string(&doc)
        }
        Format::Csv => {
            let mut out = String::new();
            csv_line(&mut out, &SWEEP_COLUMNS.map(String::from));
            for row in &r.rows {
                csv_line(
                    &mut out,
                    &[
                        row.n.to_string(),
                        row.k.to_string(),
                        row.trials.to_string(),
                        row.aborted.to_string(),
                        num(row.mean_estimate),
                        num(r.ground_truth.value),
                        num(row.bias),
                        num(row.variance),
                        num(row.mse),
                    ],
                );
            }
            out
        }
    }
}

pub fn emit_concentration(r: &ConcentrationReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(r).expect("report serializes");
            v["violations"] = json!(r.violations());
            v["pass"] = json!(r.passed());
            to_json_string(&v)
        }
        Format::Csv => {
            let mut out = String::new();
            csv_line(
                &mut out,
                &["n", "k", "dimension", "trials", "radius", "side", "empirical_tail", "analytic_bound", "standard_error", "status"]
                    .map(String::from),
            );
            for row in &r.rows {
                let side = serde_json::to_value(row.side).expect("enum serializes");
                let status = serde_json::to_value(row.status).expect("enum serializes");
                csv_line(
                    &mut out,
                    &[
                        r.n.to_string(),
                        r.k.to_string(),
                        r.dimension.to_string(),
                        r.trials.to_string(),
                        num(row.radius),
                        side.as_str().unwrap_or_default().to_string(),
                        num(row.empirical_tail),
                        num(row.analytic_bound),
                        num(row.standard_error),
                        status.as_str().unwrap_or_default().to_string(),
                    ],
                );
            }
            out
        }
    }
}

pub fn emit_erlang(r: &ErlangCheckReport, format: Format) -> String {
    let pass = r.passed();
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(r).expect("report serializes");
            v["discarded_fraction"] = json!(r.discarded_fraction());
            v["pass"] = json!(pass);
            to_json_string(&v)
        }
        Format::Csv => {
            let mut out = String::new();
            csv_line(
                &mut out,
                &["n", "k", "dimension", "ks_statistic", "trials_used", "trials_discarded", "pass"]
                    .map(String::from),
            );
            csv_line(
                &mut out,
                &[
                    r.n.to_string(),
                    r.k.to_string(),
                    r.dimension.to_string(),
                    num(r.ks_statistic),
                    r.trials_used.to_string(),
                    r.trials_discarded.to_string(),
                    pass.to_string(),
                ],
            );
            out
        }
    }
}

pub fn emit_selftest(cases: &[SelftestCase], format: Format) -> String {
    match format {
        Format::Json => {
            let pass = cases.iter().all(|c| c.pass);
            to_json_string(&json!({ "cases": cases, "pass": pass }))
        }
        Format::Csv => {
            let mut out = String::new();
            csv_line(&mut out, &["name", "value", "expected", "abs_error", "pass"].map(String::from));
            for c in cases {
                csv_line(
                    &mut out,
                    &[
                        format!("\"{}\"", c.name),
                        num(c.value),
                        num(c.expected),
                        num(c.abs_error),
                        c.pass.to_string(),
                    ],
                );
            }
            out
        }
    }
}

pub fn emit_moments(r: &MomentReport, format: Format) -> String {
    match format {
        Format::Json => to_json_string(&serde_json::to_value(r).expect("report serializes")),
        Format::Csv => {
            let mut out = String::new();
            csv_line(
                &mut out,
                &["n", "k", "dimension", "alpha", "trials", "empirical_moment", "standard_error", "analytic_bound", "pass"]
                    .map(String::from),
            );
            csv_line(
                &mut out,
                &[
                    r.n.to_string(),
                    r.k.to_string(),
                    r.dimension.to_string(),
                    num(r.alpha),
                    r.trials.to_string(),
                    num(r.empirical_moment),
                    num(r.standard_error),
                    num(r.analytic_bound),
                    r.pass.to_string(),
                ],
            );
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::shannon_entropy;

    #[test]
    fn load_examples() {
        let s = samples_from_str("0.25\n0.75\n", 1, Norm::L2, false).unwrap();
        assert_eq!(s.len(), 2);
        let err = samples_from_str("0.1,0.2,0.3\n", 2, Norm::L2, false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
        let s = samples_from_str("x,y\n0.1,0.2\n0.3,0.4\n", 2, Norm::L2, false).unwrap();
        assert_eq!(s.coords(), &[0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn load_errors_carry_line_numbers() {
        let err = samples_from_str("0.1,0.2\n0.3\n", 2, Norm::L2, false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = samples_from_str("0.1,0.2\n0.3,abc\n", 2, Norm::L2, false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = samples_from_str("", 1, Norm::L2, false).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = samples_from_str("x\n", 1, Norm::L2, false).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn cube_membership() {
        assert!(matches!(
            samples_from_str("0.5\n1.5\n", 1, Norm::L2, false),
            Err(Error::Support { index: 1 })
        ));
        assert!(samples_from_str("0.5\n1.5\n", 1, Norm::L2, true).is_ok());
    }

    #[test]
    fn estimate_json_keys() {
        let s = samples_from_str("0.25\n0.75\n", 1, Norm::L2, false).unwrap();
        let e = shannon_entropy(&s, 1).unwrap();
        let v: Value = serde_json::from_str(&emit_estimate(&e, Format::Json)).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
        for key in ["functional", "k", "n", "value", "correction_description"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["functional"], "shannon");
        let csv = emit_estimate(&e, Format::Csv);
        assert_eq!(csv.lines().count(), 2);
    }
}
