use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use repweight::analysis::format_sig;
use serde_json::Value;

/// A JSON number rounded to 15 significant digits; `null` for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(format_sig(x).parse::<f64>().expect("formatted float parses"))
    } else {
        Value::Null
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// `index,weight` rows.
pub fn write_weights(path: &Path, w: &[f64]) -> Result<()> {
    let mut text = String::from("index,weight\n");
    for (i, x) in w.iter().enumerate() {
        writeln!(text, "{i},{}", format_sig(*x)).expect("writing to a string");
    }
    write_text(path, &text)
}

pub fn write_residuals(path: &Path, primal: &[f64], dual: &[f64]) -> Result<()> {
    let mut text = String::from("iteration,primal,dual\n");
    for (k, (p, d)) in primal.iter().zip(dual).enumerate() {
        writeln!(text, "{},{},{}", k + 1, format_sig(*p), format_sig(*d)).expect("writing to a string");
    }
    write_text(path, &text)
}

pub fn write_indices(path: &Path, indices: &[usize]) -> Result<()> {
    let mut text = String::from("index\n");
    for i in indices {
        writeln!(text, "{i}").expect("writing to a string");
    }
    write_text(path, &text)
}

/// Reads an `index,weight` file back into a dense vector.
pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut pairs = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |k: usize| -> Result<&str> {
            record
                .get(k)
                .with_context(|| format!("{}: row {} is too short", path.display(), row + 1))
        };
        let index: usize = parse(0)?
            .trim()
            .parse()
            .with_context(|| format!("{}: bad index on row {}", path.display(), row + 1))?;
        let weight: f64 = parse(1)?
            .trim()
            .parse()
            .with_context(|| format!("{}: bad weight on row {}", path.display(), row + 1))?;
        pairs.push((index, weight));
    }
    let n = pairs.len();
    let mut w = vec![f64::NAN; n];
    for (index, weight) in pairs {
        anyhow::ensure!(index < n && w[index].is_nan(), "{}: index {index} is out of range or repeated", path.display());
        w[index] = weight;
    }
    Ok(w)
}
