//! File formats: CSV for points, labels, and distance matrices; JSON for
//! reports and manifests. Floats are written with 17 significant digits
//! so a load of a save restores the exact f64 values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// One manifest sits beside (or inside) every command's outputs. Two runs
/// with identical manifests produce identical output bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Every parameter of the run, rng seeds included.
    pub config: serde_json::Value,
    /// SHA-256 of each input file's bytes, keyed by the path as given.
    pub input_hashes: serde_json::Map<String, serde_json::Value>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        inputs: &[&Path],
    ) -> Result<Self, CliError> {
        let mut input_hashes = serde_json::Map::new();
        for path in inputs {
            input_hashes.insert(
                path.display().to_string(),
                serde_json::Value::String(sha256_hex(path)?),
            );
        }
        Ok(RunManifest {
            command: command.to_string(),
            config,
            input_hashes,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

pub fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        write!(hex, "{byte:02x}").expect("writing to a String cannot fail");
    }
    Ok(hex)
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_float(token: &str, path: &Path, line: usize) -> Result<f64, CliError> {
    token.trim().parse::<f64>().map_err(|_| {
        CliError::Usage(format!(
            "{}:{}: expected a number, found {token:?}",
            path.display(),
            line + 1
        ))
    })
}

/// Points CSV: a `x0,x1,...` header, then one row of coordinates per point.
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{}: empty points file", path.display())))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    for (idx, name) in columns.iter().enumerate() {
        if *name != format!("x{idx}") {
            return Err(CliError::Usage(format!(
                "{}: bad points header (column {idx} is {name:?}, expected \"x{idx}\")",
                path.display()
            )));
        }
    }
    let mut points = Vec::new();
    for (line, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let coords: Vec<f64> = row
            .split(',')
            .map(|t| parse_float(t, path, line))
            .collect::<Result<_, _>>()?;
        if coords.len() != columns.len() {
            return Err(CliError::Usage(format!(
                "{}:{}: {} values in a {}-column file",
                path.display(),
                line + 1,
                coords.len(),
                columns.len()
            )));
        }
        points.push(coords);
    }
    Ok(points)
}

pub fn write_points(path: &Path, points: &[Vec<f64>]) -> Result<(), CliError> {
    let dim = points.first().map_or(0, Vec::len);
    let header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for point in points {
        let row: Vec<String> = point.iter().map(|c| format!("{c:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Labels CSV: one nonnegative integer per row, no header.
pub fn read_labels(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = read_to_string(path)?;
    let mut labels = Vec::new();
    for (line, row) in text.lines().enumerate() {
        if row.trim().is_empty() {
            continue;
        }
        labels.push(row.trim().parse::<usize>().map_err(|_| {
            CliError::Usage(format!(
                "{}:{}: expected a block label, found {row:?}",
                path.display(),
                line + 1
            ))
        })?);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), CliError> {
    let mut out = String::new();
    for label in labels {
        writeln!(out, "{label}").expect("writing to a String cannot fail");
    }
    write_file(path, &out)
}

/// Distances CSV: an n×n matrix, one row per line, no header.
pub fn read_square(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_to_string(path)?;
    let mut rows = Vec::new();
    for (line, row) in text.lines().enumerate() {
        if row.trim().is_empty() {
            continue;
        }
        rows.push(
            row.split(',')
                .map(|t| parse_float(t, path, line))
                .collect::<Result<Vec<f64>, _>>()?,
        );
    }
    Ok(rows)
}

pub fn write_square(path: &Path, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|d| format!("{d:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("report serialization failed: {e}")))?;
    text.push('\n');
    write_file(path, &text)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}
