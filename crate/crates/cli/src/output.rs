//! Row types for every artifact and the CSV/JSON writers and readers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceRow {
    pub mask: u8,
    pub zeroed: String,
    pub dim: usize,
    pub verdict: String,
    pub evidence_kind: String,
    pub evidence_detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dim: usize,
    pub faces: usize,
    pub voids: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub mask: u8,
    pub zeroed: String,
    pub principle: String,
    pub mu_star: f64,
    pub reproducible: bool,
}

/// One sampled segment of a boundary curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub direction: usize,
    pub weights: String,
    pub mu_star: f64,
}

/// `(μ, statistic)` pairs along one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub mu: f64,
    /// Empty where the statistic is undefined (deterministic marginals for ML).
    pub statistic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpaReport {
    pub level: String,
    pub segment: String,
    pub weights: String,
    pub mu_star: f64,
    pub certificate_min_eigenvalue: f64,
    pub inconclusive_steps: usize,
    pub feas_tol: f64,
    pub tol_mu: f64,
    pub facial_reduction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
    pub born: f64,
    pub closed_form: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub quantum: f64,
    pub almost_quantum: f64,
    pub level_one: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimWitnessReport {
    pub qubit_chsh_best: f64,
    pub qutrit_i3322_best: f64,
    pub qubit_restarts: usize,
    pub qutrit_restarts: usize,
    pub verdict: String,
}

pub fn artifact(dir: &Path, stem: &str, format: Format) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}

pub fn write_rows<T: Serialize>(path: &Path, format: Format, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path)
                .with_context(|| format!("creating {}", path.display()))?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(rows)?;
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

pub fn read_rows<T: DeserializeOwned>(path: &Path, format: Format) -> Result<Vec<T>> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_path(path)
                .with_context(|| format!("opening {}", path.display()))?;
            Ok(r.deserialize()
                .collect::<std::result::Result<Vec<T>, _>>()?)
        }
        Format::Json => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn join_indices(indices: &[usize]) -> String {
    indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn join_weights(w: &[f64]) -> String {
    w.iter()
        .map(|v| format!("{v:.12}"))
        .collect::<Vec<_>>()
        .join(" ")
}
