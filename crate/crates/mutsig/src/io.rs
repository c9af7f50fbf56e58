//! File ingestion and persistence: catalog TSV, COSMIC-format signature
//! tables, factor matrices, and run manifests.
//!
//! Numeric output uses Rust's shortest round-trip decimal formatting, so
//! writing and re-reading a file is lossless.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::{FactorModel, MutationCatalog, NonNegMatrix};

/// How a catalog file is laid out on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Rows are mutation types, columns are samples (native).
    FeaturesBySamples,
    /// Rows are samples; the loader transposes on ingest.
    SamplesByFeatures,
}

/// Parse a tab-separated catalog: header row of sample ids, first column
/// feature labels.
pub fn load_catalog(path: &Path, orientation: Orientation) -> Result<MutationCatalog> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let mut cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < 2 {
        return Err(Error::Parse(format!(
            "{}: header must name at least one sample",
            path.display()
        )));
    }
    cols.remove(0); // corner cell
    let col_ids: Vec<String> = cols.iter().map(|s| s.to_string()).collect();

    let mut row_labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let label = fields
            .next()
            .ok_or_else(|| Error::Parse(format!("line {}: missing label", lineno + 1)))?;
        let mut row = Vec::with_capacity(col_ids.len());
        for (j, field) in fields.enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::Parse(format!(
                    "line {}: cell ({}, {}) is not numeric: '{}'",
                    lineno + 1,
                    label,
                    col_ids.get(j).map(String::as_str).unwrap_or("?"),
                    field
                ))
            })?;
            if value < 0.0 {
                return Err(Error::Parse(format!(
                    "line {}: negative value {} in cell ({}, {})",
                    lineno + 1,
                    value,
                    label,
                    col_ids.get(j).map(String::as_str).unwrap_or("?")
                )));
            }
            row.push(value);
        }
        if row.len() != col_ids.len() {
            return Err(Error::Parse(format!(
                "line {}: expected {} values, found {}",
                lineno + 1,
                col_ids.len(),
                row.len()
            )));
        }
        row_labels.push(label.to_string());
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }

    let matrix = NonNegMatrix::from_rows(rows)?;
    match orientation {
        Orientation::FeaturesBySamples => MutationCatalog::new(matrix, row_labels, col_ids),
        Orientation::SamplesByFeatures => {
            let transposed = NonNegMatrix::new(matrix.array().t().to_owned())?;
            MutationCatalog::new(transposed, col_ids, row_labels)
        }
    }
}

/// Write a catalog in the native features-by-samples layout.
pub fn write_catalog(path: &Path, catalog: &MutationCatalog) -> Result<()> {
    let mut out = String::from("feature");
    for id in &catalog.sample_ids {
        out.push('\t');
        out.push_str(id);
    }
    out.push('\n');
    for (i, label) in catalog.feature_labels.iter().enumerate() {
        out.push_str(label);
        for j in 0..catalog.n_samples() {
            write!(out, "\t{}", catalog.matrix.get(i, j)).unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// A signature reference library in COSMIC layout: a "Type" column of 96
/// SBS contexts and one probability column per signature.
#[derive(Debug, Clone)]
pub struct CosmicCatalog {
    pub feature_labels: Vec<String>,
    pub signatures: NonNegMatrix,
    pub signature_names: Vec<String>,
}

pub fn load_cosmic(path: &Path) -> Result<CosmicCatalog> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let mut names: Vec<String> = header.split('\t').map(|s| s.to_string()).collect();
    if names.is_empty() || names.remove(0).to_ascii_lowercase() != "type" {
        return Err(Error::Parse(format!(
            "{}: first header column must be 'Type'",
            path.display()
        )));
    }

    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        labels.push(fields.next().unwrap_or_default().to_string());
        let row: Vec<f64> = fields
            .map(|f| {
                f.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("non-numeric value '{f}'")))
            })
            .collect::<Result<_>>()?;
        if row.len() != names.len() {
            return Err(Error::Parse(format!(
                "row '{}' has {} values for {} signatures",
                labels.last().unwrap(),
                row.len(),
                names.len()
            )));
        }
        rows.push(row);
    }
    if rows.len() != 96 {
        return Err(Error::Parse(format!(
            "expected 96 SBS contexts, found {}",
            rows.len()
        )));
    }
    let matrix = NonNegMatrix::from_rows(rows)?;
    for (j, name) in names.iter().enumerate() {
        let sum: f64 = (0..96).map(|i| matrix.get(i, j)).sum();
        if !(0.99..=1.01).contains(&sum) {
            return Err(Error::Parse(format!(
                "signature {name} sums to {sum}, outside [0.99, 1.01]"
            )));
        }
    }
    Ok(CosmicCatalog {
        feature_labels: labels,
        signatures: matrix,
        signature_names: names,
    })
}

/// Write a signature library in COSMIC layout.
pub fn write_cosmic(path: &Path, catalog: &CosmicCatalog) -> Result<()> {
    let mut out = String::from("Type");
    for name in &catalog.signature_names {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for (i, label) in catalog.feature_labels.iter().enumerate() {
        out.push_str(label);
        for j in 0..catalog.signatures.cols() {
            write!(out, "\t{}", catalog.signatures.get(i, j)).unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write a labelled matrix as TSV (corner cell names the row dimension).
pub fn write_matrix_tsv(
    path: &Path,
    matrix: &NonNegMatrix,
    corner: &str,
    row_labels: &[String],
    col_labels: &[String],
) -> Result<()> {
    let mut out = String::from(corner);
    for c in col_labels {
        out.push('\t');
        out.push_str(c);
    }
    out.push('\n');
    for (i, label) in row_labels.iter().enumerate() {
        out.push_str(label);
        for j in 0..matrix.cols() {
            write!(out, "\t{}", matrix.get(i, j)).unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read back a matrix written by `write_matrix_tsv`.
pub fn load_matrix_tsv(path: &Path) -> Result<(NonNegMatrix, Vec<String>, Vec<String>)> {
    let cat = load_catalog(path, Orientation::FeaturesBySamples)?;
    Ok((cat.matrix, cat.feature_labels, cat.sample_ids))
}

/// Split a fitted model into files comparable with COSMIC conventions:
/// signatures L1-normalized to probability columns with the normalization
/// folded into the exposures. Returns `(signatures, exposures)`.
pub fn normalized_factors(model: &FactorModel) -> (NonNegMatrix, NonNegMatrix) {
    let h = model.h.array();
    let w = model.w.array();
    let k = h.ncols();
    let mut h_norm = h.clone();
    let mut w_norm = w.clone();
    for j in 0..k {
        let sum: f64 = h.column(j).sum();
        if sum > 0.0 {
            h_norm.column_mut(j).mapv_inplace(|x| x / sum);
            w_norm.row_mut(j).mapv_inplace(|x| x * sum);
        }
    }
    (
        NonNegMatrix::new(h_norm).expect("normalization preserves sign"),
        NonNegMatrix::new(w_norm).expect("normalization preserves sign"),
    )
}

/// SHA-256 digest of a file, hex-encoded.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Summary of one fit, embedded in the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub method: String,
    pub k: usize,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Everything needed to reproduce a command's outputs byte for byte:
/// the resolved configuration, seed, input digests, and software version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub input_digests: BTreeMap<String, String>,
    pub version: String,
    pub fits: Vec<FitSummary>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, master_seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config,
            master_seed,
            input_digests: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            fits: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.input_digests
            .insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn record_fit(&mut self, model: &FactorModel) {
        self.fits.push(FitSummary {
            method: model.method.to_string(),
            k: model.k(),
            final_loss: model.final_loss(),
            iterations: model.iters_run,
            converged: model.converged,
        });
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

/// A synthetic COSMIC-format fixture with `count` signatures over the 96
/// SBS contexts; stands in for the published library in tests and demos.
pub fn synthetic_cosmic(count: usize, seed: u64) -> CosmicCatalog {
    let signatures = crate::sim::random_signatures(96, count, seed);
    CosmicCatalog {
        feature_labels: crate::sim::sbs96_contexts(),
        signatures,
        signature_names: (1..=count).map(|i| format!("SBS{i}")).collect(),
    }
}

/// Loss trace CSV: `iteration,loss` with iteration 0 the initial loss.
pub fn loss_trace_csv(model: &FactorModel) -> String {
    let mut out = String::from("iteration,loss\n");
    for (i, loss) in model.loss_trace.iter().enumerate() {
        writeln!(out, "{i},{loss}").unwrap();
    }
    out
}
