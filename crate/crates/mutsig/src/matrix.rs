//! Dense non-negative matrices, mutation catalogs, and the shared
//! Frobenius loss.
//!
//! The whole crate fixes the orientation features-by-samples: a catalog `V`
//! is M mutation types by N samples, a basis `H` is M x K, and a weight
//! matrix `W` is K x N.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// A dense matrix whose entries are all finite and `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonNegMatrix {
    data: Array2<f64>,
}

impl NonNegMatrix {
    /// Validate and wrap a dense array.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        for ((i, j), &v) in data.indexed_iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        Ok(Self { data })
    }

    /// Build from a row-major nested vector.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Parse("ragged rows in matrix literal".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let data = Array2::from_shape_vec((r, c), flat)
            .map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(data)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Column `j` as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).to_vec()
    }

    pub fn mean(&self) -> f64 {
        self.data.mean().unwrap_or(0.0)
    }

    pub fn is_all_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

/// Average Frobenius distance `||V - V^hat||_F / (M * N)`.
pub fn frobenius_loss(v: &NonNegMatrix, v_hat: &NonNegMatrix) -> Result<f64> {
    if v.rows() != v_hat.rows() || v.cols() != v_hat.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", v.rows(), v.cols()),
            got: format!("{}x{}", v_hat.rows(), v_hat.cols()),
        });
    }
    Ok(frobenius_loss_arrays(v.array(), v_hat.array()))
}

/// Same loss on raw arrays; caller guarantees equal shapes.
pub(crate) fn frobenius_loss_arrays(v: &Array2<f64>, v_hat: &Array2<f64>) -> f64 {
    let sq: f64 = v
        .iter()
        .zip(v_hat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    sq.sqrt() / (v.nrows() * v.ncols()) as f64
}

/// An M x N matrix of entries i.i.d. uniform on `[0, 1)`; pure in
/// `(rows, cols, seed)`.
pub fn init_uniform(rows: usize, cols: usize, seed: u64) -> NonNegMatrix {
    let mut rng = rng_from_seed(seed);
    let data = Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>());
    NonNegMatrix { data }
}

pub(crate) fn uniform_array(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    init_uniform(rows, cols, seed).into_array()
}

/// A mutation count matrix with labelled rows (mutation types) and columns
/// (samples).
#[derive(Debug, Clone, PartialEq)]
pub struct MutationCatalog {
    pub matrix: NonNegMatrix,
    pub feature_labels: Vec<String>,
    pub sample_ids: Vec<String>,
}

impl MutationCatalog {
    pub fn new(
        matrix: NonNegMatrix,
        feature_labels: Vec<String>,
        sample_ids: Vec<String>,
    ) -> Result<Self> {
        if feature_labels.len() != matrix.rows() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} feature labels", matrix.rows()),
                got: format!("{}", feature_labels.len()),
            });
        }
        if sample_ids.len() != matrix.cols() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} sample ids", matrix.cols()),
                got: format!("{}", sample_ids.len()),
            });
        }
        check_unique(&feature_labels, "feature label")?;
        check_unique(&sample_ids, "sample id")?;
        Ok(Self {
            matrix,
            feature_labels,
            sample_ids,
        })
    }

    /// Default labels `M1..` / `S1..` for synthetic catalogs.
    pub fn with_default_labels(matrix: NonNegMatrix) -> Self {
        let feature_labels = (1..=matrix.rows()).map(|i| format!("M{i}")).collect();
        let sample_ids = (1..=matrix.cols()).map(|j| format!("S{j}")).collect();
        Self {
            matrix,
            feature_labels,
            sample_ids,
        }
    }

    pub fn n_features(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_samples(&self) -> usize {
        self.matrix.cols()
    }

    /// A catalog restricted to the given sample columns, duplicates kept.
    pub fn select_samples(&self, indices: &[usize]) -> Result<Self> {
        let m = self.n_features();
        let mut data = Array2::zeros((m, indices.len()));
        for (out_j, &j) in indices.iter().enumerate() {
            if j >= self.n_samples() {
                return Err(Error::InvalidConfig(format!(
                    "sample index {j} out of range (N = {})",
                    self.n_samples()
                )));
            }
            data.column_mut(out_j).assign(&self.matrix.array().column(j));
        }
        // repeated columns get suffixed ids so uniqueness holds
        let mut seen = std::collections::HashMap::new();
        let sample_ids = indices
            .iter()
            .map(|&j| {
                let count = seen.entry(j).or_insert(0usize);
                *count += 1;
                if *count == 1 {
                    self.sample_ids[j].clone()
                } else {
                    format!("{}#{}", self.sample_ids[j], count)
                }
            })
            .collect();
        Self::new(NonNegMatrix::new(data)?, self.feature_labels.clone(), sample_ids)
    }
}

fn check_unique(items: &[String], what: &str) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for item in items {
        if !seen.insert(item) {
            return Err(Error::Parse(format!("duplicate {what} '{item}'")));
        }
    }
    Ok(())
}

/// Which non-negativity scheme the autoencoder uses; see the aenmf module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonNegScheme {
    /// Project weights onto `>= 0` after each optimizer step.
    Pg,
    /// ReLU the weights inside the forward pass.
    FpPg,
    /// Absolute-value the weights after each optimizer step.
    Abs,
    /// Absolute-value the weights inside the forward pass (default).
    FpAbs,
}

impl std::str::FromStr for NonNegScheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "pg" => Ok(Self::Pg),
            "fp_pg" | "fp-pg" => Ok(Self::FpPg),
            "abs" => Ok(Self::Abs),
            "fp_abs" | "fp-abs" => Ok(Self::FpAbs),
            other => Err(format!("unknown non-negativity scheme '{other}'")),
        }
    }
}

impl std::fmt::Display for NonNegScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Pg => "pg",
            Self::FpPg => "fp_pg",
            Self::Abs => "abs",
            Self::FpAbs => "fp_abs",
        };
        f.write_str(s)
    }
}

/// Shared fit configuration for all three factorization methods.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitConfig {
    pub k: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    /// Adam step size; AE-NMF only.
    pub learning_rate: f64,
    /// Weight constraint scheme; AE-NMF only.
    pub nonneg_scheme: NonNegScheme,
}

impl FitConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            // the convergence tolerance is reachable at desk scale with a
            // generous cap; runs that hit it report converged = false
            max_iters: 500_000,
            rel_tol: 1e-10,
            seed,
            learning_rate: 1e-4,
            nonneg_scheme: NonNegScheme::FpAbs,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.learning_rate = lr;
        self
    }

    pub fn with_scheme(mut self, scheme: NonNegScheme) -> Self {
        self.nonneg_scheme = scheme;
        self
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let k_max = m.min(n);
        if self.k < 1 || self.k > k_max {
            return Err(Error::InvalidConfig(format!(
                "k = {} outside 1..={k_max} for a {m}x{n} input",
                self.k
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be > 0".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Which factorization produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nmf,
    Cnmf,
    Aenmf,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Nmf, Method::Cnmf, Method::Aenmf];
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "nmf" => Ok(Self::Nmf),
            "cnmf" | "c-nmf" => Ok(Self::Cnmf),
            "aenmf" | "ae-nmf" => Ok(Self::Aenmf),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Nmf => "nmf",
            Self::Cnmf => "cnmf",
            Self::Aenmf => "aenmf",
        };
        f.write_str(s)
    }
}

/// The result of a factorization fit: `V ~= H W` with non-negative factors.
#[derive(Debug, Clone)]
pub struct FactorModel {
    pub method: Method,
    /// M x K basis (signatures).
    pub h: NonNegMatrix,
    /// K x N weights (exposures).
    pub w: NonNegMatrix,
    /// Normalized Frobenius loss after each sweep, initial loss first.
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    pub iters_run: usize,
}

impl FactorModel {
    pub fn k(&self) -> usize {
        self.h.cols()
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("loss trace never empty")
    }

    /// Reconstruction `H W`.
    pub fn reconstruction(&self) -> NonNegMatrix {
        NonNegMatrix::new(self.h.array().dot(self.w.array()))
            .expect("product of non-negative matrices is non-negative")
    }
}
