//! Convex NMF: basis vectors constrained to non-negative combinations of
//! data columns, `V ~= V W1 W2`, fitted with Ding-style multiplicative
//! updates. The exposed model is `H = V W1`, `W = W2`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matrix::{
    frobenius_loss_arrays, uniform_array, FactorModel, FitConfig, Method, NonNegMatrix,
};
use crate::nmf::DENOM_GUARD;
use crate::rng::child_seed;

/// The two convex-NMF factors: `W1` mixes data columns into basis vectors,
/// `W2` holds sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexFactors {
    /// N x K column-mixing weights.
    pub w1: NonNegMatrix,
    /// K x N sample weights.
    pub w2: NonNegMatrix,
}

impl ConvexFactors {
    pub fn new(w1: NonNegMatrix, w2: NonNegMatrix) -> Result<Self> {
        if w1.cols() != w2.rows() || w1.rows() != w2.cols() {
            return Err(Error::DimensionMismatch {
                expected: "W1 NxK and W2 KxN with shared K and N".into(),
                got: format!(
                    "W1 {}x{}, W2 {}x{}",
                    w1.rows(),
                    w1.cols(),
                    w2.rows(),
                    w2.cols()
                ),
            });
        }
        Ok(Self { w1, w2 })
    }

    pub fn k(&self) -> usize {
        self.w1.cols()
    }
}

/// One sweep of the square-root multiplicative updates; `gram = V^T V` is
/// precomputed by the caller. W1 first, then W2 against the fresh W1.
pub fn cnmf_update(
    w1: &NonNegMatrix,
    w2: &NonNegMatrix,
    gram: &NonNegMatrix,
) -> Result<(NonNegMatrix, NonNegMatrix)> {
    let n = w1.rows();
    if gram.rows() != n || gram.cols() != n || w2.rows() != w1.cols() || w2.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("gram {n}x{n}, W2 {}x{n}", w1.cols()),
            got: format!(
                "gram {}x{}, W2 {}x{}",
                gram.rows(),
                gram.cols(),
                w2.rows(),
                w2.cols()
            ),
        });
    }
    let mut w1 = w1.array().clone();
    let mut w2 = w2.array().clone();
    cnmf_sweep(&mut w1, &mut w2, gram.array());
    Ok((NonNegMatrix::new(w1)?, NonNegMatrix::new(w2)?))
}

fn cnmf_sweep(w1: &mut Array2<f64>, w2: &mut Array2<f64>, gram: &Array2<f64>) {
    // W1 <- W1 .* sqrt( (G W2^T) ./ (G W1 W2 W2^T) )
    {
        let w2t = w2.t();
        let numer = gram.dot(&w2t);
        let denom = gram.dot(&*w1).dot(&*w2).dot(&w2t);
        sqrt_mul_div(w1, &numer, &denom);
    }
    // W2^T <- W2^T .* sqrt( (G W1) ./ (W2^T W1^T G W1) )
    {
        let gw1 = gram.dot(&*w1);
        let mut w2t = w2.t().to_owned();
        let denom = w2t.dot(&w1.t()).dot(&gw1);
        sqrt_mul_div(&mut w2t, &gw1, &denom);
        *w2 = w2t.t().to_owned();
    }
}

fn sqrt_mul_div(base: &mut Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>) {
    ndarray::Zip::from(base)
        .and(numer)
        .and(denom)
        .for_each(|b, &n, &d| *b *= (n / (d + DENOM_GUARD)).sqrt());
}

/// Fit convex NMF from a uniform-`[0,1)` initialization.
pub fn cnmf_fit(v: &NonNegMatrix, config: &FitConfig) -> Result<FactorModel> {
    cnmf_fit_with_init(v, config, None).map(|(model, _)| model)
}

/// Fit convex NMF, optionally from explicit `(W1_0, W2_0)`; returns the
/// fitted `ConvexFactors` alongside the model so callers can inspect the
/// raw parametrization.
pub fn cnmf_fit_with_init(
    v: &NonNegMatrix,
    config: &FitConfig,
    init: Option<ConvexFactors>,
) -> Result<(FactorModel, ConvexFactors)> {
    let (m, n) = (v.rows(), v.cols());
    config.validate(m, n)?;
    if v.is_all_zero() {
        return Err(Error::DegenerateInput("all-zero input matrix".into()));
    }
    let k = config.k;
    let (mut w1, mut w2) = match init {
        Some(factors) => {
            if factors.w1.rows() != n || factors.k() != k {
                return Err(Error::DimensionMismatch {
                    expected: format!("W1 {n}x{k}"),
                    got: format!("W1 {}x{}", factors.w1.rows(), factors.w1.cols()),
                });
            }
            (factors.w1.into_array(), factors.w2.into_array())
        }
        None => (
            uniform_array(n, k, child_seed(config.seed, 0)),
            uniform_array(k, n, child_seed(config.seed, 1)),
        ),
    };

    let va = v.array();
    let gram = va.t().dot(va);
    let loss =
        |w1: &Array2<f64>, w2: &Array2<f64>| frobenius_loss_arrays(va, &va.dot(w1).dot(w2));

    let mut loss_trace = vec![loss(&w1, &w2)];
    let mut converged = false;
    let mut iters_run = 0;
    for _ in 0..config.max_iters {
        cnmf_sweep(&mut w1, &mut w2, &gram);
        iters_run += 1;
        let l = loss(&w1, &w2);
        let prev = *loss_trace.last().unwrap();
        loss_trace.push(l);
        if iters_run > 1 && (prev - l).abs() / prev < config.rel_tol {
            converged = true;
            break;
        }
    }

    let h = NonNegMatrix::new(va.dot(&w1))?;
    let w2 = NonNegMatrix::new(w2)?;
    let model = FactorModel {
        method: Method::Cnmf,
        h,
        w: w2.clone(),
        loss_trace,
        converged,
        iters_run,
    };
    let factors = ConvexFactors::new(NonNegMatrix::new(w1)?, w2)?;
    Ok((model, factors))
}
