//! Standard NMF via Lee-Seung multiplicative updates under the Frobenius
//! loss.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matrix::{
    frobenius_loss_arrays, uniform_array, FactorModel, FitConfig, Method, NonNegMatrix,
};
use crate::rng::child_seed;

/// Guard added to multiplicative-update denominators.
pub(crate) const DENOM_GUARD: f64 = 1e-16;

/// One multiplicative sweep: H first, then W against the fresh H.
///
/// `h' = h .* (V W^T) ./ (h W W^T + eps)`,
/// `w' = w .* (h'^T V) ./ (h'^T h' w + eps)`.
pub fn nmf_update(
    h: &NonNegMatrix,
    w: &NonNegMatrix,
    v: &NonNegMatrix,
) -> Result<(NonNegMatrix, NonNegMatrix)> {
    check_dims(h.array(), w.array(), v.array())?;
    let mut h = h.array().clone();
    let mut w = w.array().clone();
    nmf_sweep(&mut h, &mut w, v.array());
    Ok((NonNegMatrix::new(h)?, NonNegMatrix::new(w)?))
}

fn check_dims(h: &Array2<f64>, w: &Array2<f64>, v: &Array2<f64>) -> Result<()> {
    let (m, n) = v.dim();
    if h.nrows() != m || w.ncols() != n || h.ncols() != w.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("H {m}xK, W Kx{n} for V {m}x{n}"),
            got: format!(
                "H {}x{}, W {}x{}",
                h.nrows(),
                h.ncols(),
                w.nrows(),
                w.ncols()
            ),
        });
    }
    Ok(())
}

fn nmf_sweep(h: &mut Array2<f64>, w: &mut Array2<f64>, v: &Array2<f64>) {
    let wt = w.t();
    let numer_h = v.dot(&wt);
    let denom_h = h.dot(&w.dot(&wt));
    azip_mul_div(h, &numer_h, &denom_h);

    let ht = h.t();
    let numer_w = ht.dot(v);
    let denom_w = ht.dot(h).dot(&*w);
    azip_mul_div(w, &numer_w, &denom_w);
}

pub(crate) fn azip_mul_div(base: &mut Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>) {
    ndarray::Zip::from(base)
        .and(numer)
        .and(denom)
        .for_each(|b, &n, &d| *b *= n / (d + DENOM_GUARD));
}

/// Fit NMF from a uniform-`[0,1)` initialization.
pub fn nmf_fit(v: &NonNegMatrix, config: &FitConfig) -> Result<FactorModel> {
    nmf_fit_with_init(v, config, None)
}

/// Fit NMF, optionally from an explicit `(H0, W0)`; used to share the
/// weight initialization with C-NMF in paired comparisons.
pub fn nmf_fit_with_init(
    v: &NonNegMatrix,
    config: &FitConfig,
    init: Option<(NonNegMatrix, NonNegMatrix)>,
) -> Result<FactorModel> {
    let (m, n) = (v.rows(), v.cols());
    config.validate(m, n)?;
    if v.is_all_zero() {
        return Err(Error::DegenerateInput("all-zero input matrix".into()));
    }
    let k = config.k;
    let (mut h, mut w) = match init {
        Some((h0, w0)) => {
            check_dims(h0.array(), w0.array(), v.array())?;
            if h0.cols() != k {
                return Err(Error::InvalidConfig(format!(
                    "initial factors have K = {}, config has K = {k}",
                    h0.cols()
                )));
            }
            (h0.into_array(), w0.into_array())
        }
        None => (
            uniform_array(m, k, child_seed(config.seed, 0)),
            uniform_array(k, n, child_seed(config.seed, 1)),
        ),
    };

    let va = v.array();
    let mut loss_trace = vec![frobenius_loss_arrays(va, &h.dot(&w))];
    let mut converged = false;
    let mut iters_run = 0;
    for _ in 0..config.max_iters {
        nmf_sweep(&mut h, &mut w, va);
        iters_run += 1;
        let loss = frobenius_loss_arrays(va, &h.dot(&w));
        let prev = *loss_trace.last().unwrap();
        loss_trace.push(loss);
        if iters_run > 1 && (prev - loss).abs() / prev < config.rel_tol {
            converged = true;
            break;
        }
    }

    Ok(FactorModel {
        method: Method::Nmf,
        h: NonNegMatrix::new(h)?,
        w: NonNegMatrix::new(w)?,
        loss_trace,
        converged,
        iters_run,
    })
}
