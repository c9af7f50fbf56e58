//! Non-negative least squares refitting against a fixed basis, and the
//! resulting test error.
//!
//! The solver is Lawson-Hanson active set on the normal equations. The
//! contract is the KKT condition at tolerance `1e-6 * ||H^T v||_inf`, not
//! the particular algorithm.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::matrix::{frobenius_loss_arrays, NonNegMatrix};

const KKT_REL_TOL: f64 = 1e-6;
const MAX_OUTER: usize = 10_000;

/// `argmin_{w >= 0} ||H w - v||_2` for one column.
pub fn nnls(h: &NonNegMatrix, v_col: &[f64]) -> Result<Vec<f64>> {
    let (m, k) = (h.rows(), h.cols());
    if v_col.len() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("{m}-vector"),
            got: format!("{}-vector", v_col.len()),
        });
    }
    for j in 0..k {
        if (0..m).all(|i| h.get(i, j) == 0.0) {
            return Err(Error::DegenerateBasis(j));
        }
    }
    let a = h.array();
    let v = Array1::from_vec(v_col.to_vec());
    let ata = a.t().dot(a);
    let atv = a.t().dot(&v);
    Ok(nnls_normal_eq(&ata, &atv).to_vec())
}

/// Lawson-Hanson on precomputed `A^T A` and `A^T v`.
fn nnls_normal_eq(ata: &Array2<f64>, atv: &Array1<f64>) -> Array1<f64> {
    let k = atv.len();
    let mut x = Array1::<f64>::zeros(k);
    let mut passive = vec![false; k];
    let scale = atv.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    let tol = KKT_REL_TOL * scale * 1e-2; // interior tolerance, stricter than the contract

    for _ in 0..MAX_OUTER {
        // negative gradient of 1/2||Hx - v||^2 is A^T v - A^T A x
        let grad = atv - &ata.dot(&x);
        // steepest ascent coordinate among the active (zero) set
        let mut best: Option<(usize, f64)> = None;
        for j in 0..k {
            if !passive[j] && grad[j] > tol {
                if best.map_or(true, |(_, g)| grad[j] > g) {
                    best = Some((j, grad[j]));
                }
            }
        }
        let Some((enter, _)) = best else { break };
        passive[enter] = true;

        // inner loop: solve on the passive set, step back while infeasible
        for _ in 0..MAX_OUTER {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let z = solve_subproblem(ata, atv, &idx);
            if z.iter().all(|&zi| zi > 0.0) {
                x.fill(0.0);
                for (pos, &j) in idx.iter().enumerate() {
                    x[j] = z[pos];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (pos, &j) in idx.iter().enumerate() {
                if z[pos] <= 0.0 && x[j] - z[pos] > 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[pos]));
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (pos, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[pos] - x[j]);
            }
            let mut any_removed = false;
            for &j in &idx {
                if x[j] <= 1e-12 {
                    x[j] = 0.0;
                    passive[j] = false;
                    any_removed = true;
                }
            }
            if !any_removed {
                // numerical stall; accept the clipped point
                break;
            }
        }
    }
    x
}

/// Solve the unconstrained normal equations restricted to `idx` via
/// Gaussian elimination with partial pivoting; K is small here.
fn solve_subproblem(ata: &Array2<f64>, atv: &Array1<f64>, idx: &[usize]) -> Vec<f64> {
    let p = idx.len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            a[r][c] = ata[(i, j)];
        }
        a[r][p] = atv[i];
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for r in 0..p {
            if r != col {
                let f = a[r][col] / d;
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..p)
        .map(|r| {
            if a[r][r].abs() < 1e-300 {
                0.0
            } else {
                a[r][p] / a[r][r]
            }
        })
        .collect()
}

/// Check the KKT conditions for a candidate NNLS solution; used by tests
/// and by callers that want to audit a refit.
pub fn kkt_residual(h: &NonNegMatrix, v_col: &[f64], w: &[f64]) -> f64 {
    let a = h.array();
    let v = Array1::from_vec(v_col.to_vec());
    let x = Array1::from_vec(w.to_vec());
    let grad = a.t().dot(&a.dot(&x)) - a.t().dot(&v);
    let scale = a
        .t()
        .dot(&v)
        .iter()
        .fold(0.0f64, |acc, g| acc.max(g.abs()))
        .max(1e-300);
    let mut worst = 0.0f64;
    for j in 0..w.len() {
        if w[j] > 0.0 {
            worst = worst.max(grad[j].abs());
        } else {
            worst = worst.max((-grad[j]).max(0.0));
        }
    }
    worst / scale
}

/// Column-wise NNLS of a test block against a fixed basis.
pub fn refit_weights(h: &NonNegMatrix, v_test: &NonNegMatrix) -> Result<NonNegMatrix> {
    if v_test.rows() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", h.rows()),
            got: format!("{} rows", v_test.rows()),
        });
    }
    let k = h.cols();
    let n = v_test.cols();
    let mut w = Array2::zeros((k, n));
    for j in 0..n {
        let col = nnls(h, &v_test.column(j))?;
        for (i, &val) in col.iter().enumerate() {
            w[(i, j)] = val;
        }
    }
    NonNegMatrix::new(w)
}

/// `frobenius_loss` between a test block and its refit reconstruction.
pub fn test_error(h: &NonNegMatrix, v_test: &NonNegMatrix) -> Result<f64> {
    let w = refit_weights(h, v_test)?;
    let rec = h.array().dot(w.array());
    Ok(frobenius_loss_arrays(v_test.array(), &rec))
}
