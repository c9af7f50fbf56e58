//! Model-order selection: bootstrap out-of-bag test errors, the paired
//! Wilcoxon stopping rule, the cross-method combination of chosen K, and
//! the Welch t-test used in consistency analysis.

use ndarray::{Array2, Array3};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::aenmf::aenmf_fit;
use crate::cnmf::cnmf_fit;
use crate::error::{Error, Result};
use crate::matrix::{FitConfig, Method, MutationCatalog};
use crate::nmf::nmf_fit;
use crate::refit::test_error;
use crate::rng::{child_seed, rng_from_seed};
use rand::Rng;

/// Out-of-bag test errors indexed `(replicate, K - 2, model)` with the
/// model axis ordered NMF, C-NMF, AE-NMF.
#[derive(Debug, Clone)]
pub struct BootstrapErrors {
    pub values: Array3<f64>,
    pub nsims: usize,
    pub k_max: usize,
}

impl BootstrapErrors {
    pub fn get(&self, replicate: usize, k: usize, model: Method) -> f64 {
        self.values[(replicate, k - 2, model_axis(model))]
    }

    /// The `nsims x (k_max - 1)` error matrix for one model.
    pub fn for_model(&self, model: Method) -> Array2<f64> {
        self.values
            .index_axis(ndarray::Axis(2), model_axis(model))
            .to_owned()
    }

    /// Long-format CSV: `replicate,k,model,test_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replicate,k,model,test_error\n");
        for i in 0..self.nsims {
            for k in 2..=self.k_max {
                for model in Method::ALL {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        i + 1,
                        k,
                        model,
                        self.get(i, k, model)
                    ));
                }
            }
        }
        out
    }
}

fn model_axis(model: Method) -> usize {
    match model {
        Method::Nmf => 0,
        Method::Cnmf => 1,
        Method::Aenmf => 2,
    }
}

/// One bootstrap train/out-of-bag split of the sample columns.
fn draw_split(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    loop {
        let train: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut drawn = vec![false; n];
        for &j in &train {
            drawn[j] = true;
        }
        let test: Vec<usize> = (0..n).filter(|&j| !drawn[j]).collect();
        if !test.is_empty() {
            return (train, test);
        }
        // empty out-of-bag set: redraw (probability is negligible for n >= 10)
    }
}

/// Bootstrap test-error sampling: per replicate, draw N training columns
/// with replacement, fit every model for every `K in 2..=k_max` on the
/// training columns, refit weights on the out-of-bag columns by NNLS, and
/// record the test error. The same split serves all models and K within a
/// replicate; each replicate is deterministic in `(master_seed, replicate)`
/// alone, so replicates may run concurrently.
pub fn bootstrap_test_errors(
    v: &MutationCatalog,
    k_max: usize,
    nsims: usize,
    template: &FitConfig,
    master_seed: u64,
) -> Result<BootstrapErrors> {
    let n = v.n_samples();
    if n < 10 {
        return Err(Error::InvalidConfig(format!(
            "bootstrap selection needs N >= 10 samples, got {n}"
        )));
    }
    if k_max < 2 {
        return Err(Error::InvalidConfig("k_max must be >= 2".into()));
    }

    let per_replicate: Vec<Result<Array2<f64>>> = (0..nsims)
        .into_par_iter()
        .map(|i| {
            let rep_seed = child_seed(master_seed, i as u64);
            let (train_idx, test_idx) = draw_split(n, rep_seed);
            let v_train = v.select_samples(&train_idx)?;
            let v_test = v.select_samples(&test_idx)?;
            let mut slab = Array2::zeros((k_max - 1, 3));
            for k in 2..=k_max {
                for model in Method::ALL {
                    let stream = (k as u64) * 8 + model_axis(model) as u64;
                    let mut cfg = template.clone();
                    cfg.k = k;
                    cfg.seed = child_seed(rep_seed, stream);
                    let fit = match model {
                        Method::Nmf => nmf_fit(&v_train.matrix, &cfg)?,
                        Method::Cnmf => cnmf_fit(&v_train.matrix, &cfg)?,
                        Method::Aenmf => aenmf_fit(&v_train.matrix, &cfg)?,
                    };
                    slab[(k - 2, model_axis(model))] =
                        test_error(&fit.h, &v_test.matrix)?;
                }
            }
            Ok(slab)
        })
        .collect();

    let mut values = Array3::zeros((nsims, k_max - 1, 3));
    for (i, slab) in per_replicate.into_iter().enumerate() {
        values
            .index_axis_mut(ndarray::Axis(0), i)
            .assign(&slab?);
    }
    Ok(BootstrapErrors {
        values,
        nsims,
        k_max,
    })
}

/// Two-sided paired Wilcoxon signed-rank test.
///
/// Zero differences are dropped, tied absolute differences mid-ranked.
/// The null distribution is computed exactly (by sign enumeration, done
/// with a rank-sum count table) for effective n <= 25, and by normal
/// approximation with tie correction and continuity correction above.
/// All differences zero gives p = 1.
pub fn wilcoxon_paired(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}-vector", x.len()),
            got: format!("{}-vector", y.len()),
        });
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(1.0);
    }

    // midranks of |d|, doubled so ties give integers
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().partial_cmp(&diffs[b].abs()).unwrap());
    let mut doubled_rank = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut pos = 0;
    while pos < n {
        let mut end = pos;
        while end + 1 < n && diffs[order[end + 1]].abs() == diffs[order[pos]].abs() {
            end += 1;
        }
        // ranks pos+1 ..= end+1 averaged, times two
        let doubled_mid = (pos as u64 + 1) + (end as u64 + 1);
        for &i in &order[pos..=end] {
            doubled_rank[i] = doubled_mid;
        }
        tie_sizes.push((end - pos + 1) as f64);
        pos = end + 1;
    }

    let w_plus: u64 = (0..n)
        .filter(|&i| diffs[i] > 0.0)
        .map(|i| doubled_rank[i])
        .sum();

    if n <= 25 {
        Ok(exact_two_sided_p(&doubled_rank, w_plus))
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = tie_sizes.iter().map(|t| t * t * t - t).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        let w = w_plus as f64 / 2.0;
        let delta = (w - mean).abs() - 0.5; // continuity correction
        let z = delta.max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        Ok((2.0 * (1.0 - normal.cdf(z))).min(1.0))
    }
}

/// Exact two-sided p-value over all 2^n sign assignments, tabulated by
/// rank-sum counts.
fn exact_two_sided_p(doubled_ranks: &[u64], w_plus: u64) -> f64 {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let denom = 2.0f64.powi(doubled_ranks.len() as i32);
    let low: f64 = counts[..=w_plus as usize].iter().sum::<f64>() / denom;
    let high: f64 = counts[w_plus as usize..].iter().sum::<f64>() / denom;
    (2.0 * low.min(high)).min(1.0)
}

/// The stopping rule over one model's `nsims x (k_max - 1)` error matrix:
/// the first `K` whose errors are not significantly different from those
/// at `K + 1`; if every test rejects, `k_max`.
pub fn choose_k(errors: &Array2<f64>, p_val: f64) -> Result<usize> {
    let nsims = errors.nrows();
    if nsims < 5 {
        return Err(Error::InvalidConfig(format!(
            "choose_k needs at least 5 replicates, got {nsims}"
        )));
    }
    let k_max = errors.ncols() + 1;
    for k in 2..k_max {
        let a = errors.column(k - 2).to_vec();
        let b = errors.column(k - 1).to_vec();
        if wilcoxon_paired(&a, &b)? >= p_val {
            return Ok(k);
        }
    }
    Ok(k_max)
}

/// Weighted combination of the per-method choices,
/// `round((K_nmf + K_cnmf/2 + K_aenmf/2) / 2)` with half-up rounding.
pub fn combine_k(k_nmf: usize, k_cnmf: usize, k_aenmf: usize) -> usize {
    let val = (k_nmf as f64 + 0.5 * k_cnmf as f64 + 0.5 * k_aenmf as f64) / 2.0;
    (val + 0.5).floor() as usize
}

/// Welch's two-sided two-sample t-test for equal means.
pub fn t_test_two_sample(x: &[f64], y: &[f64]) -> Result<f64> {
    let (nx, ny) = (x.len(), y.len());
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidConfig(
            "t-test needs at least 2 observations per sample".into(),
        ));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let var = |s: &[f64], m: f64| {
        s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (s.len() - 1) as f64
    };
    let (mx, my) = (mean(x), mean(y));
    let (vx, vy) = (var(x, mx), var(y, my));
    let se2 = vx / nx as f64 + vy / ny as f64;
    if se2 == 0.0 {
        if mx == my {
            return Ok(1.0);
        }
        return Err(Error::InvalidConfig(
            "zero variance in both samples with unequal means".into(),
        ));
    }
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2
        / ((vx / nx as f64).powi(2) / (nx as f64 - 1.0)
            + (vy / ny as f64).powi(2) / (ny as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok((2.0 * (1.0 - dist.cdf(t.abs()))).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{init_uniform, NonNegMatrix};

    #[test]
    fn wilcoxon_identical_samples_give_p_one() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(wilcoxon_paired(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn wilcoxon_n5_all_positive_distinct() {
        let x = [2.0, 3.0, 4.0, 5.0, 6.5];
        let y = [1.0, 1.5, 2.0, 2.5, 3.0];
        let p = wilcoxon_paired(&x, &y).unwrap();
        assert!((p - 0.0625).abs() < 1e-12, "p = {p}");
    }

    /// Brute-force two-sided p over all 2^n sign assignments with midranks.
    fn wilcoxon_enumeration_oracle(x: &[f64], y: &[f64]) -> f64 {
        let diffs: Vec<f64> = x
            .iter()
            .zip(y)
            .map(|(a, b)| a - b)
            .filter(|d| *d != 0.0)
            .collect();
        let n = diffs.len();
        if n == 0 {
            return 1.0;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diffs[a].abs().partial_cmp(&diffs[b].abs()).unwrap());
        let mut rank = vec![0.0f64; n];
        let mut pos = 0;
        while pos < n {
            let mut end = pos;
            while end + 1 < n && diffs[order[end + 1]].abs() == diffs[order[pos]].abs() {
                end += 1;
            }
            let mid = ((pos + 1) + (end + 1)) as f64 / 2.0;
            for &i in &order[pos..=end] {
                rank[i] = mid;
            }
            pos = end + 1;
        }
        let observed: f64 = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| rank[i]).sum();
        let mut low = 0u64;
        let mut high = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n)
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| rank[i])
                .sum();
            if w <= observed + 1e-12 {
                low += 1;
            }
            if w >= observed - 1e-12 {
                high += 1;
            }
        }
        let denom = (1u64 << n) as f64;
        (2.0 * (low.min(high) as f64 / denom)).min(1.0)
    }

    #[test]
    fn wilcoxon_matches_enumeration_on_random_n8() {
        let mut rng = rng_from_seed(123);
        for trial in 0..50 {
            let x: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            // inject occasional ties in |d|
            let y: Vec<f64> = x
                .iter()
                .map(|v| {
                    if rng.random::<f64>() < 0.3 {
                        v + 0.25
                    } else {
                        v - rng.random::<f64>()
                    }
                })
                .collect();
            let p = wilcoxon_paired(&x, &y).unwrap();
            let oracle = wilcoxon_enumeration_oracle(&x, &y);
            assert!(
                (p - oracle).abs() < 1e-12,
                "trial {trial}: {p} vs {oracle}"
            );
        }
    }

    #[test]
    fn wilcoxon_is_symmetric() {
        let mut rng = rng_from_seed(321);
        let x: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
        assert_eq!(
            wilcoxon_paired(&x, &y).unwrap(),
            wilcoxon_paired(&y, &x).unwrap()
        );
    }

    #[test]
    fn wilcoxon_large_n_uses_normal_approx() {
        let mut rng = rng_from_seed(55);
        let x: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..40).map(|_| rng.random::<f64>() + 0.4).collect();
        let p = wilcoxon_paired(&x, &y).unwrap();
        assert!(p < 0.01, "strong shift should be detected, p = {p}");
        let same = wilcoxon_paired(&x, &x).unwrap();
        assert_eq!(same, 1.0);
    }

    #[test]
    fn choose_k_identical_errors_returns_two() {
        let errors = Array2::from_elem((8, 5), 1.0);
        assert_eq!(choose_k(&errors, 0.05).unwrap(), 2);
    }

    #[test]
    fn choose_k_improvement_up_to_five() {
        // errors drop sharply until K = 5, then level out as i.i.d. noise
        let mut rng = rng_from_seed(77);
        let nsims = 12;
        let k_max = 8;
        let mut errors = Array2::zeros((nsims, k_max - 1));
        for i in 0..nsims {
            for k in 2..=k_max {
                let base = if k < 5 { 10.0 / k as f64 } else { 1.0 };
                let noise = if k < 5 {
                    rng.random::<f64>() * 0.01
                } else {
                    rng.random::<f64>() * 0.5
                };
                errors[(i, k - 2)] = base + noise;
            }
        }
        assert_eq!(choose_k(&errors, 0.05).unwrap(), 5);
    }

    #[test]
    fn choose_k_every_test_significant_returns_k_max() {
        // strictly ordered errors at every K: all tests reject
        let nsims = 10;
        let k_max = 6;
        let mut errors = Array2::zeros((nsims, k_max - 1));
        for i in 0..nsims {
            for k in 2..=k_max {
                errors[(i, k - 2)] = 100.0 / k as f64 + i as f64 * 1e-3;
            }
        }
        assert_eq!(choose_k(&errors, 0.05).unwrap(), k_max);
    }

    #[test]
    fn choose_k_monotone_in_p_val() {
        // a stricter significance level (larger p_val) can only delay the
        // first non-rejection, so the returned K never decreases
        let mut rng = rng_from_seed(99);
        let mut errors = Array2::zeros((10, 6));
        for v in errors.iter_mut() {
            *v = rng.random::<f64>();
        }
        let mut prev = 0;
        for p_val in [0.001, 0.01, 0.05, 0.2, 0.5, 0.99] {
            let k = choose_k(&errors, p_val).unwrap();
            assert!(k >= prev, "raising p_val decreased K");
            prev = k;
        }
    }

    #[test]
    fn combine_k_reference_triples() {
        assert_eq!(combine_k(4, 4, 3), 4);
        assert_eq!(combine_k(6, 4, 4), 5);
        assert_eq!(combine_k(11, 6, 4), 8);
    }

    #[test]
    fn t_test_identical_samples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(t_test_two_sample(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn t_test_is_symmetric() {
        let x = [1.0, 2.0, 3.0, 4.5, 2.2];
        let y = [2.0, 3.1, 4.0, 5.0];
        let a = t_test_two_sample(&x, &y).unwrap();
        let b = t_test_two_sample(&y, &x).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    /// Student-t CDF through the regularized incomplete beta function,
    /// evaluated by Lentz's continued fraction. Independent of statrs.
    fn t_cdf_oracle(t: f64, df: f64) -> f64 {
        fn betacf(a: f64, b: f64, x: f64) -> f64 {
            let mut c = 1.0;
            let mut d = 1.0 - (a + b) * x / (a + 1.0);
            if d.abs() < 1e-300 {
                d = 1e-300;
            }
            d = 1.0 / d;
            let mut h = d;
            for m in 1..200 {
                let m = m as f64;
                let aa = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
                d = 1.0 + aa * d;
                if d.abs() < 1e-300 {
                    d = 1e-300;
                }
                c = 1.0 + aa / c;
                if c.abs() < 1e-300 {
                    c = 1e-300;
                }
                d = 1.0 / d;
                h *= d * c;
                let aa =
                    -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
                d = 1.0 + aa * d;
                if d.abs() < 1e-300 {
                    d = 1e-300;
                }
                c = 1.0 + aa / c;
                if c.abs() < 1e-300 {
                    c = 1e-300;
                }
                d = 1.0 / d;
                let del = d * c;
                h *= del;
                if (del - 1.0).abs() < 1e-14 {
                    break;
                }
            }
            h
        }
        fn ln_gamma(x: f64) -> f64 {
            // Lanczos
            let g = [
                76.18009172947146,
                -86.50532032941677,
                24.01409824083091,
                -1.231739572450155,
                0.1208650973866179e-2,
                -0.5395239384953e-5,
            ];
            let mut y = x;
            let tmp = x + 5.5 - (x + 0.5) * (x + 5.5).ln();
            let mut ser = 1.000000000190015;
            for gi in g {
                y += 1.0;
                ser += gi / y;
            }
            -tmp + (2.5066282746310005 * ser / x).ln()
        }
        fn ibeta(a: f64, b: f64, x: f64) -> f64 {
            if x <= 0.0 {
                return 0.0;
            }
            if x >= 1.0 {
                return 1.0;
            }
            let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
                + a * x.ln()
                + b * (1.0 - x).ln();
            let front = ln_front.exp();
            if x < (a + 1.0) / (a + b + 2.0) {
                front * betacf(a, b, x) / a
            } else {
                1.0 - front * betacf(b, a, 1.0 - x) / b
            }
        }
        let x = df / (df + t * t);
        let tail = 0.5 * ibeta(df / 2.0, 0.5, x);
        if t > 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }

    #[test]
    fn t_test_matches_continued_fraction_oracle() {
        let x = [2.1, 2.5, 2.3, 2.9, 2.0, 2.4, 2.6, 2.2, 2.8, 2.35];
        let y = [2.6, 2.9, 3.1, 2.7, 3.3, 2.8, 3.0, 2.95, 3.2, 2.75];
        let p = t_test_two_sample(&x, &y).unwrap();

        // recompute Welch statistic and p through the oracle CDF
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let var = |s: &[f64], m: f64| {
            s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (s.len() - 1) as f64
        };
        let (mx, my) = (mean(&x), mean(&y));
        let (vx, vy) = (var(&x, mx), var(&y, my));
        let se2 = vx / 10.0 + vy / 10.0;
        let t = (mx - my) / se2.sqrt();
        let df = se2 * se2 / ((vx / 10.0).powi(2) / 9.0 + (vy / 10.0).powi(2) / 9.0);
        let p_oracle = 2.0 * (1.0 - t_cdf_oracle(t.abs(), df));
        assert!((p - p_oracle).abs() < 1e-6, "{p} vs {p_oracle}");
    }

    fn low_rank_catalog(rank: usize, n: usize, seed: u64) -> MutationCatalog {
        let h = init_uniform(12, rank, seed);
        let w = init_uniform(rank, n, seed + 1);
        let v = NonNegMatrix::new((h.array().dot(w.array())) * 50.0).unwrap();
        MutationCatalog::with_default_labels(v)
    }

    #[test]
    fn bootstrap_shape_and_determinism() {
        let cat = low_rank_catalog(2, 12, 7);
        let template = FitConfig::new(2, 0).with_max_iters(200).with_rel_tol(1e-6);
        let a = bootstrap_test_errors(&cat, 3, 4, &template, 99).unwrap();
        assert_eq!(a.values.dim(), (4, 2, 3));
        assert!(a.values.iter().all(|&x| x >= 0.0));
        let b = bootstrap_test_errors(&cat, 3, 4, &template, 99).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn bootstrap_rejects_tiny_cohorts() {
        let cat = low_rank_catalog(2, 8, 3);
        let template = FitConfig::new(2, 0);
        let err = bootstrap_test_errors(&cat, 3, 2, &template, 1).unwrap_err();
        assert!(err.to_string().contains("N >= 10"));
    }

    #[test]
    fn bootstrap_low_rank_structure_shows_in_errors() {
        // exact rank 3: NMF test error at K >= 3 collapses relative to K = 2
        let h = crate::sim::random_signatures(12, 3, 17);
        let mut w_arr = &(init_uniform(3, 20, 18).into_array()) * 100.0;
        // each signature appears alone in three samples so the generating
        // cone stays identifiable on every bootstrap resample
        for j in 0..9 {
            for i in 0..3 {
                w_arr[[i, j]] = if i == j % 3 { 100.0 } else { 0.0 };
            }
        }
        let w = NonNegMatrix::new(w_arr).unwrap();
        let v = NonNegMatrix::new(h.array().dot(w.array())).unwrap();
        let cat = crate::matrix::MutationCatalog::with_default_labels(v);
        let template = FitConfig::new(2, 0)
            .with_max_iters(50_000)
            .with_rel_tol(1e-10);
        let errors = bootstrap_test_errors(&cat, 4, 5, &template, 5).unwrap();
        let nmf = errors.for_model(Method::Nmf);
        let mean_k2: f64 = nmf.column(0).sum() / 5.0;
        let mean_k3: f64 = nmf.column(1).sum() / 5.0;
        assert!(
            mean_k3 < 0.01 * mean_k2,
            "K=3 mean {mean_k3} not < 1% of K=2 mean {mean_k2}"
        );
    }
}
