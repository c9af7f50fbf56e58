//! Signature-space comparison: cosine similarity, optimal matching via the
//! Hungarian algorithm, average cosine similarity, exposure distance, and
//! PAM consensus clustering.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;

/// An optimal pairing of two signature sets.
///
/// Every column of the smaller set A is matched exactly once; columns of B
/// are used at most once. `acs` is the arithmetic mean of the matched
/// cosines.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub pairs: Vec<(usize, usize)>,
    pub per_pair_cosine: Vec<f64>,
    pub acs: f64,
}

/// `a . b / (||a|| ||b||)`; in `[0, 1]` for non-negative inputs.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}-vector", a.len()),
            got: format!("{}-vector", b.len()),
        });
    }
    let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 {
        return Err(Error::ZeroVector("first"));
    }
    if norm_b == 0.0 {
        return Err(Error::ZeroVector("second"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok(dot / (norm_a * norm_b))
}

/// Match columns of `h_a` (K) injectively into columns of `h_b` (K~ >= K),
/// maximizing total cosine similarity. Cost matrix entries are `1 - S_c`;
/// the unbalanced case is handled by padding to square with a constant
/// larger than any real cost.
pub fn match_signatures(h_a: &NonNegMatrix, h_b: &NonNegMatrix) -> Result<MatchResult> {
    if h_a.rows() != h_b.rows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} features", h_a.rows()),
            got: format!("{} features", h_b.rows()),
        });
    }
    let k = h_a.cols();
    let k_b = h_b.cols();
    if k > k_b {
        return Err(Error::MatchArgumentOrder { k_a: k, k_b });
    }

    let mut sim = Array2::zeros((k, k_b));
    for i in 0..k {
        let a = h_a.column(i);
        for j in 0..k_b {
            sim[(i, j)] = cosine_similarity(&a, &h_b.column(j))?;
        }
    }

    const PAD: f64 = 1e6;
    let mut cost = Array2::from_elem((k_b, k_b), PAD);
    for i in 0..k {
        for j in 0..k_b {
            cost[(i, j)] = 1.0 - sim[(i, j)];
        }
    }
    let row_of_col = hungarian(&cost);

    let mut pairs = Vec::with_capacity(k);
    for (j, &i) in row_of_col.iter().enumerate() {
        if i < k {
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    let per_pair_cosine: Vec<f64> = pairs.iter().map(|&(i, j)| sim[(i, j)]).collect();
    let acs = per_pair_cosine.iter().sum::<f64>() / per_pair_cosine.len() as f64;
    Ok(MatchResult {
        pairs,
        per_pair_cosine,
        acs,
    })
}

/// Minimum-cost assignment on a square cost matrix; returns, for each
/// column, the row assigned to it. Shortest-augmenting-path formulation;
/// scanning order makes ties resolve to the lowest index.
fn hungarian(cost: &Array2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    debug_assert_eq!(n, cost.ncols());
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row (1-based) matched to column j
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| p[j] - 1).collect()
}

/// Mean of the matched cosines.
pub fn acs(m: &MatchResult) -> f64 {
    m.acs
}

/// Average Frobenius distance between two weight matrices after aligning
/// the rows of `w_b` to `w_a` through the signature match.
pub fn exposure_distance(
    w_a: &NonNegMatrix,
    w_b: &NonNegMatrix,
    m: &MatchResult,
) -> Result<f64> {
    if w_a.cols() != w_b.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} samples", w_a.cols()),
            got: format!("{} samples", w_b.cols()),
        });
    }
    if m.pairs.len() != w_a.rows() {
        return Err(Error::DimensionMismatch {
            expected: format!("match over {} signatures", w_a.rows()),
            got: format!("{} pairs", m.pairs.len()),
        });
    }
    let n = w_a.cols();
    let k = w_a.rows();
    let mut sq = 0.0;
    for &(ia, ib) in &m.pairs {
        if ib >= w_b.rows() {
            return Err(Error::DimensionMismatch {
                expected: format!("row index < {}", w_b.rows()),
                got: format!("{ib}"),
            });
        }
        for c in 0..n {
            let d = w_a.get(ia, c) - w_b.get(ib, c);
            sq += d * d;
        }
    }
    Ok(sq.sqrt() / (k * n) as f64)
}

/// k-medoids (PAM, build + swap) under cosine distance `1 - S_c`.
///
/// Returns the medoid indices (sorted) and, for each point, the index into
/// the medoid list it is assigned to. Fully deterministic; the seed is
/// accepted for interface symmetry with the fitters but the build/swap
/// phases have no random component.
pub fn pam_consensus(
    signatures: &[Vec<f64>],
    k: usize,
    _seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = signatures.len();
    if k == 0 || k > n {
        return Err(Error::TooFewPoints { k, n });
    }
    let mut dist = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = 1.0 - cosine_similarity(&signatures[i], &signatures[j])?;
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }

    // BUILD: greedily add the medoid that most reduces total distance
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    {
        // first medoid: minimizes the sum of distances to all points
        let first = (0..n)
            .min_by(|&a, &b| {
                let sa: f64 = (0..n).map(|j| dist[(a, j)]).sum();
                let sb: f64 = (0..n).map(|j| dist[(b, j)]).sum();
                sa.partial_cmp(&sb).unwrap()
            })
            .unwrap();
        medoids.push(first);
    }
    while medoids.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..n {
            if medoids.contains(&cand) {
                continue;
            }
            let mut cost = 0.0;
            for j in 0..n {
                let cur = medoids
                    .iter()
                    .map(|&m| dist[(m, j)])
                    .fold(f64::INFINITY, f64::min);
                cost += cur.min(dist[(cand, j)]);
            }
            if best.map_or(true, |(_, c)| cost < c) {
                best = Some((cand, cost));
            }
        }
        medoids.push(best.unwrap().0);
    }

    let total_cost = |medoids: &[usize]| -> f64 {
        (0..n)
            .map(|j| {
                medoids
                    .iter()
                    .map(|&m| dist[(m, j)])
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    };

    // SWAP: steepest-descent swaps until no swap improves the cost
    let mut cost = total_cost(&medoids);
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for (mi, &m) in medoids.iter().enumerate() {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[mi] = cand;
                let c = total_cost(&trial);
                if c < cost - 1e-15 && best.map_or(true, |(_, _, bc)| c < bc) {
                    best = Some((mi, cand, c));
                }
            }
            let _ = m;
        }
        match best {
            Some((mi, cand, c)) => {
                medoids[mi] = cand;
                cost = c;
            }
            None => break,
        }
    }

    medoids.sort_unstable();
    let assignments = (0..n)
        .map(|j| {
            (0..k)
                .min_by(|&a, &b| {
                    dist[(medoids[a], j)]
                        .partial_cmp(&dist[(medoids[b], j)])
                        .unwrap()
                })
                .unwrap()
        })
        .collect();
    Ok((medoids, assignments))
}
