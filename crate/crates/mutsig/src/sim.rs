//! Synthetic catalog generation: Poisson draws around signature-mixture
//! means, including the two-signature six-feature example used for
//! equivalence experiments.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{MutationCatalog, NonNegMatrix};
use crate::rng::rng_from_seed;

/// A simulation recipe: signature columns summing to one, expected
/// exposures, and the seed that drives the draws.
#[derive(Debug, Clone)]
pub struct SimSpec {
    /// M x K signatures; every column sums to 1.
    pub h: NonNegMatrix,
    /// K x N expected exposures (counts).
    pub w: NonNegMatrix,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(h: NonNegMatrix, w: NonNegMatrix, seed: u64) -> Result<Self> {
        if h.cols() != w.rows() {
            return Err(Error::DimensionMismatch {
                expected: format!("W with {} rows", h.cols()),
                got: format!("W with {} rows", w.rows()),
            });
        }
        for j in 0..h.cols() {
            let s: f64 = (0..h.rows()).map(|i| h.get(i, j)).sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "signature column {j} sums to {s}, expected 1"
                )));
            }
        }
        Ok(Self { h, w, seed })
    }

    /// The expected catalog `H W`.
    pub fn mean_matrix(&self) -> Array2<f64> {
        self.h.array().dot(self.w.array())
    }
}

/// Poisson draw by chunked inversion: means above 30 are split into
/// independent Poisson(30) pieces, each drawn by Knuth inversion, and a
/// final piece for the remainder. Exact, and portable because only the
/// core generator's uniform stream is consumed.
fn poisson_draw(rng: &mut ChaCha8Rng, mut mean: f64) -> u64 {
    debug_assert!(mean >= 0.0);
    let mut total = 0u64;
    const CHUNK: f64 = 30.0;
    while mean > CHUNK {
        total += poisson_inversion(rng, CHUNK);
        mean -= CHUNK;
    }
    total + poisson_inversion(rng, mean)
}

fn poisson_inversion(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean == 0.0 {
        return 0;
    }
    let limit = (-mean).exp();
    let mut product = rng.random::<f64>();
    let mut count = 0u64;
    while product > limit {
        product *= rng.random::<f64>();
        count += 1;
    }
    count
}

/// Draw a catalog with entries `Poisson((H W)_{ij})`; deterministic per
/// `spec.seed`.
pub fn simulate_poisson(spec: &SimSpec) -> MutationCatalog {
    let means = spec.mean_matrix();
    let mut rng = rng_from_seed(spec.seed);
    let (m, n) = means.dim();
    let mut data = Array2::zeros((m, n));
    // row-major traversal fixes the draw order
    for i in 0..m {
        for j in 0..n {
            data[(i, j)] = poisson_draw(&mut rng, means[(i, j)]) as f64;
        }
    }
    MutationCatalog::with_default_labels(
        NonNegMatrix::new(data).expect("Poisson counts are non-negative"),
    )
}

/// The six-feature, two-signature, thirty-sample example:
/// `h1 = (2,2,1,1,0,0)/6`, `h2 = (0,0,0,1,1,1)/3`, exposures
/// `(180, 20)`, `(100, 100)`, `(20, 180)` over three sample blocks.
pub fn paper_example_spec(seed: u64) -> SimSpec {
    let h = NonNegMatrix::from_rows(vec![
        vec![2.0 / 6.0, 0.0],
        vec![2.0 / 6.0, 0.0],
        vec![1.0 / 6.0, 0.0],
        vec![1.0 / 6.0, 1.0 / 3.0],
        vec![0.0, 1.0 / 3.0],
        vec![0.0, 1.0 / 3.0],
    ])
    .expect("literal is non-negative");
    let mut w = Array2::zeros((2, 30));
    for j in 0..30 {
        let (a, b) = if j < 10 {
            (180.0, 20.0)
        } else if j < 20 {
            (100.0, 100.0)
        } else {
            (20.0, 180.0)
        };
        w[(0, j)] = a;
        w[(1, j)] = b;
    }
    SimSpec::new(
        h,
        NonNegMatrix::new(w).expect("exposures are non-negative"),
        seed,
    )
    .expect("columns sum to one by construction")
}

/// A synthetic signature catalog over `m` features: `count` random
/// probability columns, each L1-normalized. Used to build realistic
/// 96-channel catalogs and COSMIC-format fixtures.
pub fn random_signatures(m: usize, count: usize, seed: u64) -> NonNegMatrix {
    let mut rng = rng_from_seed(seed);
    let mut data = Array2::zeros((m, count));
    for j in 0..count {
        // sparse, spiky profiles: squares of uniforms emphasize few channels
        let mut col: Vec<f64> = (0..m)
            .map(|_| {
                let u = rng.random::<f64>();
                u * u * u
            })
            .collect();
        let total: f64 = col.iter().sum();
        for v in &mut col {
            *v /= total;
        }
        for (i, v) in col.into_iter().enumerate() {
            data[(i, j)] = v;
        }
    }
    NonNegMatrix::new(data).expect("normalized squares are non-negative")
}

/// The 96 standard single-base-substitution trinucleotide contexts, in
/// lexicographic order of (substitution, 5' flank, 3' flank).
pub fn sbs96_contexts() -> Vec<String> {
    let bases = ['A', 'C', 'G', 'T'];
    let subs = [
        ('C', 'A'),
        ('C', 'G'),
        ('C', 'T'),
        ('T', 'A'),
        ('T', 'C'),
        ('T', 'G'),
    ];
    let mut out = Vec::with_capacity(96);
    for (from, to) in subs {
        for five in bases {
            for three in bases {
                out.push(format!("{five}[{from}>{to}]{three}"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::init_uniform;

    #[test]
    fn zero_exposures_give_zero_catalog() {
        let h = paper_example_spec(1).h;
        let w = NonNegMatrix::new(Array2::zeros((2, 5))).unwrap();
        let spec = SimSpec::new(h, w, 3).unwrap();
        let cat = simulate_poisson(&spec);
        assert!(cat.matrix.is_all_zero());
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = paper_example_spec(42);
        assert_eq!(simulate_poisson(&spec), simulate_poisson(&spec));
    }

    #[test]
    fn poisson_mean_concentrates() {
        // 10000 draws at mean 100: sample mean within 3 * sqrt(100/10000) * 10
        let mut rng = rng_from_seed(17);
        let total: u64 = (0..10_000).map(|_| poisson_draw(&mut rng, 100.0)).sum();
        let mean = total as f64 / 10_000.0;
        assert!((mean - 100.0).abs() < 3.0 * (100.0f64 / 10_000.0).sqrt() * 10.0);
    }

    #[test]
    fn paper_example_shapes_and_means() {
        let spec = paper_example_spec(0);
        assert_eq!(spec.h.rows(), 6);
        assert_eq!(spec.h.cols(), 2);
        assert_eq!(spec.w.cols(), 30);
        let means = spec.mean_matrix();
        // samples 1..10: 180*h1 + 20*h2
        let expected = [60.0, 60.0, 30.0, 110.0 / 3.0, 20.0 / 3.0, 20.0 / 3.0];
        for i in 0..6 {
            assert!((means[(i, 0)] - expected[i]).abs() < 1e-12);
        }
        let cat = simulate_poisson(&spec);
        assert_eq!(cat.matrix.rows(), 6);
        assert_eq!(cat.matrix.cols(), 30);
        assert!(cat.matrix.array().iter().all(|&v| v >= 0.0 && v.fract() == 0.0));
    }

    #[test]
    fn catalog_column_sums_track_expected_totals() {
        let spec = paper_example_spec(5);
        let cat = simulate_poisson(&spec);
        let means = spec.mean_matrix();
        for j in 0..30 {
            let expected: f64 = (0..6).map(|i| means[(i, j)]).sum();
            let got: f64 = (0..6).map(|i| cat.matrix.get(i, j)).sum();
            // Poisson total has variance equal to its mean
            assert!(
                (got - expected).abs() <= 4.0 * expected.sqrt(),
                "column {j}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn permuting_signatures_and_exposures_preserves_the_draw() {
        // same mean matrix, same seed: identical catalogs
        let h = random_signatures(8, 3, 2);
        let w = init_uniform(3, 12, 3);
        let w = NonNegMatrix::new(w.array() * 40.0).unwrap();
        let spec = SimSpec::new(h.clone(), w.clone(), 9).unwrap();

        let perm = [2usize, 0, 1];
        let mut hp = Array2::zeros((8, 3));
        let mut wp = Array2::zeros((3, 12));
        for (new_j, &old_j) in perm.iter().enumerate() {
            hp.column_mut(new_j).assign(&h.array().column(old_j));
            wp.row_mut(new_j).assign(&w.array().row(old_j));
        }
        let spec_p = SimSpec::new(
            NonNegMatrix::new(hp).unwrap(),
            NonNegMatrix::new(wp).unwrap(),
            9,
        )
        .unwrap();
        assert_eq!(simulate_poisson(&spec), simulate_poisson(&spec_p));
    }

    #[test]
    fn sbs96_contexts_are_96_unique() {
        let ctx = sbs96_contexts();
        assert_eq!(ctx.len(), 96);
        let set: std::collections::HashSet<_> = ctx.iter().collect();
        assert_eq!(set.len(), 96);
        assert!(ctx.contains(&"A[C>A]A".to_string()));
    }

    #[test]
    fn random_signatures_columns_sum_to_one() {
        let sigs = random_signatures(96, 5, 7);
        for j in 0..5 {
            let s: f64 = (0..96).map(|i| sigs.get(i, j)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
