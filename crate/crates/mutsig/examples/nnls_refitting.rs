//! Refit exposures for held-out samples against a fixed signature matrix
//! with non-negative least squares, and inspect the KKT optimality
//! residuals.
//!
//! This is the evaluation path used by bootstrap model selection: train
//! signatures on one set of samples, refit only the exposures on the test
//! set, and report the normalized Frobenius reconstruction error.
//!
//! Run with: `cargo run --example nnls_refitting`

use mutsig::matrix::init_uniform;
use mutsig::nmf::nmf_fit;
use mutsig::refit::{kkt_residual, nnls, refit_weights, test_error};
use mutsig::sim::random_signatures;
use mutsig::{FitConfig, MutationCatalog, NonNegMatrix};

fn main() -> mutsig::Result<()> {
    // rank-3 catalog over 16 features and 24 samples
    let h_true = random_signatures(16, 3, 21);
    let w_true = NonNegMatrix::new(&(init_uniform(3, 24, 22).into_array()) * 150.0)?;
    let v = NonNegMatrix::new(h_true.array().dot(w_true.array()))?;
    let catalog = MutationCatalog::with_default_labels(v);

    // train on the first 18 samples, hold out the last 6
    let train = catalog.select_samples(&(0..18).collect::<Vec<_>>())?;
    let test = catalog.select_samples(&(18..24).collect::<Vec<_>>())?;

    let config = FitConfig::new(3, 9)
        .with_max_iters(50_000)
        .with_rel_tol(1e-10);
    let model = nmf_fit(&train.matrix, &config)?;
    println!(
        "trained NMF on {} samples: loss {:.3e}",
        train.n_samples(),
        model.final_loss()
    );

    // refit each held-out column and check first-order optimality
    for j in 0..test.n_samples() {
        let col = test.matrix.column(j);
        let weights = nnls(&model.h, &col)?;
        let kkt = kkt_residual(&model.h, &col, &weights);
        let active = weights.iter().filter(|&&x| x > 0.0).count();
        println!(
            "  sample {}: {} active signatures, KKT residual {:.2e}",
            test.sample_ids[j], active, kkt
        );
    }

    let refit = refit_weights(&model.h, &test.matrix)?;
    println!(
        "refit exposure matrix: {} x {}",
        refit.rows(),
        refit.cols()
    );
    println!(
        "held-out test error: {:.3e}",
        test_error(&model.h, &test.matrix)?
    );
    Ok(())
}
