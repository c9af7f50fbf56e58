//! Choose the number of signatures K with bootstrapped out-of-bag test
//! errors and a paired Wilcoxon stopping rule, then combine the per-model
//! choices into a single recommendation.
//!
//! A noiseless rank-3 catalog is factored at K = 2..=5 on bootstrap
//! resamples; the out-of-bag samples are refit with NNLS to give a test
//! error per replicate. Scanning upward, the first K whose errors are not
//! significantly better at K+1 is selected per model.
//!
//! Run with: `cargo run --release --example model_order_selection`

use mutsig::matrix::init_uniform;
use mutsig::select::{bootstrap_test_errors, choose_k, combine_k};
use mutsig::sim::random_signatures;
use mutsig::{FitConfig, Method, MutationCatalog, NonNegMatrix};

fn main() -> mutsig::Result<()> {
    // exact rank-3 catalog: 12 features, 30 samples
    let h = random_signatures(12, 3, 5);
    let w = NonNegMatrix::new(&(init_uniform(3, 30, 6).into_array()) * 200.0)?;
    let v = NonNegMatrix::new(h.array().dot(w.array()))?;
    let catalog = MutationCatalog::with_default_labels(v);

    let template = FitConfig::new(2, 0)
        .with_max_iters(50_000)
        .with_rel_tol(1e-10);
    let errors = bootstrap_test_errors(&catalog, 5, 8, &template, 17)?;

    let mut chosen = Vec::new();
    for method in Method::ALL {
        let per_model = errors.for_model(method);
        let k = choose_k(&per_model, 0.05)?;
        let means: Vec<String> = (0..per_model.ncols())
            .map(|c| {
                let col = per_model.column(c);
                format!("K={}: {:.3e}", c + 2, col.sum() / col.len() as f64)
            })
            .collect();
        println!("{method}: mean test errors [{}] -> K = {k}", means.join(", "));
        chosen.push(k);
    }

    let combined = combine_k(chosen[0], chosen[1], chosen[2]);
    println!(
        "combined recommendation: ({} + 0.5*{} + 0.5*{}) / 2 rounded = {combined}",
        chosen[0], chosen[1], chosen[2]
    );
    Ok(())
}
