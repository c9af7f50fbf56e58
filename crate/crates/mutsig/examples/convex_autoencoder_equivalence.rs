//! Demonstrate that convex NMF and the shallow non-negative autoencoder
//! land on the same factorization when started from the same point.
//!
//! Both models reconstruct `V` as `V A B` with non-negative `A` (N x K) and
//! `B` (K x N); convex NMF optimizes with multiplicative updates while the
//! autoencoder runs Adam on the same objective with an absolute-value
//! non-negativity map applied in the forward pass (scheme `fp_abs`).
//! Starting from a shared uniform initialization, the signature sets agree
//! to high cosine similarity and the final losses are close.
//!
//! Run with: `cargo run --release --example convex_autoencoder_equivalence`

use mutsig::aenmf::{aenmf_fit_with_init, AeParams};
use mutsig::cnmf::{cnmf_fit_with_init, ConvexFactors};
use mutsig::io::normalized_factors;
use mutsig::matrix::init_uniform;
use mutsig::metrics::{acs, match_signatures};
use mutsig::sim::{paper_example_spec, simulate_poisson};
use mutsig::{FitConfig, NonNegScheme};

fn main() -> mutsig::Result<()> {
    let catalog = simulate_poisson(&paper_example_spec(11));
    let v = &catalog.matrix;
    let (k, n) = (2, v.cols());

    // one shared uniform-[0,1) starting point for both models
    let a0 = init_uniform(n, k, 101);
    let b0 = init_uniform(k, n, 102);

    let config = FitConfig::new(k, 0)
        .with_rel_tol(1e-10)
        .with_scheme(NonNegScheme::FpAbs);

    let (cnmf, _factors) = cnmf_fit_with_init(
        v,
        &config,
        Some(ConvexFactors::new(a0.clone(), b0.clone())?),
    )?;
    let aenmf = aenmf_fit_with_init(
        v,
        &config,
        Some(AeParams::new(a0.into_array(), b0.into_array())?),
    )?;

    println!(
        "convex NMF : loss {:.6e} after {} iterations (converged: {})",
        cnmf.final_loss(),
        cnmf.iters_run,
        cnmf.converged
    );
    println!(
        "AE-NMF     : loss {:.6e} after {} iterations (converged: {})",
        aenmf.final_loss(),
        aenmf.iters_run,
        aenmf.converged
    );
    let rel_diff = (cnmf.final_loss() - aenmf.final_loss()).abs()
        / cnmf.final_loss().max(aenmf.final_loss());
    println!("relative loss difference: {:.3}%", 100.0 * rel_diff);

    let (h_cnmf, _) = normalized_factors(&cnmf);
    let (h_ae, _) = normalized_factors(&aenmf);
    let matched = match_signatures(&h_cnmf, &h_ae)?;
    println!(
        "signature agreement (average cosine similarity): {:.5}",
        acs(&matched)
    );
    Ok(())
}
