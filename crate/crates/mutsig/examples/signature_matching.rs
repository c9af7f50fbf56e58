//! Compare two signature extractions with Hungarian matching: pair the
//! signatures by maximum total cosine similarity, then report the average
//! cosine similarity (ACS) and the exposure distance over matched pairs.
//!
//! The two runs here differ only in random seed, so the underlying
//! signatures should agree up to permutation; the matcher recovers that
//! permutation.
//!
//! Run with: `cargo run --release --example signature_matching`

use mutsig::io::normalized_factors;
use mutsig::metrics::{acs, exposure_distance, match_signatures};
use mutsig::nmf::nmf_fit;
use mutsig::sim::{paper_example_spec, simulate_poisson};
use mutsig::FitConfig;

fn main() -> mutsig::Result<()> {
    let catalog = simulate_poisson(&paper_example_spec(3));
    let v = &catalog.matrix;

    let fit_a = nmf_fit(v, &FitConfig::new(2, 40).with_rel_tol(1e-10))?;
    let fit_b = nmf_fit(v, &FitConfig::new(2, 41).with_rel_tol(1e-10))?;
    let (h_a, w_a) = normalized_factors(&fit_a);
    let (h_b, w_b) = normalized_factors(&fit_b);

    let matched = match_signatures(&h_a, &h_b)?;
    println!("optimal pairing (run A index <-> run B index):");
    for (pair, cos) in matched.pairs.iter().zip(&matched.per_pair_cosine) {
        println!("  A#{} <-> B#{}: cosine {:.5}", pair.0, pair.1, cos);
    }
    println!("average cosine similarity: {:.5}", acs(&matched));
    println!(
        "exposure distance over matched pairs: {:.4}",
        exposure_distance(&w_a, &w_b, &matched)?
    );
    Ok(())
}
