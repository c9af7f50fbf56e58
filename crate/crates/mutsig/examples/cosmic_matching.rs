//! Annotate extracted signatures by matching them against a reference
//! library in COSMIC layout (96 SBS contexts, one probability column per
//! signature).
//!
//! A 96-channel catalog is built from three reference signatures with
//! random exposures, factored with NMF at K = 3, and the extracted
//! signatures are paired with their closest reference entries by Hungarian
//! matching on cosine similarity.
//!
//! Run with: `cargo run --release --example cosmic_matching`

use mutsig::io::{normalized_factors, synthetic_cosmic};
use mutsig::matrix::init_uniform;
use mutsig::metrics::{acs, match_signatures};
use mutsig::nmf::nmf_fit;
use mutsig::{FitConfig, NonNegMatrix};

fn main() -> mutsig::Result<()> {
    // reference library with ten signatures; the catalog uses the first three
    let cosmic = synthetic_cosmic(10, 77);
    let h_true = NonNegMatrix::new(
        cosmic
            .signatures
            .array()
            .slice(ndarray::s![.., 0..3])
            .to_owned(),
    )?;
    let w = NonNegMatrix::new(&(init_uniform(3, 40, 78).into_array()) * 300.0)?;
    let v = NonNegMatrix::new(h_true.array().dot(w.array()))?;

    let config = FitConfig::new(3, 12)
        .with_max_iters(100_000)
        .with_rel_tol(1e-10);
    let model = nmf_fit(&v, &config)?;
    println!(
        "fit 96-channel catalog at K=3: loss {:.3e} ({} iterations)",
        model.final_loss(),
        model.iters_run
    );

    let (h, _) = normalized_factors(&model);
    // extracted set is smaller, so it goes first
    let matched = match_signatures(&h, &cosmic.signatures)?;
    println!("closest reference signature per extracted signature:");
    for (pair, cos) in matched.pairs.iter().zip(&matched.per_pair_cosine) {
        println!(
            "  extracted #{} -> {}: cosine {:.5}",
            pair.0, cosmic.signature_names[pair.1], cos
        );
    }
    println!("average cosine similarity: {:.5}", acs(&matched));
    Ok(())
}
