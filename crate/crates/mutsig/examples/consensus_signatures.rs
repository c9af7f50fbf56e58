//! Build consensus signatures from several independent restarts with
//! k-medoids (PAM) clustering under cosine distance.
//!
//! Each restart extracts K signatures from a different random start; the
//! pooled signatures are clustered into K groups and the medoid of each
//! group is reported as the consensus signature. Tight clusters indicate a
//! stable factorization.
//!
//! Run with: `cargo run --release --example consensus_signatures`

use mutsig::io::normalized_factors;
use mutsig::metrics::{cosine_similarity, pam_consensus};
use mutsig::nmf::nmf_fit;
use mutsig::sim::{paper_example_spec, simulate_poisson};
use mutsig::FitConfig;

fn main() -> mutsig::Result<()> {
    let catalog = simulate_poisson(&paper_example_spec(8));
    let v = &catalog.matrix;
    let k = 2;

    // pool signatures from five restarts
    let mut pool: Vec<Vec<f64>> = Vec::new();
    for seed in 0..5 {
        let model = nmf_fit(v, &FitConfig::new(k, seed).with_rel_tol(1e-10))?;
        let (h, _) = normalized_factors(&model);
        for j in 0..k {
            pool.push(h.column(j));
        }
    }
    println!("pooled {} signatures from 5 restarts", pool.len());

    let (medoids, assignments) = pam_consensus(&pool, k, 0)?;
    for (c, &medoid) in medoids.iter().enumerate() {
        let members: Vec<usize> = assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == c)
            .map(|(i, _)| i)
            .collect();
        let worst = members
            .iter()
            .map(|&i| cosine_similarity(&pool[i], &pool[medoid]).unwrap())
            .fold(f64::INFINITY, f64::min);
        println!(
            "cluster {c}: medoid signature #{medoid}, {} members, worst within-cluster cosine {:.5}",
            members.len(),
            worst
        );
    }
    Ok(())
}
