//! Command-line surface: ingestion, orchestration, and persistence.
//!
//! Every command takes its randomness from `--seed` (falling back to the
//! `MUTSIG_SEED` environment variable, then 0) and leaves a
//! `manifest.json` in its output directory with the resolved
//! configuration, input digests, and output list, so re-running with the
//! same inputs reproduces every output byte for byte.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::aenmf::aenmf_fit;
use crate::cnmf::cnmf_fit;
use crate::error::{Error, Result};
use crate::io::{
    load_catalog, load_cosmic, load_matrix_tsv, loss_trace_csv, normalized_factors,
    write_catalog, write_matrix_tsv, Orientation, RunManifest,
};
use crate::matrix::{FitConfig, Method, MutationCatalog, NonNegMatrix};
use crate::metrics::{exposure_distance, match_signatures, pam_consensus};
use crate::nmf::nmf_fit;
use crate::select::{bootstrap_test_errors, choose_k, combine_k};
use crate::sim::{paper_example_spec, simulate_poisson, SimSpec};

#[derive(Debug, Parser)]
#[command(
    name = "mutsig",
    version,
    about = "Mutational signature extraction: NMF, convex NMF, and a non-negative autoencoder"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Master seed; all randomness flows from it.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SeedArg {
    fn resolve(&self) -> u64 {
        self.seed.or_else(default_seed).unwrap_or(0)
    }
}

fn default_seed() -> Option<u64> {
    std::env::var("MUTSIG_SEED").ok()?.parse().ok()
}

#[derive(Debug, Args)]
pub struct FitTuning {
    /// Iteration cap; runs hitting it are reported as not converged.
    #[arg(long, default_value_t = 500_000)]
    pub max_iters: usize,
    /// Relative loss-change convergence tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    /// Adam step size (aenmf only).
    #[arg(long, default_value_t = 1e-4)]
    pub learning_rate: f64,
    /// Weight non-negativity scheme (aenmf only): pg, fp_pg, abs, fp_abs.
    #[arg(long, default_value = "fp_abs")]
    pub scheme: crate::matrix::NonNegScheme,
}

impl FitTuning {
    fn config(&self, k: usize, seed: u64) -> FitConfig {
        FitConfig::new(k, seed)
            .with_max_iters(self.max_iters)
            .with_rel_tol(self.rel_tol)
            .with_learning_rate(self.learning_rate)
            .with_scheme(self.scheme)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic Poisson catalog.
    Simulate {
        /// JSON spec naming signature and exposure TSV files.
        #[arg(long, conflicts_with = "paper_example")]
        spec: Option<PathBuf>,
        /// Use the built-in 6-feature, 2-signature, 30-sample example.
        #[arg(long)]
        paper_example: bool,
        #[command(flatten)]
        seed: SeedArg,
        /// Output catalog TSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one factorization and persist its factors.
    Fit {
        #[arg(long)]
        method: Method,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long = "in")]
        input: PathBuf,
        /// Declare the input as samples-by-features (transposed on ingest).
        #[arg(long)]
        transposed: bool,
        #[arg(long)]
        out_dir: PathBuf,
        /// Persist raw factors instead of L1-normalized signatures.
        #[arg(long)]
        raw: bool,
        #[command(flatten)]
        tuning: FitTuning,
    },
    /// Bootstrap model-order selection across all three methods.
    SelectK {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        transposed: bool,
        #[arg(long)]
        k_max: usize,
        #[arg(long)]
        nsims: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Significance level for the Wilcoxon stopping rule.
        #[arg(long, default_value_t = 0.05)]
        p_val: f64,
        /// Bound on concurrent bootstrap replicates.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        tuning: FitTuning,
    },
    /// Pairwise signature and exposure comparison of fit run directories.
    Compare {
        /// Two or more `fit` output directories.
        #[arg(long, num_args = 2..)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// PAM consensus signatures across fit run directories.
    Consensus {
        #[arg(long, num_args = 1..)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Match extracted signatures against a COSMIC-format library.
    CosmicMatch {
        #[arg(long)]
        signatures: PathBuf,
        #[arg(long)]
        cosmic: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            spec,
            paper_example,
            seed,
            out,
        } => cmd_simulate(spec.as_deref(), paper_example, seed.resolve(), &out),
        Command::Fit {
            method,
            k,
            seed,
            input,
            transposed,
            out_dir,
            raw,
            tuning,
        } => cmd_fit(
            method,
            k,
            seed.resolve(),
            &input,
            orientation(transposed),
            &out_dir,
            raw,
            &tuning,
        ),
        Command::SelectK {
            input,
            transposed,
            k_max,
            nsims,
            seed,
            p_val,
            threads,
            out_dir,
            tuning,
        } => cmd_select_k(
            &input,
            orientation(transposed),
            k_max,
            nsims,
            seed.resolve(),
            p_val,
            threads,
            &out_dir,
            &tuning,
        ),
        Command::Compare { runs, out_dir } => cmd_compare(&runs, &out_dir),
        Command::Consensus {
            runs,
            k,
            seed,
            out_dir,
        } => cmd_consensus(&runs, k, seed.resolve(), &out_dir),
        Command::CosmicMatch {
            signatures,
            cosmic,
            out_dir,
        } => cmd_cosmic_match(&signatures, &cosmic, &out_dir),
    }
}

fn orientation(transposed: bool) -> Orientation {
    if transposed {
        Orientation::SamplesByFeatures
    } else {
        Orientation::FeaturesBySamples
    }
}

#[derive(serde::Deserialize)]
struct SimSpecFile {
    /// TSV of signature columns; may also be a COSMIC-format file.
    signatures: PathBuf,
    /// TSV of expected exposures (K rows, N sample columns).
    exposures: PathBuf,
}

fn cmd_simulate(
    spec_path: Option<&Path>,
    paper_example: bool,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let mut manifest = RunManifest::new(
        "simulate",
        json!({ "paper_example": paper_example, "spec": spec_path.map(|p| p.display().to_string()) }),
        seed,
    );
    let spec = match (spec_path, paper_example) {
        (None, true) => paper_example_spec(seed),
        (Some(path), false) => {
            manifest.record_input(path)?;
            let text = std::fs::read_to_string(path)?;
            let file: SimSpecFile =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            manifest.record_input(&file.signatures)?;
            manifest.record_input(&file.exposures)?;
            let h = load_signature_matrix(&file.signatures)?;
            let (w, _, _) = load_matrix_tsv(&file.exposures)?;
            SimSpec::new(h, w, seed)?
        }
        _ => {
            return Err(Error::InvalidConfig(
                "pass exactly one of --spec and --paper-example".into(),
            ))
        }
    };
    let catalog = simulate_poisson(&spec);
    write_catalog(out, &catalog)?;
    manifest.record_output(out);
    manifest.write(&sibling_manifest(out))?;
    Ok(())
}

/// Load an M x K signature matrix from either the plain TSV layout or a
/// COSMIC-format file (detected by its "Type" header).
fn load_signature_matrix(path: &Path) -> Result<NonNegMatrix> {
    let first_line = std::fs::read_to_string(path)?
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    if first_line
        .split('\t')
        .next()
        .is_some_and(|c| c.eq_ignore_ascii_case("type"))
    {
        Ok(load_cosmic(path)?.signatures)
    } else {
        Ok(load_matrix_tsv(path)?.0)
    }
}

fn sibling_manifest(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    method: Method,
    k: usize,
    seed: u64,
    input: &Path,
    orientation: Orientation,
    out_dir: &Path,
    raw: bool,
    tuning: &FitTuning,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let catalog = load_catalog(input, orientation)?;
    let config = tuning.config(k, seed);
    let model = match method {
        Method::Nmf => nmf_fit(&catalog.matrix, &config)?,
        Method::Cnmf => cnmf_fit(&catalog.matrix, &config)?,
        Method::Aenmf => aenmf_fit(&catalog.matrix, &config)?,
    };

    let (signatures, exposures) = if raw {
        (model.h.clone(), model.w.clone())
    } else {
        normalized_factors(&model)
    };
    let sig_names: Vec<String> = (1..=k).map(|i| format!("S{i}")).collect();

    let mut manifest = RunManifest::new(
        "fit",
        json!({
            "method": method.to_string(),
            "config": config,
            "raw": raw,
            "input": input.display().to_string(),
        }),
        seed,
    );
    manifest.record_input(input)?;
    manifest.record_fit(&model);

    let sig_path = out_dir.join("signatures.tsv");
    write_matrix_tsv(&sig_path, &signatures, "feature", &catalog.feature_labels, &sig_names)?;
    manifest.record_output(&sig_path);

    let exp_path = out_dir.join("exposures.tsv");
    write_matrix_tsv(&exp_path, &exposures, "signature", &sig_names, &catalog.sample_ids)?;
    manifest.record_output(&exp_path);

    let trace_path = out_dir.join("loss_trace.csv");
    std::fs::write(&trace_path, loss_trace_csv(&model))?;
    manifest.record_output(&trace_path);

    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_select_k(
    input: &Path,
    orientation: Orientation,
    k_max: usize,
    nsims: usize,
    seed: u64,
    p_val: f64,
    threads: Option<usize>,
    out_dir: &Path,
    tuning: &FitTuning,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let catalog = load_catalog(input, orientation)?;
    let template = tuning.config(2, seed);

    let errors = if let Some(t) = threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(|| bootstrap_test_errors(&catalog, k_max, nsims, &template, seed))?
    } else {
        bootstrap_test_errors(&catalog, k_max, nsims, &template, seed)?
    };

    let mut chosen = serde_json::Map::new();
    let mut per_method = Vec::new();
    for method in Method::ALL {
        let k = choose_k(&errors.for_model(method), p_val)?;
        chosen.insert(method.to_string(), json!(k));
        per_method.push(k);
    }
    let combined = combine_k(per_method[0], per_method[1], per_method[2]);
    chosen.insert("combined".into(), json!(combined));

    let mut manifest = RunManifest::new(
        "select-k",
        json!({
            "k_max": k_max,
            "nsims": nsims,
            "p_val": p_val,
            "template": template,
            "input": input.display().to_string(),
        }),
        seed,
    );
    manifest.record_input(input)?;

    let errors_path = out_dir.join("boot_errors.csv");
    std::fs::write(&errors_path, errors.to_csv())?;
    manifest.record_output(&errors_path);

    let chosen_path = out_dir.join("chosen_k.json");
    let json = serde_json::to_string_pretty(&serde_json::Value::Object(chosen))
        .map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&chosen_path, json + "\n")?;
    manifest.record_output(&chosen_path);

    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(())
}

fn load_run(dir: &Path) -> Result<(NonNegMatrix, NonNegMatrix)> {
    let (sig, _, _) = load_matrix_tsv(&dir.join("signatures.tsv"))?;
    let (exp, _, _) = load_matrix_tsv(&dir.join("exposures.tsv"))?;
    Ok((sig, exp))
}

fn cmd_compare(runs: &[PathBuf], out_dir: &Path) -> Result<()> {
    if runs.len() < 2 {
        return Err(Error::InvalidConfig("compare needs at least two runs".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new(
        "compare",
        json!({ "runs": runs.iter().map(|r| r.display().to_string()).collect::<Vec<_>>() }),
        0,
    );
    let loaded: Vec<(NonNegMatrix, NonNegMatrix)> = runs
        .iter()
        .map(|dir| {
            manifest.record_input(&dir.join("signatures.tsv"))?;
            manifest.record_input(&dir.join("exposures.tsv"))?;
            load_run(dir)
        })
        .collect::<Result<_>>()?;

    let mut out = String::from("run_a,run_b,k_a,k_b,acs,exposure_distance\n");
    for a in 0..loaded.len() {
        for b in (a + 1)..loaded.len() {
            // the smaller signature set is matched into the larger
            let (ia, ib) = if loaded[a].0.cols() <= loaded[b].0.cols() {
                (a, b)
            } else {
                (b, a)
            };
            let (sig_a, exp_a) = &loaded[ia];
            let (sig_b, exp_b) = &loaded[ib];
            let m = match_signatures(sig_a, sig_b)?;
            let dist = exposure_distance(exp_a, exp_b, &m)?;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                runs[ia].display(),
                runs[ib].display(),
                sig_a.cols(),
                sig_b.cols(),
                m.acs,
                dist
            ));
        }
    }
    let out_path = out_dir.join("comparison.csv");
    std::fs::write(&out_path, out)?;
    manifest.record_output(&out_path);
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(())
}

fn cmd_consensus(runs: &[PathBuf], k: usize, seed: u64, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new(
        "consensus",
        json!({
            "runs": runs.iter().map(|r| r.display().to_string()).collect::<Vec<_>>(),
            "k": k,
        }),
        seed,
    );
    let mut pooled: Vec<Vec<f64>> = Vec::new();
    let mut labels: Option<Vec<String>> = None;
    for dir in runs {
        let path = dir.join("signatures.tsv");
        manifest.record_input(&path)?;
        let (sig, feat, _) = load_matrix_tsv(&path)?;
        if labels.is_none() {
            labels = Some(feat);
        }
        for j in 0..sig.cols() {
            pooled.push(sig.column(j));
        }
    }
    let (medoids, _) = pam_consensus(&pooled, k, seed)?;
    let m = pooled[0].len();
    let mut data = ndarray::Array2::zeros((m, k));
    for (j, &idx) in medoids.iter().enumerate() {
        for i in 0..m {
            data[(i, j)] = pooled[idx][i];
        }
    }
    let consensus = NonNegMatrix::new(data)?;
    let names: Vec<String> = (1..=k).map(|i| format!("C{i}")).collect();
    let out_path = out_dir.join("consensus_signatures.tsv");
    write_matrix_tsv(
        &out_path,
        &consensus,
        "feature",
        &labels.unwrap_or_default(),
        &names,
    )?;
    manifest.record_output(&out_path);
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(())
}

fn cmd_cosmic_match(signatures: &Path, cosmic: &Path, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new(
        "cosmic-match",
        json!({
            "signatures": signatures.display().to_string(),
            "cosmic": cosmic.display().to_string(),
        }),
        0,
    );
    manifest.record_input(signatures)?;
    manifest.record_input(cosmic)?;

    let (sigs, _, sig_names) = load_matrix_tsv(signatures)?;
    let library = load_cosmic(cosmic)?;
    let m = match_signatures(&sigs, &library.signatures)?;

    let mut out = String::from("signature,cosmic_match,cosine\n");
    for (&(i, j), &cos) in m.pairs.iter().zip(m.per_pair_cosine.iter()) {
        out.push_str(&format!(
            "{},{},{}\n",
            sig_names[i], library.signature_names[j], cos
        ));
    }
    out.push_str(&format!("ACS,,{}\n", m.acs));

    let out_path = out_dir.join("cosmic_matches.csv");
    std::fs::write(&out_path, out)?;
    manifest.record_output(&out_path);
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(())
}

/// Catalog of one fitted model per method, reused by the examples.
pub fn fit_any(
    catalog: &MutationCatalog,
    method: Method,
    config: &FitConfig,
) -> Result<crate::matrix::FactorModel> {
    match method {
        Method::Nmf => nmf_fit(&catalog.matrix, config),
        Method::Cnmf => cnmf_fit(&catalog.matrix, config),
        Method::Aenmf => aenmf_fit(&catalog.matrix, config),
    }
}
