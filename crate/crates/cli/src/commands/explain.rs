//! `samlp explain` — per-user Shapley attributions plus a global importance
//! summary (JSON, CSV and a beeswarm SVG).

use std::path::PathBuf;

use clap::Args;

use samlp_core::artifact::ModelArtifact;
use samlp_core::dataset::RecordFormat;
use samlp_core::explain::{
    explain_matrix, sample_background, summarize, svg::beeswarm_svg, ShapMode, DEFAULT_TOP_K,
    EXACT_FEATURE_LIMIT,
};

use crate::failure::{schema_or_input, Failure, OrInput};
use crate::inputs::{read_features_csv, records_matrix, resolve_collection_date};

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Trained `.samlp` artifact.
    #[arg(long)]
    model: PathBuf,
    /// JSONL user records to explain.
    #[arg(long, required_unless_present = "features", conflicts_with = "features")]
    records: Option<PathBuf>,
    /// Explain a feature CSV instead of raw records.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Force the record shape instead of detecting it per line.
    #[arg(long, default_value = "auto")]
    api_version: String,
    /// Collection date for feature extraction; defaults to the artifact's
    /// own when it is unambiguous.
    #[arg(long)]
    collection_date: Option<String>,
    /// Output directory for explanations.json, summary.{json,csv,svg}.
    #[arg(long)]
    out: PathBuf,
    /// Rows in the global importance summary.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// `exact` enumerates every coalition, `sampled` estimates from
    /// permutations, `auto` picks exact when the model is small enough.
    #[arg(long, default_value = "auto")]
    mode: String,
    /// Permutations per instance in sampled mode.
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    /// Background rows drawn from the explained data.
    #[arg(long, default_value_t = 100)]
    background: usize,
    /// Seed for background sampling and permutation draws.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

pub fn run(args: &ExplainArgs) -> Result<(), Failure> {
    let artifact = ModelArtifact::load(&args.model).map_err(schema_or_input)?;

    let matrix = if let Some(path) = &args.features {
        read_features_csv(path)?
    } else {
        let records = args.records.as_ref().expect("clap enforces --records");
        let format = RecordFormat::parse(&args.api_version).or_input()?;
        let collection = resolve_collection_date(args.collection_date.as_deref(), &artifact)?;
        records_matrix(records, format, collection)?
    };
    let projected = artifact.project(&matrix)?;

    let n_features = projected.n_cols();
    let mode = match args.mode.as_str() {
        "exact" if n_features > EXACT_FEATURE_LIMIT => {
            return Err(Failure::Input(format!(
                "exact mode enumerates 2^{n_features} coalitions; the limit is \
                 {EXACT_FEATURE_LIMIT} features — use --mode sampled"
            )));
        }
        "exact" => ShapMode::Exact,
        "sampled" => ShapMode::Sampled,
        "auto" if n_features <= EXACT_FEATURE_LIMIT => ShapMode::Exact,
        "auto" => ShapMode::Sampled,
        other => {
            return Err(Failure::Input(format!(
                "unknown mode {other:?} (expected exact, sampled or auto)"
            )));
        }
    };

    let background = sample_background(&projected, args.background, args.seed);
    let batch = explain_matrix(
        &artifact.classifier,
        &projected,
        &background,
        mode,
        args.samples,
        args.seed,
    )?;

    if mode == ShapMode::Exact {
        // Exact attributions must reconstruct each score from the base
        // value; a drift here means the explainer and model disagree.
        let deviation = batch
            .explanations
            .iter()
            .map(|e| (e.base_value + e.phi.iter().sum::<f64>() - e.score).abs())
            .fold(0.0f64, f64::max);
        println!(
            "local accuracy check: max |base + sum(phi) - score| = {deviation:.3e} over {} rows",
            batch.explanations.len()
        );
        if deviation > 1e-6 {
            return Err(Failure::Internal(format!(
                "exact attributions fail local accuracy by {deviation:.3e}"
            )));
        }
    }

    let summary = summarize(&batch, args.top_k)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", args.out.display())))?;
    let write = |name: &str, contents: String| -> Result<(), Failure> {
        let path = args.out.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    };
    let summary_json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Failure::Internal(format!("summary serialization failed: {e}")))?;
    let mut summary_csv = String::from("rank,feature,mean_abs_phi\n");
    for (rank, entry) in summary.ranking.iter().enumerate() {
        summary_csv.push_str(&format!(
            "{},{},{}\n",
            rank + 1,
            entry.feature,
            entry.mean_abs_phi
        ));
    }
    write("explanations.json", batch.to_json()?)?;
    write("explanations.csv", batch.to_csv())?;
    write("summary.json", summary_json)?;
    write("summary.csv", summary_csv)?;
    write("summary.svg", beeswarm_svg(&summary))?;

    println!(
        "top features by mean |phi| ({} scale, {} rows explained):",
        summary.score_scale, summary.n_explained
    );
    for (rank, entry) in summary.ranking.iter().enumerate() {
        println!("{:>3}. {:<32} {:.6}", rank + 1, entry.feature, entry.mean_abs_phi);
    }
    Ok(())
}
