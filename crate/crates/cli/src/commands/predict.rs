//! `samlp predict` — offline scoring of user records against a trained
//! artifact. No network access: historical user objects are enough.

use std::path::PathBuf;

use clap::Args;

use samlp_core::artifact::ModelArtifact;
use samlp_core::dataset::RecordFormat;

use crate::failure::{schema_or_input, Failure, OrInput};
use crate::inputs::{read_features_csv, records_matrix, resolve_collection_date};

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trained `.samlp` artifact.
    #[arg(long)]
    model: PathBuf,
    /// JSONL user records to score.
    #[arg(long, required_unless_present = "features", conflicts_with = "features")]
    records: Option<PathBuf>,
    /// Score a feature CSV instead of raw records (its label column is
    /// ignored).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Force the record shape instead of detecting it per line.
    #[arg(long, default_value = "auto")]
    api_version: String,
    /// Collection date for feature extraction; defaults to the artifact's
    /// own when it is unambiguous.
    #[arg(long)]
    collection_date: Option<String>,
    /// Output CSV (`user_id,score,label`).
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: &PredictArgs) -> Result<(), Failure> {
    let artifact = ModelArtifact::load(&args.model).map_err(schema_or_input)?;

    let matrix = if let Some(path) = &args.features {
        read_features_csv(path)?
    } else {
        let records = args.records.as_ref().expect("clap enforces --records");
        let format = RecordFormat::parse(&args.api_version).or_input()?;
        let collection = resolve_collection_date(args.collection_date.as_deref(), &artifact)?;
        records_matrix(records, format, collection)?
    };

    let classified = artifact.classify(&matrix)?;

    let mut writer = csv::Writer::from_path(&args.out)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", args.out.display())))?;
    let io_fail = |e: csv::Error| Failure::Internal(format!("writing {}: {e}", args.out.display()));
    writer
        .write_record(["user_id", "score", "label"])
        .map_err(io_fail)?;
    let mut bots = 0usize;
    for (user_id, (score, label)) in matrix.user_ids.iter().zip(&classified) {
        bots += usize::from(label.as_target() == 1.0);
        writer
            .write_record([user_id.as_str(), &score.to_string(), label.as_str()])
            .map_err(io_fail)?;
    }
    writer
        .flush()
        .map_err(|e| Failure::Internal(format!("writing {}: {e}", args.out.display())))?;

    println!(
        "scored {} users at threshold {:.6}: {bots} bot / {} human",
        classified.len(),
        artifact.threshold,
        classified.len() - bots
    );
    println!("wrote predictions to {}", args.out.display());
    Ok(())
}
