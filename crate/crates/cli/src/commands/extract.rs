//! `samlp extract` — join records with labels and write the feature CSV.

use std::path::PathBuf;

use clap::Args;

use samlp_core::dataset::{load_dataset_from, parse_labels_csv, RecordFormat};
use samlp_core::features::build_matrix;

use crate::failure::{Failure, OrInput};
use crate::inputs::{parse_date, stem, write_features_csv};

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// JSONL file with one user object per line (v1.1 or v2 shape).
    #[arg(long)]
    records: PathBuf,
    /// CSV with `user_id,label` rows; labels are `human`/`bot` or `0`/`1`.
    #[arg(long)]
    labels: PathBuf,
    /// When the records were collected (RFC 3339 or YYYY-MM-DD). Age-based
    /// features are measured against this instant.
    #[arg(long)]
    collection_date: String,
    /// Force the record shape instead of detecting it per line.
    #[arg(long, default_value = "auto")]
    api_version: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: &ExtractArgs) -> Result<(), Failure> {
    let collection = parse_date(&args.collection_date)?;
    let format = RecordFormat::parse(&args.api_version).or_input()?;

    let labels_file = std::fs::File::open(&args.labels).map_err(|e| {
        Failure::Input(format!("cannot open labels file {}: {e}", args.labels.display()))
    })?;
    let labels = parse_labels_csv(labels_file).or_input()?;
    let records_file = std::fs::File::open(&args.records).map_err(|e| {
        Failure::Input(format!("cannot open records file {}: {e}", args.records.display()))
    })?;
    let (dataset, stats) = load_dataset_from(
        records_file,
        &labels,
        collection,
        &stem(&args.records),
        format,
    )
    .or_input()?;

    let matrix = build_matrix(&dataset).or_input()?;
    write_features_csv(&matrix, &args.out)?;

    let (humans, bots) = matrix.class_counts();
    println!(
        "extracted {} rows x {} columns ({humans} human / {bots} bot) to {}",
        matrix.n_rows(),
        matrix.n_cols() + 2,
        args.out.display()
    );
    if stats.records_unlabeled > 0 || stats.labels_unmatched > 0 {
        println!(
            "note: {} records had no label, {} labels matched no record",
            stats.records_unlabeled, stats.labels_unmatched
        );
    }
    Ok(())
}
