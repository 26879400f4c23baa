//! `samlp train` — run the full pipeline and write the model artifact plus
//! its evaluation report.

use std::path::PathBuf;

use clap::Args;

use samlp_core::dataset::RecordFormat;
use samlp_core::tuner::{run_pipeline, run_pipeline_datasets};

use crate::config::{effective_config, PipelineFlags};
use crate::failure::{Failure, OrInput};
use crate::inputs::{load_corpus, parse_date, read_features_csv, stem};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus directory: `<name>.jsonl` + `<name>.labels.csv` pairs and a
    /// `collection_date.txt`.
    #[arg(long, conflicts_with_all = ["features", "records"])]
    corpus: Option<PathBuf>,
    /// Feature CSVs from `samlp extract`, one per dataset. Repeatable.
    #[arg(long, conflicts_with = "records")]
    features: Vec<PathBuf>,
    /// Raw records JSONL for a single dataset; needs --labels and
    /// --collection-date.
    #[arg(long, requires = "labels", requires = "collection_date")]
    records: Option<PathBuf>,
    /// Labels CSV for --records.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Collection date for --records (RFC 3339 or YYYY-MM-DD).
    #[arg(long)]
    collection_date: Option<String>,
    /// Force the record shape instead of detecting it per line.
    #[arg(long, default_value = "auto")]
    api_version: String,
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
    /// Where to write the trained model artifact.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the evaluation report (default: `<out>.report.json`).
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(args: &TrainArgs) -> Result<(), Failure> {
    let config = effective_config(args.config.as_deref(), &args.pipeline)?;
    let format = RecordFormat::parse(&args.api_version).or_input()?;

    let (artifact, report) = if let Some(dir) = &args.corpus {
        let datasets = load_corpus(dir, format)?;
        run_pipeline_datasets(&datasets, &config, config.seed)?
    } else if !args.features.is_empty() {
        let matrices = args
            .features
            .iter()
            .map(|path| read_features_csv(path))
            .collect::<Result<Vec<_>, _>>()?;
        run_pipeline(&matrices, &config, config.seed)?
    } else if let Some(records) = &args.records {
        let labels = args.labels.as_ref().expect("clap enforces --labels");
        let date = args
            .collection_date
            .as_ref()
            .expect("clap enforces --collection-date");
        let labels_map = samlp_core::dataset::parse_labels_csv(
            std::fs::File::open(labels).map_err(|e| {
                Failure::Input(format!("cannot open labels file {}: {e}", labels.display()))
            })?,
        )
        .or_input()?;
        let records_file = std::fs::File::open(records).map_err(|e| {
            Failure::Input(format!("cannot open records file {}: {e}", records.display()))
        })?;
        let (dataset, _) = samlp_core::dataset::load_dataset_from(
            records_file,
            &labels_map,
            parse_date(date)?,
            &stem(records),
            format,
        )
        .or_input()?;
        run_pipeline_datasets(&[dataset], &config, config.seed)?
    } else {
        return Err(Failure::Input(
            "no training input; pass --corpus, --features or --records".into(),
        ));
    };

    artifact.save(&args.out)?;
    let report_path = args.report.clone().unwrap_or_else(|| {
        let mut os = args.out.clone().into_os_string();
        os.push(".report.json");
        PathBuf::from(os)
    });
    std::fs::write(&report_path, report.to_json()?)
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", report_path.display())))?;

    println!(
        "trained on {} rows ({} train / {} test) across {} dataset(s)",
        report.n_rows,
        report.n_train,
        report.n_test,
        report.dataset_names.len()
    );
    println!(
        "selected {} of {} features at alpha {:.6}",
        report.selection.selected_indices.len(),
        artifact.input_schema.len(),
        report.selection.final_alpha
    );
    println!(
        "winner: {} (mean CV F1 {:.4})",
        report.winner.family.as_str(),
        report.winner_mean_f1
    );
    println!("threshold: {:.6}", report.threshold);
    println!("test F1: {:.4}", report.holdout.f1);
    for warning in &report.warnings {
        println!("warning: {warning}");
    }
    println!("wrote model to {}", args.out.display());
    println!("wrote report to {}", report_path.display());
    Ok(())
}
