//! `samlp bench` — run a benchmark scenario over a corpus (or the generated
//! synthetic one) and write its report files.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use samlp_core::dataset::RecordFormat;
use samlp_core::features::build_matrix;
use samlp_core::harness::{scenario_combined, scenario_per_dataset};
use samlp_core::synth::{generate_synthetic, SyntheticSpec};

use crate::config::{effective_config, PipelineFlags};
use crate::failure::{Failure, OrInput};
use crate::inputs::load_corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Train and evaluate each dataset on its own; report the mean F1.
    PerDataset,
    /// Pool every dataset into one run; report per-dataset and total F1.
    Combined,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Corpus directory (same layout as `samlp train --corpus`).
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    corpus: Option<PathBuf>,
    /// Generate a synthetic corpus instead of reading one.
    #[arg(long)]
    synthetic: bool,
    /// Synthetic corpus: number of datasets.
    #[arg(long, default_value_t = 9)]
    datasets: usize,
    /// Synthetic corpus: rows per dataset.
    #[arg(long, default_value_t = 1000)]
    rows: usize,
    /// Synthetic corpus: bot fraction per dataset.
    #[arg(long, default_value_t = 0.33)]
    bot_ratio: f64,
    /// Synthetic corpus: 0 keeps the classes cleanly separable, 1 mixes
    /// them completely.
    #[arg(long, default_value_t = 0.0)]
    overlap: f64,
    /// Which evaluation protocol to run.
    #[arg(long, value_enum)]
    scenario: Scenario,
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineFlags,
    /// Output directory for report.{json,txt,csv}.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: &BenchArgs) -> Result<(), Failure> {
    let config = effective_config(args.config.as_deref(), &args.pipeline)?;

    let matrices = if let Some(dir) = &args.corpus {
        load_corpus(dir, RecordFormat::Auto)?
            .iter()
            .map(build_matrix)
            .collect::<Result<Vec<_>, _>>()
            .or_input()?
    } else {
        let spec = SyntheticSpec {
            n_datasets: args.datasets,
            rows_per_dataset: args.rows,
            bot_ratio: args.bot_ratio,
            overlap: args.overlap,
            seed: config.seed,
        };
        spec.validate().or_input()?;
        generate_synthetic(&spec)
    };
    if args.scenario == Scenario::Combined && matrices.len() < 2 {
        return Err(Failure::Input(format!(
            "the combined scenario pools datasets and needs at least 2, got {}",
            matrices.len()
        )));
    }

    let report = match args.scenario {
        Scenario::PerDataset => scenario_per_dataset(&matrices, &config, config.seed)?,
        Scenario::Combined => scenario_combined(&matrices, &config, config.seed)?,
    };

    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", args.out.display())))?;
    let write = |name: &str, contents: String| -> Result<(), Failure> {
        let path = args.out.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
    };
    write("report.json", report.to_json()?)?;
    write("report.txt", report.text_table())?;
    write("report.csv", report.to_csv())?;

    print!("{}", report.text_table());
    if report.incomplete {
        eprintln!("warning: some datasets failed; the averages skip them");
    }
    println!("wrote report files to {}", args.out.display());
    Ok(())
}
