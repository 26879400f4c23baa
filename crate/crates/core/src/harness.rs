//! Benchmark protocols over dataset collections.
//!
//! Two evaluation protocols are supported: training and testing on each
//! dataset separately ([`scenario_per_dataset`]), and pooling the training
//! portions of every dataset into one training set that is then tested both
//! per dataset and on the union of the test portions ([`scenario_combined`]).
//! Both emit a [`BenchmarkReport`] with per-dataset F1 columns plus `Average`
//! and (for the combined protocol) `Total` summary rows.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seeding::{name_tag, sub_seed, Domain};
use crate::tuner::{run_pipeline, PipelineConfig};

pub const BENCH_REPORT_VERSION: &str = "samlp-bench-v1";

/// One dataset's row in a benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetScore {
    pub dataset: String,
    /// Sub-seed its 70/30 split was drawn from, derived from the master seed
    /// and the dataset name.
    pub split_seed: u64,
    /// Test F1 at the tuned threshold; `None` when the run failed.
    pub f1: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub report_version: String,
    /// "per_dataset" or "combined".
    pub scenario: String,
    pub master_seed: u64,
    /// Effective pipeline configuration the scenario ran with.
    pub pipeline: PipelineConfig,
    /// Ordered by dataset name, independent of input order.
    pub datasets: Vec<DatasetScore>,
    /// Unweighted mean over the scored datasets; `None` when every dataset
    /// failed.
    pub average_f1: Option<f64>,
    /// F1 on the union of all test portions; only the combined scenario
    /// produces one.
    pub total_f1: Option<f64>,
    /// Wall-clock duration of the scenario. The only nondeterministic field;
    /// [`BenchmarkReport::stable_json`] zeroes it so reports can be compared
    /// byte for byte across runs.
    pub runtime_seconds: f64,
    /// Set when at least one dataset failed and was excluded from the
    /// average.
    pub incomplete: bool,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse(format!("benchmark serialization failed: {e}")))
    }

    /// JSON with the runtime zeroed; byte-identical across identical runs.
    pub fn stable_json(&self) -> Result<String> {
        let mut stable = self.clone();
        stable.runtime_seconds = 0.0;
        stable.to_json()
    }

    /// Aligned-column table: one row per dataset plus Average/Total rows.
    pub fn text_table(&self) -> String {
        let name_width = self
            .datasets
            .iter()
            .map(|d| d.dataset.len())
            .chain(["Dataset".len(), "Average".len()])
            .max()
            .unwrap_or(7);
        let fmt_f1 = |f1: Option<f64>, error: Option<&str>| match f1 {
            Some(value) => format!("{value:.4}"),
            None => format!("failed ({})", error.unwrap_or("unknown")),
        };

        let mut out = format!(
            "Scenario: {}  (seed {})\n{:<name_width$}  F1\n",
            self.scenario, self.master_seed, "Dataset"
        );
        for score in &self.datasets {
            out.push_str(&format!(
                "{:<name_width$}  {}\n",
                score.dataset,
                fmt_f1(score.f1, score.error.as_deref())
            ));
        }
        out.push_str(&format!(
            "{:<name_width$}  {}\n",
            "Average",
            fmt_f1(self.average_f1, Some("no dataset succeeded"))
        ));
        if let Some(total) = self.total_f1 {
            out.push_str(&format!("{:<name_width$}  {total:.4}\n", "Total"));
        }
        if self.incomplete {
            out.push_str("note: failed datasets were excluded from the average\n");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,f1,error\n");
        let cell = |f1: Option<f64>| f1.map(|v| v.to_string()).unwrap_or_default();
        for score in &self.datasets {
            out.push_str(&format!(
                "{},{},{}\n",
                score.dataset,
                cell(score.f1),
                score.error.as_deref().unwrap_or_default().replace(',', ";")
            ));
        }
        out.push_str(&format!("Average,{},\n", cell(self.average_f1)));
        if self.total_f1.is_some() {
            out.push_str(&format!("Total,{},\n", cell(self.total_f1)));
        }
        out
    }
}

fn assemble(
    scenario: &str,
    seed: u64,
    config: &PipelineConfig,
    datasets: Vec<DatasetScore>,
    total_f1: Option<f64>,
    started: Instant,
) -> BenchmarkReport {
    let scored: Vec<f64> = datasets.iter().filter_map(|d| d.f1).collect();
    let average_f1 = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
    let incomplete = datasets.iter().any(|d| d.error.is_some());
    BenchmarkReport {
        report_version: BENCH_REPORT_VERSION.into(),
        scenario: scenario.into(),
        master_seed: seed,
        pipeline: config.clone(),
        datasets,
        average_f1,
        total_f1,
        runtime_seconds: started.elapsed().as_secs_f64(),
        incomplete,
    }
}

fn split_seed_for(seed: u64, dataset: &str) -> u64 {
    sub_seed(seed, Domain::HoldoutSplit, name_tag(dataset))
}

/// Train and test one pipeline per dataset; report each test F1 and their
/// unweighted mean. Failed datasets are recorded, excluded from the average
/// and flagged via `incomplete`.
pub fn scenario_per_dataset(
    datasets: &[FeatureMatrix],
    config: &PipelineConfig,
    seed: u64,
) -> Result<BenchmarkReport> {
    if datasets.is_empty() {
        return Err(Error::EmptyDataset("no datasets to benchmark".into()));
    }
    let started = Instant::now();
    let mut ordered: Vec<&FeatureMatrix> = datasets.iter().collect();
    ordered.sort_by(|a, b| a.dataset_name.cmp(&b.dataset_name));

    let scores: Vec<DatasetScore> = ordered
        .par_iter()
        .map(|matrix| {
            let outcome = run_pipeline(std::slice::from_ref(*matrix), config, seed);
            let (f1, error) = match outcome {
                Ok((_, report)) => (Some(report.holdout.f1), None),
                Err(e) => (None, Some(e.to_string())),
            };
            DatasetScore {
                dataset: matrix.dataset_name.clone(),
                split_seed: split_seed_for(seed, &matrix.dataset_name),
                f1,
                error,
            }
        })
        .collect();

    Ok(assemble("per_dataset", seed, config, scores, None, started))
}

/// Pool every dataset's training portion into one training set, then test on
/// each dataset's held-out portion and on their union (the `Total` row). The
/// 70/30 split inside each dataset uses a dataset-specific sub-seed.
pub fn scenario_combined(
    datasets: &[FeatureMatrix],
    config: &PipelineConfig,
    seed: u64,
) -> Result<BenchmarkReport> {
    if datasets.len() < 2 {
        return Err(Error::Tuning(
            "combined scenario needs at least 2 datasets".into(),
        ));
    }
    let started = Instant::now();
    let mut ordered = datasets.to_vec();
    ordered.sort_by(|a, b| a.dataset_name.cmp(&b.dataset_name));

    let (_, report) = run_pipeline(&ordered, config, seed)?;
    let scores = report
        .per_dataset_holdout
        .iter()
        .map(|holdout| DatasetScore {
            dataset: holdout.dataset.clone(),
            split_seed: split_seed_for(seed, &holdout.dataset),
            f1: Some(holdout.metrics.f1),
            error: None,
        })
        .collect();

    Ok(assemble(
        "combined",
        seed,
        config,
        scores,
        Some(report.holdout.f1),
        started,
    ))
}
