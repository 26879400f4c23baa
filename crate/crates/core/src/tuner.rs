//! Configuration tournament and final model assembly: evaluate sampled
//! configurations by stratified cross-validation, pick the best by mean
//! bot-class F1, tune the decision threshold on pooled out-of-fold
//! scores, measure the held-out test portion, and retrain on everything.

use serde::{Deserialize, Serialize};

use crate::artifact::{ModelArtifact, TrainingMetadata};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::features::{build_matrix, FeatureMatrix};
use crate::lasso::{alpha_grid, select_features_with_grid, SelectionResult};
use crate::metrics::{f1_at_threshold, precision_recall_f1, ConfusionCounts};
use crate::model::space::{ModelConfig, ParamSpace, ParamValue};
use crate::model::{class_weights, train_prepared, ClassWeights, PreparedDataset};
use crate::seeding::{name_tag, sub_seed, Domain};
use crate::split::{stratified_holdout, stratified_kfold, FoldPlan};

/// Protocol knobs with the published defaults: 70/30 holdout, K = 5,
/// 10 selection repetitions, 50 configurations per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub holdout_ratio: f64,
    pub cv_folds: usize,
    pub selection_repetitions: usize,
    pub configs_per_family: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_points: usize,
    /// Explanation settings carried along for the CLI: "exact",
    /// "sampled" or "auto".
    pub shap_mode: String,
    pub shap_background: usize,
    pub shap_permutations: usize,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            seed: 42,
            holdout_ratio: 0.7,
            cv_folds: 5,
            selection_repetitions: 10,
            configs_per_family: 50,
            alpha_min: 1e-4,
            alpha_max: 10.0,
            alpha_points: 50,
            shap_mode: "auto".into(),
            shap_background: 100,
            shap_permutations: 2048,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.holdout_ratio > 0.0 && self.holdout_ratio < 1.0) {
            return Err(Error::Tuning(format!(
                "holdout ratio {} is outside (0, 1)",
                self.holdout_ratio
            )));
        }
        if self.cv_folds < 2 {
            return Err(Error::Tuning("need at least 2 folds".into()));
        }
        if self.configs_per_family == 0 {
            return Err(Error::Tuning("configs_per_family must be positive".into()));
        }
        match self.shap_mode.as_str() {
            "auto" | "exact" | "sampled" => Ok(()),
            other => Err(Error::Tuning(format!(
                "unknown shap mode {other:?} (expected auto, exact or sampled)"
            ))),
        }
    }
}

/// Cross-validation outcome of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEvaluation {
    pub config: ModelConfig,
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    pub failed: bool,
    pub error: Option<String>,
    /// 1-based position after ranking; None for failed evaluations.
    pub rank: Option<u32>,
}

/// One fold's training subset, pre-sorted once so that every candidate
/// configuration reuses the same column orders.
pub struct FoldData {
    pub train: PreparedDataset,
    pub validation_rows: Vec<Vec<f64>>,
    pub validation_labels: Vec<f64>,
    /// Positions of the validation rows inside the training matrix.
    pub validation_indices: Vec<usize>,
}

pub fn prepare_folds(train: &FeatureMatrix, plan: &FoldPlan) -> Vec<FoldData> {
    (0..plan.k())
        .map(|f| {
            let train_idx = plan.training(f);
            let valid_idx = plan.validation(f).to_vec();
            FoldData {
                train: PreparedDataset::from_matrix(&train.subset_rows(&train_idx)),
                validation_rows: valid_idx.iter().map(|&i| train.rows[i].clone()).collect(),
                validation_labels: valid_idx.iter().map(|&i| train.labels[i]).collect(),
                validation_indices: valid_idx,
            }
        })
        .collect()
}

/// Evaluate a configuration on pre-built folds. Scoring uses the model's
/// untuned cut (probability 0.5 / margin 0). Returns the evaluation and,
/// when every fold trained, out-of-fold scores aligned to training rows.
pub fn evaluate_config_prepared(
    config: &ModelConfig,
    folds: &[FoldData],
    weights: &ClassWeights,
) -> (ConfigEvaluation, Option<Vec<f64>>) {
    let n_train: usize = folds.iter().map(|f| f.validation_indices.len()).sum();
    let mut oof = vec![f64::NAN; n_train];
    let mut fold_f1 = Vec::with_capacity(folds.len());
    for fold in folds {
        match train_prepared(config, &fold.train, weights) {
            Ok(model) => {
                let scores = model.score_rows(&fold.validation_rows);
                fold_f1.push(f1_at_threshold(
                    &scores,
                    &fold.validation_labels,
                    model.cv_threshold(),
                ));
                for (&idx, &s) in fold.validation_indices.iter().zip(&scores) {
                    oof[idx] = s;
                }
            }
            Err(e) => {
                return (
                    ConfigEvaluation {
                        config: config.clone(),
                        fold_f1,
                        mean_f1: 0.0,
                        failed: true,
                        error: Some(e.to_string()),
                        rank: None,
                    },
                    None,
                );
            }
        }
    }
    let mean_f1 = fold_f1.iter().sum::<f64>() / fold_f1.len() as f64;
    (
        ConfigEvaluation {
            config: config.clone(),
            fold_f1,
            mean_f1,
            failed: false,
            error: None,
            rank: None,
        },
        Some(oof),
    )
}

/// Evaluate a configuration against a fold plan over the training matrix.
pub fn evaluate_config(
    config: &ModelConfig,
    train: &FeatureMatrix,
    plan: &FoldPlan,
    weights: &ClassWeights,
) -> ConfigEvaluation {
    evaluate_config_prepared(config, &prepare_folds(train, plan), weights).0
}

/// Tie-break key: fewer estimators, then shallower trees, then the
/// lexicographically smallest digest. Depth 0 means unlimited for the
/// forest, so it sorts after every bounded depth.
fn tie_key(config: &ModelConfig) -> (u64, u64, String) {
    let int_param = |name: &str| match config.params.get(name) {
        Some(ParamValue::Int(v)) => Some(*v as u64),
        _ => None,
    };
    let estimators = int_param("n_estimators").or_else(|| int_param("n_trees")).unwrap_or(0);
    let depth = match int_param("max_depth") {
        Some(0) => u64::MAX,
        Some(d) => d,
        None => 0,
    };
    (estimators, depth, config.digest())
}

/// Joint argmax of mean F1 over every successful evaluation, regardless
/// of family; deterministic under reordering.
pub fn select_best(evaluations: &[ConfigEvaluation]) -> Result<ModelConfig> {
    let mut best: Option<&ConfigEvaluation> = None;
    for eval in evaluations.iter().filter(|e| !e.failed) {
        best = Some(match best {
            None => eval,
            Some(current) => {
                if eval.mean_f1 > current.mean_f1
                    || (eval.mean_f1 == current.mean_f1
                        && tie_key(&eval.config) < tie_key(&current.config))
                {
                    eval
                } else {
                    current
                }
            }
        });
    }
    best.map(|e| e.config.clone())
        .ok_or_else(|| Error::Tuning("every configuration failed cross-validation".into()))
}

/// Result of the precision-recall threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub threshold: f64,
    pub f1: f64,
    pub warnings: Vec<String>,
}

/// Sweep every distinct score as a candidate cut and return the one
/// maximizing bot-class F1; ties go to the higher (more conservative)
/// threshold. Constant scores fall back to 0.5.
pub fn optimize_threshold(scores: &[f64], labels: &[f64]) -> Result<ThresholdSearch> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Tuning(format!(
            "threshold search needs matching non-empty scores/labels, got {}/{}",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Tuning("non-finite score in threshold search".into()));
    }
    let bots = labels.iter().filter(|&&y| y == 1.0).count();
    if bots == 0 || bots == labels.len() {
        return Err(Error::ClassAbsent(format!(
            "threshold search needs both classes, got {bots}/{} bots",
            labels.len()
        )));
    }

    let mut candidates = scores.to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    if candidates.len() == 1 {
        return Ok(ThresholdSearch {
            threshold: 0.5,
            f1: f1_at_threshold(scores, labels, 0.5),
            warnings: vec![format!(
                "all {} out-of-fold scores equal {}; keeping default threshold 0.5",
                scores.len(),
                candidates[0]
            )],
        });
    }

    let mut best_threshold = candidates[0];
    let mut best_f1 = f1_at_threshold(scores, labels, candidates[0]);
    for &t in &candidates[1..] {
        let f1 = f1_at_threshold(scores, labels, t);
        if f1 >= best_f1 {
            best_f1 = f1;
            best_threshold = t;
        }
    }
    Ok(ThresholdSearch {
        threshold: best_threshold,
        f1: best_f1,
        warnings: vec![],
    })
}

/// Retrain the winner on every row (train and test) and bundle the
/// deployable artifact. The threshold must already be fixed from
/// out-of-fold scores.
pub fn finalize_model(
    best: &ModelConfig,
    full_matrix: &FeatureMatrix,
    selection: &SelectionResult,
    threshold: f64,
    metadata: TrainingMetadata,
    master_seed: u64,
) -> Result<ModelArtifact> {
    let projected = full_matrix.select_columns(&selection.selected_indices);
    let weights = class_weights(&projected.labels)?;
    let prepared = PreparedDataset::from_matrix(&projected);
    let classifier = train_prepared(best, &prepared, &weights)?;
    Ok(ModelArtifact::new(
        selection.clone(),
        best.clone(),
        classifier,
        threshold,
        full_matrix.schema.clone(),
        master_seed,
        metadata,
    ))
}

/// Row ranges of each input dataset inside the combined matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSlice {
    pub dataset: String,
    pub start: usize,
    pub end: usize,
}

/// Which combined-matrix rows each stage touched. `verify` proves the
/// holdout separation: test rows appear in no training-side stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexAudit {
    pub n_rows: usize,
    pub datasets: Vec<DatasetSlice>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub selection_rows: Vec<usize>,
    /// Validation rows of each model-selection fold, in combined-row ids.
    pub cv_validation_rows: Vec<Vec<usize>>,
    pub threshold_rows: Vec<usize>,
    /// The final refit deliberately sees everything.
    pub final_fit_rows: Vec<usize>,
}

impl IndexAudit {
    pub fn verify(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Tuning(format!("index audit: {msg}")));
        let mut seen = vec![0u8; self.n_rows];
        for &r in &self.train_rows {
            seen[r] |= 1;
        }
        for &r in &self.test_rows {
            if seen[r] & 1 != 0 {
                return fail(format!("row {r} is in both train and test"));
            }
            seen[r] |= 2;
        }
        if seen.iter().any(|&s| s == 0) {
            return fail("some rows belong to neither split".into());
        }

        let is_test = |r: usize| seen[r] & 2 != 0;
        for (stage, rows) in [
            ("selection", &self.selection_rows),
            ("threshold search", &self.threshold_rows),
        ] {
            if let Some(&r) = rows.iter().find(|&&r| is_test(r)) {
                return fail(format!("test row {r} leaked into {stage}"));
            }
        }
        let mut fold_seen = vec![false; self.n_rows];
        for (f, fold) in self.cv_validation_rows.iter().enumerate() {
            for &r in fold {
                if is_test(r) {
                    return fail(format!("test row {r} leaked into CV fold {f}"));
                }
                if fold_seen[r] {
                    return fail(format!("row {r} validates in two CV folds"));
                }
                fold_seen[r] = true;
            }
        }
        let validated = fold_seen.iter().filter(|&&b| b).count();
        if validated != self.train_rows.len() {
            return fail(format!(
                "CV folds validate {validated} rows but training has {}",
                self.train_rows.len()
            ));
        }
        Ok(())
    }
}

/// Bot-class precision/recall/F1 plus the backing confusion counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutMetrics {
    pub confusion: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn holdout_metrics(scores: &[f64], labels: &[f64], threshold: f64) -> HoldoutMetrics {
    let confusion = ConfusionCounts::from_scores(scores, labels, threshold);
    let (precision, recall, f1) = precision_recall_f1(&confusion);
    HoldoutMetrics {
        confusion,
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHoldout {
    pub dataset: String,
    pub n_test: usize,
    pub metrics: HoldoutMetrics,
}

/// Everything the pipeline learned, measured and decided for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub report_version: String,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub dataset_names: Vec<String>,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_human: usize,
    pub n_bot: usize,
    pub selection: SelectionResult,
    /// Ranked CV table: successes by descending mean F1, failures last.
    pub evaluations: Vec<ConfigEvaluation>,
    pub winner: ModelConfig,
    pub winner_mean_f1: f64,
    pub threshold: f64,
    pub oof_f1_at_threshold: f64,
    pub holdout: HoldoutMetrics,
    pub per_dataset_holdout: Vec<DatasetHoldout>,
    pub audit: IndexAudit,
    pub warnings: Vec<String>,
}

pub const REPORT_VERSION: &str = "samlp-report-v1";

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse(format!("report serialization failed: {e}")))
    }
}

/// The full supervised pipeline over one or more feature matrices (one
/// per dataset): per-dataset stratified holdout, Lasso selection on the
/// training portion, a 3-family configuration tournament under a fresh
/// fold plan, PR-threshold tuning on the winner's pooled out-of-fold
/// scores, holdout measurement at that threshold, and a final refit on
/// all rows.
pub fn run_pipeline(
    matrices: &[FeatureMatrix],
    config: &PipelineConfig,
    seed: u64,
) -> Result<(ModelArtifact, EvaluationReport)> {
    run_pipeline_with_dates(matrices, &[], config, seed)
}

/// [`run_pipeline`] over loaded datasets; collection dates flow into the
/// artifact metadata.
pub fn run_pipeline_datasets(
    datasets: &[LabeledDataset],
    config: &PipelineConfig,
    seed: u64,
) -> Result<(ModelArtifact, EvaluationReport)> {
    let matrices = datasets
        .iter()
        .map(build_matrix)
        .collect::<Result<Vec<_>>>()?;
    let dates: Vec<String> = datasets
        .iter()
        .map(|d| d.collection_date.to_rfc3339())
        .collect();
    run_pipeline_with_dates(&matrices, &dates, config, seed)
}

fn run_pipeline_with_dates(
    matrices: &[FeatureMatrix],
    collection_dates: &[String],
    config: &PipelineConfig,
    seed: u64,
) -> Result<(ModelArtifact, EvaluationReport)> {
    use rayon::prelude::*;

    config.validate()?;
    if matrices.is_empty() {
        return Err(Error::EmptyDataset("no input datasets".into()));
    }

    // Combined matrix plus the row range of each dataset within it.
    let dataset_names: Vec<String> = matrices.iter().map(|m| m.dataset_name.clone()).collect();
    let combined_name = dataset_names.join("+");
    let refs: Vec<&FeatureMatrix> = matrices.iter().collect();
    let combined = FeatureMatrix::concat(&refs, &combined_name)?;
    let mut slices = Vec::with_capacity(matrices.len());
    let mut offset = 0;
    for m in matrices {
        slices.push(DatasetSlice {
            dataset: m.dataset_name.clone(),
            start: offset,
            end: offset + m.n_rows(),
        });
        offset += m.n_rows();
    }

    // Stage 1 — holdout. Each dataset splits under its own name-derived
    // sub-seed so that adding a dataset never reshuffles the others.
    let mut train_rows: Vec<usize> = Vec::new();
    let mut test_rows: Vec<usize> = Vec::new();
    for slice in &slices {
        let labels = &combined.labels[slice.start..slice.end];
        let split = stratified_holdout(
            labels,
            config.holdout_ratio,
            sub_seed(seed, Domain::HoldoutSplit, name_tag(&slice.dataset)),
        )?;
        train_rows.extend(split.train_idx.iter().map(|&i| i + slice.start));
        test_rows.extend(split.test_idx.iter().map(|&i| i + slice.start));
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    let train_matrix = combined.subset_rows(&train_rows);
    let test_matrix = combined.subset_rows(&test_rows);

    let mut warnings: Vec<String> = Vec::new();

    // Stage 2 — Lasso feature selection on training rows only.
    let grid = alpha_grid(config.alpha_min, config.alpha_max, config.alpha_points)?;
    let selection = select_features_with_grid(
        &train_matrix,
        config.selection_repetitions,
        config.cv_folds,
        &grid,
        seed,
    )?;
    warnings.extend(selection.warnings.iter().cloned());
    let train_sel = train_matrix.select_columns(&selection.selected_indices);
    let test_sel = test_matrix.select_columns(&selection.selected_indices);

    // Stage 3 — sample the configuration tournament.
    let mut configs: Vec<ModelConfig> = Vec::new();
    for space in ParamSpace::all() {
        let (sampled, sample_warnings) =
            crate::model::space::sample_configs(&space, config.configs_per_family, seed);
        configs.extend(sampled);
        warnings.extend(sample_warnings);
    }

    // Stage 4 — cross-validate every configuration on one shared fold
    // plan (independent of the folds selection used).
    let weights = class_weights(&train_sel.labels)?;
    let local_rows: Vec<usize> = (0..train_sel.n_rows()).collect();
    let plan = stratified_kfold(
        &local_rows,
        &train_sel.labels,
        config.cv_folds,
        sub_seed(seed, Domain::ModelCvFolds, 0),
    )?;
    let folds = prepare_folds(&train_sel, &plan);
    let mut results: Vec<(ConfigEvaluation, Option<Vec<f64>>)> = configs
        .par_iter()
        .map(|c| evaluate_config_prepared(c, &folds, &weights))
        .collect();
    for (eval, _) in results.iter().filter(|(e, _)| e.failed) {
        warnings.push(format!(
            "configuration {} ({:?}) failed: {}",
            eval.config.digest(),
            eval.config.family,
            eval.error.as_deref().unwrap_or("unknown error")
        ));
    }

    // Stage 5 — pick the winner and tune its threshold on pooled
    // out-of-fold scores.
    let evaluations_only: Vec<ConfigEvaluation> =
        results.iter().map(|(e, _)| e.clone()).collect();
    let winner = select_best(&evaluations_only)?;
    let winner_digest = winner.digest();
    let (winner_eval, winner_oof) = results
        .iter()
        .find(|(e, _)| e.config.digest() == winner_digest)
        .expect("winner came from this result set");
    let winner_mean_f1 = winner_eval.mean_f1;
    let oof = winner_oof.as_ref().expect("winning evaluation has complete folds");
    let search = optimize_threshold(oof, &train_sel.labels)?;
    warnings.extend(search.warnings.iter().cloned());

    // Stage 6 — measure the untouched test portion at the tuned cut,
    // using the winner retrained on the full training portion.
    let holdout_model =
        train_prepared(&winner, &PreparedDataset::from_matrix(&train_sel), &weights)?;
    let test_scores = holdout_model.score_rows(&test_sel.rows);
    let holdout = holdout_metrics(&test_scores, &test_sel.labels, search.threshold);
    let per_dataset_holdout: Vec<DatasetHoldout> = slices
        .iter()
        .map(|slice| {
            let in_slice: Vec<usize> = test_rows
                .iter()
                .enumerate()
                .filter(|(_, &row)| row >= slice.start && row < slice.end)
                .map(|(pos, _)| pos)
                .collect();
            let scores: Vec<f64> = in_slice.iter().map(|&p| test_scores[p]).collect();
            let labels: Vec<f64> = in_slice.iter().map(|&p| test_sel.labels[p]).collect();
            DatasetHoldout {
                dataset: slice.dataset.clone(),
                n_test: in_slice.len(),
                metrics: holdout_metrics(&scores, &labels, search.threshold),
            }
        })
        .collect();

    // Stage 7 — rank the CV table for the report.
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&results[a].0, &results[b].0);
        eb.failed
            .cmp(&ea.failed)
            .reverse()
            .then(eb.mean_f1.total_cmp(&ea.mean_f1))
            .then_with(|| tie_key(&ea.config).cmp(&tie_key(&eb.config)))
    });
    let mut evaluations: Vec<ConfigEvaluation> = Vec::with_capacity(results.len());
    let mut rank = 0u32;
    for &i in &order {
        let mut eval = std::mem::replace(
            &mut results[i].0,
            ConfigEvaluation {
                config: winner.clone(),
                fold_f1: vec![],
                mean_f1: 0.0,
                failed: true,
                error: None,
                rank: None,
            },
        );
        if !eval.failed {
            rank += 1;
            eval.rank = Some(rank);
        }
        evaluations.push(eval);
    }

    // Stage 8 — audit trail and final refit on all rows.
    let audit = IndexAudit {
        n_rows: combined.n_rows(),
        datasets: slices,
        train_rows: train_rows.clone(),
        test_rows,
        selection_rows: train_rows.clone(),
        cv_validation_rows: (0..plan.k())
            .map(|f| plan.validation(f).iter().map(|&i| train_rows[i]).collect())
            .collect(),
        threshold_rows: train_rows.clone(),
        final_fit_rows: (0..combined.n_rows()).collect(),
    };
    audit.verify()?;

    let (n_human, n_bot) = combined.class_counts();
    let metadata = TrainingMetadata {
        dataset_names: dataset_names.clone(),
        collection_dates: collection_dates.to_vec(),
        n_rows: combined.n_rows(),
        n_human,
        n_bot,
        entropy_base: 2,
        notes: vec![
            "final model retrained on all rows including the held-out test portion".into(),
            "test portion was never resampled or balanced".into(),
            "selection final fit used the full unbalanced training portion".into(),
        ],
    };
    let artifact = finalize_model(
        &winner,
        &combined,
        &selection,
        search.threshold,
        metadata,
        seed,
    )?;

    let report = EvaluationReport {
        report_version: REPORT_VERSION.to_string(),
        seed,
        pipeline: config.clone(),
        dataset_names,
        n_rows: combined.n_rows(),
        n_train: train_matrix.n_rows(),
        n_test: test_matrix.n_rows(),
        n_human,
        n_bot,
        selection,
        evaluations,
        winner,
        winner_mean_f1,
        threshold: search.threshold,
        oof_f1_at_threshold: search.f1,
        holdout,
        per_dataset_holdout,
        audit,
        warnings,
    };
    Ok((artifact, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::space::Family;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn eval_with(mean: f64, estimators: i64, digest_salt: u64) -> ConfigEvaluation {
        let mut params = BTreeMap::new();
        params.insert("n_estimators".to_string(), ParamValue::Int(estimators));
        params.insert("max_depth".to_string(), ParamValue::Int(3));
        params.insert("salt".to_string(), ParamValue::Int(digest_salt as i64));
        ConfigEvaluation {
            config: ModelConfig {
                family: Family::Gbt,
                params,
                seed: 0,
            },
            fold_f1: vec![mean],
            mean_f1: mean,
            failed: false,
            error: None,
            rank: None,
        }
    }

    #[test]
    fn select_best_takes_the_argmax_across_families() {
        let evals = vec![eval_with(0.80, 100, 1), eval_with(0.91, 300, 2), eval_with(0.85, 50, 3)];
        let best = select_best(&evals).unwrap();
        assert_eq!(best.digest(), evals[1].config.digest());
    }

    #[test]
    fn select_best_is_order_invariant_and_breaks_ties() {
        let evals = vec![
            eval_with(0.9, 500, 1),
            eval_with(0.9, 100, 2),
            eval_with(0.9, 100, 3),
        ];
        let expected = select_best(&evals).unwrap().digest();
        // Fewer estimators wins; among equals the smaller digest wins.
        let tied: Vec<String> = evals[1..]
            .iter()
            .map(|e| e.config.digest())
            .collect();
        assert_eq!(expected, tied.iter().min().unwrap().clone());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            let mut shuffled = evals.clone();
            shuffled.shuffle(&mut rng);
            assert_eq!(select_best(&shuffled).unwrap().digest(), expected);
        }
    }

    #[test]
    fn select_best_requires_a_survivor() {
        let mut failed = eval_with(0.0, 100, 1);
        failed.failed = true;
        assert!(matches!(select_best(&[failed]), Err(Error::Tuning(_))));
        assert!(matches!(select_best(&[]), Err(Error::Tuning(_))));
    }

    #[test]
    fn threshold_on_separable_scores_picks_the_conservative_cut() {
        let scores = [0.9, 0.8, 0.1, 0.2];
        let labels = [1.0, 1.0, 0.0, 0.0];
        let search = optimize_threshold(&scores, &labels).unwrap();
        assert_eq!(search.threshold, 0.8);
        assert_eq!(search.f1, 1.0);
        assert!(search.warnings.is_empty());
    }

    #[test]
    fn threshold_matches_exhaustive_oracle_on_random_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..25 {
            let n = rng.random_range(5..60);
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(0..20) as f64) / 20.0)
                .collect();
            let mut labels: Vec<f64> = (0..n).map(|i| f64::from(i % 3 == 0)).collect();
            labels.shuffle(&mut rng);
            if !labels.contains(&1.0) || !labels.contains(&0.0) {
                continue;
            }
            let search = optimize_threshold(&scores, &labels).unwrap();
            let mut distinct = scores.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            if distinct.len() == 1 {
                assert_eq!(search.threshold, 0.5);
                continue;
            }
            let oracle_best = distinct
                .iter()
                .map(|&t| f1_at_threshold(&scores, &labels, t))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(search.f1, oracle_best, "threshold {}", search.threshold);
            // The tie rule returns the highest threshold achieving it.
            let higher: Vec<f64> = distinct
                .iter()
                .copied()
                .filter(|&t| t > search.threshold)
                .collect();
            for t in higher {
                assert!(f1_at_threshold(&scores, &labels, t) < oracle_best);
            }
        }
    }

    #[test]
    fn constant_scores_fall_back_with_a_warning() {
        let scores = [0.7; 6];
        let labels = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let search = optimize_threshold(&scores, &labels).unwrap();
        assert_eq!(search.threshold, 0.5);
        assert_eq!(search.warnings.len(), 1);
    }

    #[test]
    fn threshold_rejects_bad_inputs() {
        assert!(optimize_threshold(&[], &[]).is_err());
        assert!(optimize_threshold(&[0.1, f64::NAN], &[0.0, 1.0]).is_err());
        assert!(matches!(
            optimize_threshold(&[0.1, 0.2], &[1.0, 1.0]),
            Err(Error::ClassAbsent(_))
        ));
    }

    fn separable_matrix(name: &str, n: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let bot = i % 2 == 0;
            let center = if bot { 3.0 } else { -3.0 };
            rows.push(vec![
                center + rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            labels.push(f64::from(bot));
        }
        FeatureMatrix {
            user_ids: (0..n).map(|i| format!("{name}-{i}")).collect(),
            schema: vec!["signal".into(), "noise_a".into(), "noise_b".into()],
            rows,
            labels,
            dataset_name: name.into(),
        }
    }

    fn quick_config() -> PipelineConfig {
        PipelineConfig {
            cv_folds: 3,
            selection_repetitions: 3,
            configs_per_family: 2,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn pipeline_end_to_end_on_a_separable_fixture() {
        let matrix = separable_matrix("unit", 80, 4);
        let (artifact, report) = run_pipeline(&[matrix.clone()], &quick_config(), 11).unwrap();

        assert!(report.holdout.f1 >= 0.95, "holdout F1 {}", report.holdout.f1);
        assert_eq!(report.n_rows, 80);
        assert_eq!(report.n_train + report.n_test, 80);
        assert!(report.selection.selected_indices.contains(&0), "signal column dropped");
        assert!(report.evaluations.iter().any(|e| e.rank == Some(1)));
        report.audit.verify().unwrap();
        assert_eq!(report.winner.digest(), artifact.config.digest());

        // The artifact scores the training fixture consistently with the
        // tuned threshold.
        let labels: Vec<(f64, crate::dataset::Label)> = artifact.classify(&matrix).unwrap();
        let accuracy = labels
            .iter()
            .zip(&matrix.labels)
            .filter(|((_, l), &y)| (*l == crate::dataset::Label::Bot) == (y == 1.0))
            .count() as f64
            / 80.0;
        assert!(accuracy >= 0.95, "artifact accuracy {accuracy}");
    }

    #[test]
    fn pipeline_is_deterministic_per_seed() {
        let matrices = [
            separable_matrix("a", 60, 1),
            separable_matrix("b", 60, 2),
        ];
        let cfg = quick_config();
        let (art1, rep1) = run_pipeline(&matrices, &cfg, 5).unwrap();
        let (art2, rep2) = run_pipeline(&matrices, &cfg, 5).unwrap();
        assert_eq!(
            art1.to_compressed_bytes().unwrap(),
            art2.to_compressed_bytes().unwrap()
        );
        assert_eq!(rep1.to_json().unwrap(), rep2.to_json().unwrap());
        let (_, rep3) = run_pipeline(&matrices, &cfg, 6).unwrap();
        assert_ne!(rep1.to_json().unwrap(), rep3.to_json().unwrap());
    }

    #[test]
    fn multi_dataset_runs_report_per_dataset_metrics() {
        let matrices = [
            separable_matrix("alpha", 60, 1),
            separable_matrix("beta", 64, 2),
        ];
        let (_, report) = run_pipeline(&matrices, &quick_config(), 9).unwrap();
        assert_eq!(report.per_dataset_holdout.len(), 2);
        assert_eq!(report.per_dataset_holdout[0].dataset, "alpha");
        assert_eq!(report.per_dataset_holdout[1].dataset, "beta");
        let total_test: usize = report.per_dataset_holdout.iter().map(|d| d.n_test).sum();
        assert_eq!(total_test, report.n_test);
    }

    #[test]
    fn audit_catches_planted_leaks() {
        let matrix = separable_matrix("leak", 40, 3);
        let (_, report) = run_pipeline(&[matrix], &quick_config(), 2).unwrap();
        let mut audit = report.audit.clone();
        // Planting a test row into the threshold pool must trip the audit.
        audit.threshold_rows.push(audit.test_rows[0]);
        assert!(audit.verify().is_err());
        let mut audit2 = report.audit.clone();
        audit2.cv_validation_rows[0].push(audit2.test_rows[0]);
        assert!(audit2.verify().is_err());
    }

    #[test]
    fn evaluate_config_reports_fold_means() {
        let matrix = separable_matrix("cv", 60, 8);
        let weights = class_weights(&matrix.labels).unwrap();
        let rows: Vec<usize> = (0..matrix.n_rows()).collect();
        let plan = stratified_kfold(&rows, &matrix.labels, 3, 123).unwrap();
        let mut params = BTreeMap::new();
        params.insert("c".to_string(), ParamValue::Float(10.0));
        params.insert("epochs".to_string(), ParamValue::Int(150));
        let config = ModelConfig {
            family: Family::Svm,
            params,
            seed: 0,
        };
        let eval = evaluate_config(&config, &matrix, &plan, &weights);
        assert!(!eval.failed);
        assert_eq!(eval.fold_f1.len(), 3);
        let mean = eval.fold_f1.iter().sum::<f64>() / 3.0;
        assert_eq!(eval.mean_f1, mean);
        assert!(eval.mean_f1 > 0.9, "mean F1 {}", eval.mean_f1);
    }

    #[test]
    fn broken_configs_mark_failed_instead_of_aborting() {
        let matrix = separable_matrix("broken", 30, 5);
        let weights = class_weights(&matrix.labels).unwrap();
        let rows: Vec<usize> = (0..matrix.n_rows()).collect();
        let plan = stratified_kfold(&rows, &matrix.labels, 3, 9).unwrap();
        let config = ModelConfig {
            family: Family::Svm,
            params: BTreeMap::new(), // missing "c" and "epochs"
            seed: 0,
        };
        let eval = evaluate_config(&config, &matrix, &plan, &weights);
        assert!(eval.failed);
        assert!(eval.error.is_some());
        assert_eq!(eval.rank, None);
    }
}
