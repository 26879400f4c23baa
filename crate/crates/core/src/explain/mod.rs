//! Shapley-value explanations for any scoring model: exact coalition
//! enumeration for small feature counts, seeded permutation sampling
//! beyond that, plus global importance summaries and batch exports.

pub mod svg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::model::space::Family;
use crate::model::TrainedClassifier;
use crate::seeding::{stage_rng_from, sub_seed, Domain};

/// Exact enumeration walks 2^m coalitions; beyond 15 features that is
/// past 32k model batches per instance, so we force sampling instead.
pub const EXACT_FEATURE_LIMIT: usize = 15;
pub const DEFAULT_PERMUTATIONS: usize = 2048;
pub const DEFAULT_BACKGROUND: usize = 100;

/// Anything that maps feature rows to scores. Implemented by trained
/// classifiers and by plain closures (handy for analytic oracles).
pub trait ScoreModel: Sync {
    fn score_batch(&self, rows: &[Vec<f64>]) -> Vec<f64>;

    /// What the scores mean: "probability", "margin", or a custom tag.
    fn score_scale(&self) -> &'static str {
        "score"
    }
}

impl ScoreModel for TrainedClassifier {
    fn score_batch(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        self.score_rows(rows)
    }

    fn score_scale(&self) -> &'static str {
        match self.family {
            Family::Svm => "margin",
            Family::RandomForest | Family::Gbt => "probability",
        }
    }
}

impl<F> ScoreModel for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn score_batch(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMode {
    Exact,
    Sampled,
}

/// Per-instance attribution: base value plus one phi per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub instance_id: String,
    /// Mean model score over the background sample.
    pub base_value: f64,
    pub phi: Vec<f64>,
    /// The explained instance's feature values (for beeswarm plots).
    pub values: Vec<f64>,
    /// Model score of the instance itself.
    pub score: f64,
    pub mode: ShapMode,
    pub n_samples: Option<usize>,
    pub score_scale: String,
}

/// Shapley kernel weight |S|!(m−1−|S|)!/m! for every coalition size.
/// Exact in f64 for m ≤ 15 (15! < 2^53).
fn coalition_weights(m: usize) -> Vec<f64> {
    let factorial = |n: usize| -> f64 { (1..=n).map(|v| v as f64).product() };
    (0..m)
        .map(|s| factorial(s) * factorial(m - 1 - s) / factorial(m))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// v(S): mean model score over the background with coalition features
/// taken from the instance and the rest from each background row.
fn coalition_value<M: ScoreModel + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &[Vec<f64>],
    mask: u32,
) -> f64 {
    let hybrids: Vec<Vec<f64>> = background
        .iter()
        .map(|b| {
            (0..instance.len())
                .map(|j| {
                    if mask & (1 << j) != 0 {
                        instance[j]
                    } else {
                        b[j]
                    }
                })
                .collect()
        })
        .collect();
    mean(&model.score_batch(&hybrids))
}

fn exact_phi<M: ScoreModel + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    use rayon::prelude::*;

    let m = instance.len();
    if m > EXACT_FEATURE_LIMIT {
        return Err(Error::Mode(format!(
            "exact Shapley enumeration supports at most {EXACT_FEATURE_LIMIT} features, got {m}; use sampled mode"
        )));
    }
    let n_masks = 1usize << m;
    let values: Vec<f64> = (0..n_masks as u32)
        .into_par_iter()
        .map(|mask| coalition_value(model, instance, background, mask))
        .collect();

    let weights = coalition_weights(m);
    let mut phi = vec![0.0; m];
    for mask in 0..n_masks as u32 {
        let size = mask.count_ones() as usize;
        for (j, p) in phi.iter_mut().enumerate() {
            if mask & (1 << j) == 0 {
                *p += weights[size] * (values[(mask | (1 << j)) as usize] - values[mask as usize]);
            }
        }
    }
    Ok((values[0], phi))
}

fn sampled_phi<M: ScoreModel + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &[Vec<f64>],
    n_samples: usize,
    seed: u64,
) -> (f64, Vec<f64>) {
    use rand::seq::SliceRandom;
    use rayon::prelude::*;

    let m = instance.len();
    let mut rng = stage_rng_from(seed);
    let permutations: Vec<Vec<usize>> = (0..n_samples)
        .map(|_| {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect();

    let base = mean(&model.score_batch(background));
    let contributions: Vec<Vec<f64>> = permutations
        .par_iter()
        .map(|order| {
            // Walk the permutation, flipping one feature at a time from
            // background to instance; the score delta is that feature's
            // marginal contribution under this ordering.
            let mut hybrids: Vec<Vec<f64>> = background.to_vec();
            let mut previous = base;
            let mut contrib = vec![0.0; m];
            for &j in order {
                for row in &mut hybrids {
                    row[j] = instance[j];
                }
                let current = mean(&model.score_batch(&hybrids));
                contrib[j] = current - previous;
                previous = current;
            }
            contrib
        })
        .collect();

    let mut phi = vec![0.0; m];
    for contrib in &contributions {
        for (p, c) in phi.iter_mut().zip(contrib) {
            *p += c;
        }
    }
    for p in &mut phi {
        *p /= n_samples as f64;
    }
    (base, phi)
}

/// Shapley attribution of one instance against a background sample,
/// using the interventional value function v(S) = mean over background
/// rows of the score of the S-hybrid row.
pub fn shapley_values<M: ScoreModel + ?Sized>(
    model: &M,
    instance_id: &str,
    instance: &[f64],
    background: &[Vec<f64>],
    mode: ShapMode,
    n_samples: usize,
    seed: u64,
) -> Result<Explanation> {
    if background.is_empty() {
        return Err(Error::Mode("background sample is empty".into()));
    }
    if background.iter().any(|b| b.len() != instance.len()) {
        return Err(Error::schema(format!(
            "background rows must have the instance's {} features",
            instance.len()
        )));
    }
    let (base_value, phi, n_used) = match mode {
        ShapMode::Exact => {
            let (base, phi) = exact_phi(model, instance, background)?;
            (base, phi, None)
        }
        ShapMode::Sampled => {
            if n_samples == 0 {
                return Err(Error::Mode("sampled mode needs at least one permutation".into()));
            }
            let (base, phi) = sampled_phi(model, instance, background, n_samples, seed);
            (base, phi, Some(n_samples))
        }
    };
    let score = model.score_batch(std::slice::from_ref(&instance.to_vec()))[0];
    Ok(Explanation {
        instance_id: instance_id.to_string(),
        base_value,
        phi,
        values: instance.to_vec(),
        score,
        mode,
        n_samples: n_used,
        score_scale: model.score_scale().to_string(),
    })
}

/// A batch of explanations sharing one feature schema; the exportable
/// unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationBatch {
    pub feature_names: Vec<String>,
    pub score_scale: String,
    pub explanations: Vec<Explanation>,
}

/// Explain several instances. Each instance gets its own sub-seed, so a
/// batch of one reproduces the single call with that derived seed.
pub fn explain_batch<M: ScoreModel + ?Sized>(
    model: &M,
    ids: &[String],
    instances: &[Vec<f64>],
    feature_names: &[String],
    background: &[Vec<f64>],
    mode: ShapMode,
    n_samples: usize,
    seed: u64,
) -> Result<ExplanationBatch> {
    if ids.len() != instances.len() {
        return Err(Error::schema(format!(
            "{} ids for {} instances",
            ids.len(),
            instances.len()
        )));
    }
    let explanations = ids
        .iter()
        .zip(instances)
        .enumerate()
        .map(|(i, (id, row))| {
            shapley_values(
                model,
                id,
                row,
                background,
                mode,
                n_samples,
                sub_seed(seed, Domain::Explain, i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExplanationBatch {
        feature_names: feature_names.to_vec(),
        score_scale: model.score_scale().to_string(),
        explanations,
    })
}

/// Explain rows of a matrix with a trained classifier. The matrix must
/// already be in the classifier's (post-selection) schema.
pub fn explain_matrix(
    classifier: &TrainedClassifier,
    matrix: &FeatureMatrix,
    background: &[Vec<f64>],
    mode: ShapMode,
    n_samples: usize,
    seed: u64,
) -> Result<ExplanationBatch> {
    if matrix.schema != classifier.schema {
        return Err(Error::schema(format!(
            "matrix schema {:?} does not match the classifier's {:?}",
            matrix.schema, classifier.schema
        )));
    }
    explain_batch(
        classifier,
        &matrix.user_ids,
        &matrix.rows,
        &matrix.schema,
        background,
        mode,
        n_samples,
        seed,
    )
}

/// Seeded background draw: up to `n` distinct rows of the matrix.
pub fn sample_background(matrix: &FeatureMatrix, n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::seq::SliceRandom;

    let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
    let mut rng = stage_rng_from(sub_seed(seed, Domain::Explain, u64::MAX));
    order.shuffle(&mut rng);
    order.truncate(n.min(matrix.n_rows()));
    order.sort_unstable();
    order.iter().map(|&i| matrix.rows[i].clone()).collect()
}

/// One feature's global importance plus its beeswarm points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_abs_phi: f64,
    /// (feature value, phi) per explained instance.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSummary {
    pub n_explained: usize,
    pub score_scale: String,
    /// Descending by mean |phi|; ties alphabetical; at most k entries.
    pub ranking: Vec<FeatureImportance>,
}

pub const DEFAULT_TOP_K: usize = 20;

/// Rank features by mean absolute attribution over a batch.
pub fn summarize(batch: &ExplanationBatch, k: usize) -> Result<GlobalSummary> {
    if batch.explanations.is_empty() {
        return Err(Error::Mode("cannot summarize zero explanations".into()));
    }
    let m = batch.feature_names.len();
    let n = batch.explanations.len();
    let mut ranking: Vec<FeatureImportance> = (0..m)
        .map(|j| {
            let mean_abs = batch
                .explanations
                .iter()
                .map(|e| e.phi[j].abs())
                .sum::<f64>()
                / n as f64;
            FeatureImportance {
                feature: batch.feature_names[j].clone(),
                mean_abs_phi: mean_abs,
                points: batch
                    .explanations
                    .iter()
                    .map(|e| (e.values[j], e.phi[j]))
                    .collect(),
            }
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.mean_abs_phi
            .total_cmp(&a.mean_abs_phi)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    ranking.truncate(k);
    Ok(GlobalSummary {
        n_explained: n,
        score_scale: batch.score_scale.clone(),
        ranking,
    })
}

impl ExplanationBatch {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse(format!("explanation serialization failed: {e}")))
    }

    /// Long-format CSV: one row per (instance, feature) pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance_id,feature,value,phi\n");
        for e in &self.explanations {
            for (j, name) in self.feature_names.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    e.instance_id, name, e.values[j], e.phi[j]
                ));
            }
        }
        out
    }
}
