//! Linear SVM trained by full-batch subgradient descent on the weighted
//! hinge loss with L2 regularization.
//!
//! Inputs are standardized internally and the statistics travel with the
//! model. The objective is
//!
//! ```text
//! (λ/2)·‖w‖² + (1/Σwᵢ)·Σ wᵢ·max(0, 1 − yᵢ·(w·xᵢ + b)),   λ = 1/C
//! ```
//!
//! with yᵢ ∈ {−1,+1} and wᵢ the class weight of row i. The step size
//! follows the 1/(λt) schedule. Tying λ to C alone (not to the row count)
//! makes the fit invariant to duplicating the dataset. The bias is updated
//! like a weight against a constant input, so it shares the schedule.
//! Training is deterministic: no randomness anywhere.

use serde::{Deserialize, Serialize};

use crate::model::ClassWeights;
use crate::standardize::{standardize, StandardizationStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Weights in standardized feature space.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub stats: StandardizationStats,
    pub c: f64,
    pub epochs: usize,
}

impl SvmModel {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[f64],
        class_weights: &ClassWeights,
        c: f64,
        epochs: usize,
    ) -> SvmModel {
        let (xs, stats) = standardize(rows);
        let m = stats.mean.len();
        let targets: Vec<f64> = labels.iter().map(|&y| if y == 1.0 { 1.0 } else { -1.0 }).collect();
        let sample_weights: Vec<f64> = labels.iter().map(|&y| class_weights.weight_for(y)).collect();
        let weight_sum: f64 = sample_weights.iter().sum();

        let lambda = 1.0 / c;
        let mut w = vec![0.0; m];
        let mut b = 0.0;
        for t in 1..=epochs {
            let eta = 1.0 / (lambda * t as f64);
            // Mean of wᵢ·yᵢ·xᵢ over margin-violating rows.
            let mut pull = vec![0.0; m];
            let mut pull_b = 0.0;
            for ((x, &y), &sw) in xs.iter().zip(&targets).zip(&sample_weights) {
                let margin = y * (dot(&w, x) + b);
                if margin < 1.0 {
                    let g = sw * y / weight_sum;
                    for (p, xi) in pull.iter_mut().zip(x) {
                        *p += g * xi;
                    }
                    pull_b += g;
                }
            }
            for (wi, p) in w.iter_mut().zip(&pull) {
                *wi -= eta * (lambda * *wi - p);
            }
            b -= eta * (lambda * b - pull_b);
        }
        SvmModel {
            weights: w,
            bias: b,
            stats,
            c,
            epochs,
        }
    }

    /// Signed margins; positive means bot.
    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter()
            .map(|row| {
                let mut acc = self.bias;
                for (j, &v) in row.iter().enumerate() {
                    let x = if self.stats.constant[j] {
                        0.0
                    } else {
                        (v - self.stats.mean[j]) / self.stats.std[j]
                    };
                    acc += self.weights[j] * x;
                }
                acc
            })
            .collect()
    }

    /// Weighted mean hinge loss on a labeled set (diagnostic).
    pub fn weighted_hinge(
        &self,
        rows: &[Vec<f64>],
        labels: &[f64],
        class_weights: &ClassWeights,
    ) -> f64 {
        let margins = self.score_rows(rows);
        let mut loss = 0.0;
        let mut weight_sum = 0.0;
        for (&m, &y) in margins.iter().zip(labels) {
            let target = if y == 1.0 { 1.0 } else { -1.0 };
            let sw = class_weights.weight_for(y);
            loss += sw * (1.0 - target * m).max(0.0);
            weight_sum += sw;
        }
        loss / weight_sum
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.push(vec![1.5 + i as f64 * 0.2, (i % 3) as f64]);
            labels.push(1.0);
            rows.push(vec![-1.5 - i as f64 * 0.2, (i % 4) as f64]);
            labels.push(0.0);
        }
        (rows, labels)
    }

    #[test]
    fn separable_data_is_fit_perfectly() {
        let (rows, labels) = separable();
        let cw = ClassWeights::balanced();
        let model = SvmModel::fit(&rows, &labels, &cw, 10.0, 500);
        let scores = model.score_rows(&rows);
        for (s, &y) in scores.iter().zip(&labels) {
            assert_eq!(*s > 0.0, y == 1.0, "margin {s} for label {y}");
        }
        let hinge = model.weighted_hinge(&rows, &labels, &cw);
        assert!(hinge < 0.05, "hinge loss {hinge}");
    }

    #[test]
    fn training_is_deterministic() {
        let (rows, labels) = separable();
        let cw = ClassWeights::balanced();
        let a = SvmModel::fit(&rows, &labels, &cw, 1.0, 200);
        let b = SvmModel::fit(&rows, &labels, &cw, 1.0, 200);
        assert_eq!(a, b);
    }

    #[test]
    fn duplicating_rows_changes_nothing() {
        let (rows, labels) = separable();
        let cw = ClassWeights::balanced();
        let base = SvmModel::fit(&rows, &labels, &cw, 2.0, 300);
        let mut rows2 = rows.clone();
        rows2.extend(rows.iter().cloned());
        let mut labels2 = labels.clone();
        labels2.extend(labels.iter().cloned());
        let doubled = SvmModel::fit(&rows2, &labels2, &cw, 2.0, 300);
        for (a, b) in base.weights.iter().zip(&doubled.weights) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!((base.bias - doubled.bias).abs() < 1e-9);
    }

    #[test]
    fn class_weights_shift_the_boundary() {
        // Overlapping 1-D classes; weighting bots 10× should flip some
        // borderline rows toward the bot side.
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 10.0]).collect();
        let labels: Vec<f64> = (0..40).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let even = SvmModel::fit(&rows, &labels, &ClassWeights { human: 1.0, bot: 1.0 }, 5.0, 300);
        let botward = SvmModel::fit(&rows, &labels, &ClassWeights { human: 1.0, bot: 10.0 }, 5.0, 300);
        let count_pos = |m: &SvmModel| m.score_rows(&rows).iter().filter(|s| **s > 0.0).count();
        assert!(count_pos(&botward) > count_pos(&even));
    }

    #[test]
    fn scores_standardize_with_stored_stats() {
        let (rows, labels) = separable();
        let model = SvmModel::fit(&rows, &labels, &ClassWeights::balanced(), 1.0, 100);
        // Standardizing manually and scoring raw must agree.
        let std_rows = model.stats.transform(&rows);
        let direct = model.score_rows(&rows);
        for (row, d) in std_rows.iter().zip(direct) {
            let manual = model.bias + dot(&model.weights, row);
            assert!((manual - d).abs() < 1e-12);
        }
    }

    #[test]
    fn model_round_trips_through_json() {
        let (rows, labels) = separable();
        let model = SvmModel::fit(&rows, &labels, &ClassWeights::balanced(), 1.0, 50);
        let json = serde_json::to_string(&model).unwrap();
        let back: SvmModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.score_rows(&rows), model.score_rows(&rows));
    }
}
