//! Confusion-matrix statistics, precision/recall/F1, precision-recall
//! curves, and mean squared error.
//!
//! The bot class (label 1) is the positive class everywhere. Zero
//! denominators follow the usual evaluation conventions: precision, recall
//! and F1 all collapse to 0 rather than erroring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome counts of binary predictions against truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Tally predictions where `score >= threshold` means "bot".
    pub fn from_scores(scores: &[f64], labels: &[f64], threshold: f64) -> ConfusionCounts {
        let mut c = ConfusionCounts::default();
        for (&s, &y) in scores.iter().zip(labels) {
            let predicted_bot = s >= threshold;
            let is_bot = y == 1.0;
            match (predicted_bot, is_bot) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / total as f64
    }
}

/// (precision, recall, F1) of the positive class.
pub fn precision_recall_f1(c: &ConfusionCounts) -> (f64, f64, f64) {
    let precision = if self_div_ok(c.tp + c.fp) {
        c.tp as f64 / (c.tp + c.fp) as f64
    } else {
        0.0
    };
    let recall = if self_div_ok(c.tp + c.fn_) {
        c.tp as f64 / (c.tp + c.fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

fn self_div_ok(denominator: u64) -> bool {
    denominator > 0
}

/// F1 of binary predictions taken at a score threshold.
pub fn f1_at_threshold(scores: &[f64], labels: &[f64], threshold: f64) -> f64 {
    precision_recall_f1(&ConfusionCounts::from_scores(scores, labels, threshold)).2
}

/// One cut point of a precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision-recall curve: one point per distinct score, thresholds in
/// strictly decreasing order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PRCurve {
    pub points: Vec<PRPoint>,
}

impl PRCurve {
    /// Export as CSV (`threshold,precision,recall,f1`) for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,precision,recall,f1\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.threshold, p.precision, p.recall, p.f1
            ));
        }
        out
    }
}

/// Compute the precision-recall curve over every distinct score cut.
/// Predictions at cut t count `score >= t` as bot.
pub fn pr_curve(scores: &[f64], labels: &[f64]) -> Result<PRCurve> {
    if scores.len() != labels.len() {
        return Err(Error::schema(format!(
            "scores ({}) and labels ({}) differ in length",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&y| y == 1.0).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::ClassAbsent(
            "precision-recall curve needs both classes".into(),
        ));
    }

    // Walk cuts from the highest score down, accumulating tp/fp as rows
    // cross the threshold; one curve point per distinct score value.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let total_pos = positives as u64;
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let cut = scores[order[i]];
        while i < order.len() && scores[order[i]] == cut {
            if labels[order[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let c = ConfusionCounts {
            tp,
            fp,
            tn: (labels.len() as u64 - total_pos) - fp,
            fn_: total_pos - tp,
        };
        let (precision, recall, f1) = precision_recall_f1(&c);
        points.push(PRPoint {
            threshold: cut,
            precision,
            recall,
            f1,
        });
    }
    Ok(PRCurve { points })
}

/// Mean squared error between targets and predictions.
pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::schema(format!(
            "mse length mismatch: {} vs {}",
            y.len(),
            yhat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::schema("mse of empty vectors"));
    }
    let sum: f64 = y
        .iter()
        .zip(yhat)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(sum / y.len() as f64)
}
