//! Per-feature standardization (zero mean, unit variance) fitted on
//! training rows only and replayed on anything scored later.

use serde::{Deserialize, Serialize};

/// Means and population standard deviations per feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features whose training column was constant; they standardize to 0.
    pub constant: Vec<bool>,
}

impl StandardizationStats {
    /// Fit column statistics over the given rows.
    pub fn fit(rows: &[Vec<f64>]) -> StandardizationStats {
        let n_cols = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; n_cols];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; n_cols];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
        let constant = std.iter().map(|&s| s == 0.0).collect();
        StandardizationStats { mean, std, constant }
    }

    /// Standardize one row in place.
    pub fn transform_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if self.constant[j] {
                0.0
            } else {
                (*v - self.mean[j]) / self.std[j]
            };
        }
    }

    /// Standardized copies of the given rows.
    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                let mut out = r.clone();
                self.transform_row(&mut out);
                out
            })
            .collect()
    }
}

/// Fit on `rows` and return (standardized rows, stats).
pub fn standardize(rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, StandardizationStats) {
    let stats = StandardizationStats::fit(rows);
    (stats.transform(rows), stats)
}
