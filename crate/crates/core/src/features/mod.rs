//! The 49-feature profile representation: schema, extraction, matrix type
//! and CSV round-trip.

mod extract;
pub mod text;

pub use extract::{account_age_days, build_matrix, extract_features, ratio_by_age};
pub use text::{char_class_stats, char_len, jaccard_similarity, shannon_entropy};

use std::io::{Read, Write};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Canonical feature-order list, shipped as a versioned text file so model
/// artifacts can pin the exact schema they were trained against.
pub const FEATURE_SCHEMA_TEXT: &str = include_str!("../../schema/features-v1.txt");

/// Version tag of the embedded schema file.
pub const FEATURE_SCHEMA_VERSION: &str = "features-v1";

/// Number of profile features.
pub const FEATURE_COUNT: usize = 49;

/// Feature names in canonical order.
pub fn feature_names() -> &'static [&'static str] {
    static NAMES: OnceLock<Vec<&'static str>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let names: Vec<&'static str> = FEATURE_SCHEMA_TEXT
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        assert_eq!(names.len(), FEATURE_COUNT, "schema file out of sync");
        names
    })
}

/// Position of a feature name in the canonical order.
pub fn feature_index(name: &str) -> Option<usize> {
    feature_names().iter().position(|n| *n == name)
}

/// Rows of feature values with aligned labels and user ids.
///
/// Fresh matrices always have [`FEATURE_COUNT`] columns; selection produces
/// column-subset matrices whose `schema` names the surviving columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    /// 0 = human, 1 = bot.
    pub labels: Vec<f64>,
    pub user_ids: Vec<String>,
    pub schema: Vec<String>,
    pub dataset_name: String,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    /// One feature column as a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Matrix restricted to the given rows (indices may repeat or reorder).
    pub fn subset_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            user_ids: indices.iter().map(|&i| self.user_ids[i].clone()).collect(),
            schema: self.schema.clone(),
            dataset_name: self.dataset_name.clone(),
        }
    }

    /// Matrix restricted to the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| columns.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
            user_ids: self.user_ids.clone(),
            schema: columns.iter().map(|&j| self.schema[j].clone()).collect(),
            dataset_name: self.dataset_name.clone(),
        }
    }

    /// Count of (humans, bots).
    pub fn class_counts(&self) -> (usize, usize) {
        let bots = self.labels.iter().filter(|&&l| l == 1.0).count();
        (self.labels.len() - bots, bots)
    }

    /// Concatenate matrices sharing one schema into a single matrix.
    pub fn concat(parts: &[&FeatureMatrix], dataset_name: &str) -> Result<FeatureMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::EmptyDataset("nothing to concatenate".into()))?;
        let mut out = FeatureMatrix {
            rows: Vec::new(),
            labels: Vec::new(),
            user_ids: Vec::new(),
            schema: first.schema.clone(),
            dataset_name: dataset_name.to_string(),
        };
        for part in parts {
            if part.schema != out.schema {
                return Err(Error::schema(format!(
                    "schema mismatch: dataset {} does not share the common feature order",
                    part.dataset_name
                )));
            }
            out.rows.extend(part.rows.iter().cloned());
            out.labels.extend_from_slice(&part.labels);
            out.user_ids.extend(part.user_ids.iter().cloned());
        }
        Ok(out)
    }
}

/// Write a feature matrix as CSV: 49 feature columns, then `label`, then
/// `user_id`. Values use shortest round-trip decimal formatting.
pub fn write_features_csv<W: Write>(matrix: &FeatureMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = matrix.schema.iter().map(String::as_str).collect();
    header.push("label");
    header.push("user_id");
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..matrix.n_rows() {
        let mut record: Vec<String> = matrix.rows[i].iter().map(|v| v.to_string()).collect();
        record.push((matrix.labels[i] as i64).to_string());
        record.push(matrix.user_ids[i].clone());
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read back a `features.csv` produced by [`write_features_csv`].
pub fn read_features_csv<R: Read>(reader: R, dataset_name: &str) -> Result<FeatureMatrix> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(csv_err)?.clone();
    let n = header.len();
    if n < 3 || &header[n - 2] != "label" || &header[n - 1] != "user_id" {
        return Err(Error::schema(
            "features csv must end with label,user_id columns",
        ));
    }
    let schema: Vec<String> = header.iter().take(n - 2).map(str::to_string).collect();
    let mut matrix = FeatureMatrix {
        rows: Vec::new(),
        labels: Vec::new(),
        user_ids: Vec::new(),
        schema,
        dataset_name: dataset_name.to_string(),
    };
    for (line_no, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != n {
            return Err(Error::parse(format!(
                "features csv row {} has {} fields, expected {n}",
                line_no + 2,
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(n - 2);
        for cell in record.iter().take(n - 2) {
            let v: f64 = cell
                .parse()
                .map_err(|e| Error::parse(format!("row {}: {e}", line_no + 2)))?;
            row.push(v);
        }
        let label: f64 = record[n - 2]
            .parse()
            .map_err(|e| Error::parse(format!("row {} label: {e}", line_no + 2)))?;
        if label != 0.0 && label != 1.0 {
            return Err(Error::parse(format!(
                "row {}: label must be 0 or 1, got {label}",
                line_no + 2
            )));
        }
        matrix.rows.push(row);
        matrix.labels.push(label);
        matrix.user_ids.push(record[n - 1].to_string());
    }
    if matrix.rows.is_empty() {
        return Err(Error::EmptyDataset("features csv has no data rows".into()));
    }
    Ok(matrix)
}

fn csv_err(e: csv::Error) -> Error {
    Error::parse(e.to_string())
}
