//! File plumbing shared by the commands: dates, corpus directories,
//! feature CSVs and raw record files.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};

use samlp_core::artifact::ModelArtifact;
use samlp_core::dataset::{load_dataset, parse_label, RecordFormat};
use samlp_core::features::{extract_features, feature_names};
use samlp_core::{FeatureMatrix, LabeledDataset, Label};

use crate::failure::{Failure, OrInput};

/// Accepts RFC 3339 or a plain `YYYY-MM-DD` (taken as midnight UTC).
pub fn parse_date(text: &str) -> Result<DateTime<Utc>, Failure> {
    if let Ok(stamp) = DateTime::parse_from_rfc3339(text) {
        return Ok(stamp.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).unwrap().and_utc())
        .map_err(|_| {
            Failure::Input(format!(
                "cannot parse date {text:?}; expected RFC 3339 or YYYY-MM-DD"
            ))
        })
}

/// File stem, for naming datasets and outputs after their source file.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

/// Load a corpus directory: `<name>.jsonl` + `<name>.labels.csv` pairs plus
/// a shared `collection_date.txt`. Datasets come back sorted by name.
pub fn load_corpus(dir: &Path, format: RecordFormat) -> Result<Vec<LabeledDataset>, Failure> {
    let date_path = dir.join("collection_date.txt");
    let stamp = std::fs::read_to_string(&date_path).map_err(|e| {
        Failure::Input(format!("cannot read {}: {e}", date_path.display()))
    })?;
    let collection = parse_date(stamp.trim())?;

    let mut records_paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::Input(format!("cannot read corpus dir {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "jsonl"))
        .collect();
    records_paths.sort();
    if records_paths.is_empty() {
        return Err(Failure::Input(format!(
            "no .jsonl records files in {}",
            dir.display()
        )));
    }

    records_paths
        .iter()
        .map(|records| {
            let labels = records.with_extension("labels.csv");
            if !labels.exists() {
                return Err(Failure::Input(format!(
                    "labels file {} is missing",
                    labels.display()
                )));
            }
            let (dataset, _) = load_dataset(records, &labels, collection, format).or_input()?;
            Ok(dataset)
        })
        .collect()
}

/// Write a feature matrix as CSV: one column per feature, then `label`,
/// then `user_id`.
pub fn write_features_csv(matrix: &FeatureMatrix, path: &Path) -> Result<(), Failure> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Failure::Input(format!("cannot create {}: {e}", path.display())))?;
    let mut header: Vec<&str> = matrix.schema.iter().map(String::as_str).collect();
    header.push("label");
    header.push("user_id");
    let write = |r: Result<(), csv::Error>| {
        r.map_err(|e| Failure::Internal(format!("writing {}: {e}", path.display())))
    };
    write(writer.write_record(&header))?;
    for ((row, &label), user_id) in matrix.rows.iter().zip(&matrix.labels).zip(&matrix.user_ids) {
        let mut record: Vec<String> = row.iter().map(f64::to_string).collect();
        record.push(if label == 1.0 { "bot" } else { "human" }.to_string());
        record.push(user_id.clone());
        write(writer.write_record(&record))?;
    }
    writer
        .flush()
        .map_err(|e| Failure::Internal(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

/// Read a feature CSV back. The last two columns must be `label` and
/// `user_id`; everything before them is taken as the feature schema, so
/// files with custom feature sets round-trip too.
pub fn read_features_csv(path: &Path) -> Result<FeatureMatrix, Failure> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::Input(format!("cannot open {}: {e}", path.display())))?;
    let bad = |what: String| Failure::Input(format!("{}: {what}", path.display()));

    let header = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .clone();
    let n_cols = header.len();
    if n_cols < 3 || &header[n_cols - 2] != "label" || &header[n_cols - 1] != "user_id" {
        return Err(bad(
            "expected feature columns followed by `label` and `user_id`".to_string(),
        ));
    }
    let schema: Vec<String> = header.iter().take(n_cols - 2).map(str::to_string).collect();

    let mut matrix = FeatureMatrix {
        rows: Vec::new(),
        labels: Vec::new(),
        user_ids: Vec::new(),
        schema,
        dataset_name: stem(path),
    };
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != n_cols {
            return Err(bad(format!("row {} has {} columns", i + 1, record.len())));
        }
        let row: Vec<f64> = record
            .iter()
            .take(n_cols - 2)
            .map(|cell| {
                cell.parse::<f64>()
                    .map_err(|_| bad(format!("row {}: bad number {cell:?}", i + 1)))
            })
            .collect::<Result<_, _>>()?;
        let label = parse_label(&record[n_cols - 2])
            .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        matrix.rows.push(row);
        matrix.labels.push(label.as_target());
        matrix.user_ids.push(record[n_cols - 1].to_string());
    }
    if matrix.rows.is_empty() {
        return Err(bad("no data rows".to_string()));
    }
    Ok(matrix)
}

/// Extract features from an unlabeled records file, keeping file order.
/// The labels column is filled with `human` placeholders; scoring never
/// reads it.
pub fn records_matrix(
    path: &Path,
    format: RecordFormat,
    collection: DateTime<Utc>,
) -> Result<FeatureMatrix, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read records file {}: {e}", path.display())))?;
    let mut matrix = FeatureMatrix {
        rows: Vec::new(),
        labels: Vec::new(),
        user_ids: Vec::new(),
        schema: feature_names().iter().map(|s| s.to_string()).collect(),
        dataset_name: stem(path),
    };
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (profile, _) = format
            .parse_line(line)
            .map_err(|e| Failure::Input(format!("{} line {}: {e}", path.display(), line_no + 1)))?;
        let features = extract_features(&profile, collection).or_input()?;
        matrix.rows.push(features);
        matrix.labels.push(Label::Human.as_target());
        matrix.user_ids.push(profile.user_id);
    }
    if matrix.rows.is_empty() {
        return Err(Failure::Input(format!(
            "no records in {}",
            path.display()
        )));
    }
    Ok(matrix)
}

/// The collection date to extract prediction-time features with: an
/// explicit flag wins, otherwise the single date the artifact was trained
/// at. Ambiguity is an error rather than a guess.
pub fn resolve_collection_date(
    flag: Option<&str>,
    artifact: &ModelArtifact,
) -> Result<DateTime<Utc>, Failure> {
    if let Some(text) = flag {
        return parse_date(text);
    }
    let mut dates: Vec<&str> = artifact.metadata.collection_dates.iter().map(String::as_str).collect();
    dates.sort_unstable();
    dates.dedup();
    match dates[..] {
        [single] => parse_date(single),
        _ => Err(Failure::Input(
            "the artifact does not pin a single collection date; pass --collection-date".into(),
        )),
    }
}
