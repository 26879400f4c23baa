//! Labeled dataset assembly: JSONL user records joined with a labels CSV.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::profile::{
    parse_user_auto, parse_user_v1_with_stats, parse_user_v2_with_stats, MissingFields,
    UserProfile,
};

/// Which parser to run on each records line. `Auto` sniffs v1.1 vs v2 per
/// line, so a file may mix both; the fixed variants reject lines in the
/// other shape instead of quietly reinterpreting them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecordFormat {
    #[default]
    Auto,
    V1,
    V2,
}

impl RecordFormat {
    pub fn parse(text: &str) -> Result<RecordFormat> {
        match text {
            "auto" => Ok(RecordFormat::Auto),
            "v1" => Ok(RecordFormat::V1),
            "v2" => Ok(RecordFormat::V2),
            other => Err(Error::parse(format!(
                "unknown record format {other:?} (expected auto, v1 or v2)"
            ))),
        }
    }

    /// Parse one records line under this format.
    pub fn parse_line(self, line: &str) -> Result<(UserProfile, MissingFields)> {
        match self {
            RecordFormat::Auto => parse_user_auto(line),
            RecordFormat::V1 => parse_user_v1_with_stats(line),
            RecordFormat::V2 => parse_user_v2_with_stats(line),
        }
    }
}

/// Class label. Bot is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Label {
    Human,
    Bot,
}

impl Label {
    /// 0 for human, 1 for bot.
    pub fn as_target(self) -> f64 {
        match self {
            Label::Human => 0.0,
            Label::Bot => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Human => "human",
            Label::Bot => "bot",
        }
    }
}

/// Parse one label cell. Accepted spellings (case-insensitive): `human`,
/// `bot`, `0`, `1`. Anything else is a hard error; silently guessing a
/// class would poison training.
pub fn parse_label(raw: &str) -> Result<Label> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "human" | "0" => Ok(Label::Human),
        "bot" | "1" => Ok(Label::Bot),
        other => Err(Error::parse(format!("unrecognized label {other:?}"))),
    }
}

/// Profiles paired with labels, sorted by `user_id` so the row order never
/// depends on input file order or parse schedule.
#[derive(Debug, Clone, Default)]
pub struct LabeledDataset {
    pub profiles: Vec<UserProfile>,
    pub labels: Vec<Label>,
    /// When the records were captured; account age is measured against this.
    pub collection_date: DateTime<Utc>,
    pub dataset_name: String,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Count of (humans, bots).
    pub fn class_counts(&self) -> (usize, usize) {
        let bots = self.labels.iter().filter(|l| **l == Label::Bot).count();
        (self.labels.len() - bots, bots)
    }

    /// Labels as a 0/1 target vector.
    pub fn targets(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.as_target()).collect()
    }

    pub fn push(&mut self, profile: UserProfile, label: Label) {
        self.profiles.push(profile);
        self.labels.push(label);
    }

    /// Restore the canonical row order (ascending `user_id`).
    pub fn sort_by_user_id(&mut self) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.profiles[a].user_id.cmp(&self.profiles[b].user_id));
        self.profiles = order.iter().map(|&i| self.profiles[i].clone()).collect();
        self.labels = order.iter().map(|&i| self.labels[i]).collect();
    }
}

/// Ingest counters surfaced to the caller after a load.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub records_read: usize,
    pub records_kept: usize,
    pub records_unlabeled: usize,
    pub labels_total: usize,
    pub labels_unmatched: usize,
    pub missing_protected: usize,
    pub missing_verified: usize,
}

/// Parse a `user_id,label` CSV. A header row is recognized by its first
/// cell spelling `user_id` (case-insensitive). Duplicate user ids are an
/// error: two opinions about one account cannot both be right.
pub fn parse_labels_csv<R: Read>(reader: R) -> Result<BTreeMap<String, Label>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = BTreeMap::new();
    for (line_no, record) in csv_reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(format!("labels line {}: {e}", line_no + 1)))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let id = record
            .get(0)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::parse(format!("labels line {}: missing user_id", line_no + 1)))?;
        if line_no == 0 && id.eq_ignore_ascii_case("user_id") {
            continue;
        }
        let raw_label = record
            .get(1)
            .ok_or_else(|| Error::parse(format!("labels line {}: missing label", line_no + 1)))?;
        let label = parse_label(raw_label)
            .map_err(|e| Error::parse(format!("labels line {}: {e}", line_no + 1)))?;
        if out.insert(id.to_string(), label).is_some() {
            return Err(Error::DuplicateLabel(format!(
                "user {id} appears more than once in the labels file"
            )));
        }
    }
    Ok(out)
}

/// Read line-delimited JSON user records, auto-detecting the API version of
/// each line, and join them against the label map. Unlabeled records are
/// dropped (counted in stats); labels matching no record are counted too.
/// Rows come back sorted by `user_id`.
pub fn load_dataset_from<R: Read>(
    records: R,
    labels: &BTreeMap<String, Label>,
    collection_date: DateTime<Utc>,
    dataset_name: &str,
    format: RecordFormat,
) -> Result<(LabeledDataset, LoadStats)> {
    let mut stats = LoadStats {
        labels_total: labels.len(),
        ..LoadStats::default()
    };
    let mut dataset = LabeledDataset {
        collection_date,
        dataset_name: dataset_name.to_string(),
        ..LabeledDataset::default()
    };
    let mut matched = std::collections::BTreeSet::new();

    for (line_no, line) in BufReader::new(records).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.records_read += 1;
        let (profile, missing) = format
            .parse_line(&line)
            .map_err(|e| Error::parse(format!("records line {}: {e}", line_no + 1)))?;
        if profile.created_at > collection_date {
            return Err(Error::InvalidAge(format!(
                "user {} created_at {} is after the collection date {}",
                profile.user_id, profile.created_at, collection_date
            )));
        }
        stats.missing_protected += usize::from(missing.protected);
        stats.missing_verified += usize::from(missing.verified);
        match labels.get(&profile.user_id) {
            Some(&label) => {
                if !matched.insert(profile.user_id.clone()) {
                    return Err(Error::schema(format!(
                        "user {} appears more than once in the records file",
                        profile.user_id
                    )));
                }
                dataset.push(profile, label);
                stats.records_kept += 1;
            }
            None => stats.records_unlabeled += 1,
        }
    }
    stats.labels_unmatched = labels.len() - matched.len();

    if dataset.is_empty() {
        return Err(Error::EmptyDataset(
            "no records matched the label file".into(),
        ));
    }
    dataset.sort_by_user_id();
    Ok((dataset, stats))
}

/// Load a dataset from a JSONL records file and a labels CSV on disk. The
/// dataset is named after the records file stem.
pub fn load_dataset(
    records_path: &Path,
    labels_path: &Path,
    collection_date: DateTime<Utc>,
    format: RecordFormat,
) -> Result<(LabeledDataset, LoadStats)> {
    let name = records_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let labels = parse_labels_csv(std::fs::File::open(labels_path)?)?;
    load_dataset_from(
        std::fs::File::open(records_path)?,
        &labels,
        collection_date,
        &name,
        format,
    )
}
