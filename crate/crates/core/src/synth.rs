//! Seeded synthetic corpus generator, the default benchmark input.
//!
//! The evaluation datasets the pipeline was designed around are not
//! redistributable, so the harness ships a stand-in: a family of profile
//! populations where bots skew toward young accounts with high posting and
//! follower-gain rates, and humans toward old accounts with modest rates.
//! Profiles are synthesized as real [`UserProfile`] records and run through
//! the ordinary feature extractor, so every generated matrix satisfies the
//! extractor's range invariants by construction.
//!
//! With `overlap = 0` the class ranges for account age stay disjoint, making
//! each dataset linearly separable on at least that feature; raising the knob
//! toward 1 pushes the class distributions into each other.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::features::{build_matrix, FeatureMatrix};
use crate::profile::{emit_v1_json, emit_v2_json, utc, DescriptionEntities, UserProfile};
use crate::seeding::{stage_rng, Domain};

/// Parameters for the synthetic corpus.
///
/// The per-class, per-dataset feature distributions are derived from the
/// seed: every dataset jitters the class signal ranges slightly, so the
/// corpus behaves like a family of related-but-distinct sources rather than
/// `n_datasets` copies of one distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_datasets: usize,
    pub rows_per_dataset: usize,
    /// Fraction of rows labeled bot, rounded to the nearest whole row.
    pub bot_ratio: f64,
    /// 0.0 keeps the bot/human account-age ranges disjoint; 1.0 pushes the
    /// class distributions into heavy overlap.
    pub overlap: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_datasets: 9,
            rows_per_dataset: 1000,
            bot_ratio: 0.33,
            overlap: 0.0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_datasets == 0 {
            return Err(Error::Tuning("n_datasets must be positive".into()));
        }
        if self.rows_per_dataset < 4 {
            return Err(Error::Tuning(
                "rows_per_dataset must be at least 4".into(),
            ));
        }
        if !(self.bot_ratio > 0.0 && self.bot_ratio < 1.0) {
            return Err(Error::Tuning(format!(
                "bot_ratio {} is outside (0, 1)",
                self.bot_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Tuning(format!(
                "overlap {} is outside [0, 1]",
                self.overlap
            )));
        }
        Ok(())
    }
}

/// Timestamp the synthetic profiles are "collected" at; account ages are
/// measured back from this instant.
pub fn synthetic_collection_date() -> DateTime<Utc> {
    utc(2024, 6, 1, 0, 0, 0)
}

// ---------------------------------------------------------------------------
// Class signal ranges
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        rng.random_range(self.lo..self.hi)
    }
}

struct ClassSignals {
    age_days: Range,
    statuses_rate: Range,
    followers_rate: Range,
    following_rate: Range,
    listed_rate: Range,
}

struct DatasetSignals {
    human: ClassSignals,
    bot: ClassSignals,
}

/// Draw the per-dataset signal ranges. The jitter factors are chosen so that
/// at `overlap = 0` the bot and human ranges for age, statuses-per-day and
/// followers-per-day never touch, even after count rounding.
fn dataset_signals(rng: &mut ChaCha8Rng, overlap: f64) -> DatasetSignals {
    let age_bot_scale = rng.random_range(0.9..1.1);
    let age_human_scale = rng.random_range(0.9..1.2);
    let statuses_scale = rng.random_range(0.9..1.1);
    let statuses_human_scale = rng.random_range(0.8..1.0);
    let followers_scale = rng.random_range(0.9..1.1);
    let followers_human_scale = rng.random_range(0.8..1.0);

    let bot = ClassSignals {
        age_days: Range {
            lo: 5.0,
            hi: 300.0 * age_bot_scale + overlap * 1500.0,
        },
        statuses_rate: Range {
            lo: (50.0 * statuses_scale - overlap * 35.0).max(5.0),
            hi: 300.0 * statuses_scale,
        },
        followers_rate: Range {
            lo: (20.0 * followers_scale - overlap * 15.0).max(1.0),
            hi: 100.0 * followers_scale,
        },
        following_rate: Range { lo: 1.0, hi: 30.0 },
        listed_rate: Range { lo: 0.0, hi: 0.02 },
    };
    let human = ClassSignals {
        age_days: Range {
            lo: (800.0 * age_human_scale - overlap * 600.0).max(30.0),
            hi: 4000.0,
        },
        statuses_rate: Range {
            lo: 0.1,
            hi: 30.0 * statuses_human_scale + overlap * 120.0,
        },
        followers_rate: Range {
            lo: 0.01,
            hi: 10.0 * followers_human_scale + overlap * 40.0,
        },
        following_rate: Range { lo: 0.05, hi: 2.0 },
        listed_rate: Range { lo: 0.0, hi: 0.05 },
    };
    DatasetSignals { human, bot }
}

// ---------------------------------------------------------------------------
// Profile synthesis
// ---------------------------------------------------------------------------

const WORDS: &[&str] = &[
    "amber", "birch", "cedar", "delta", "ember", "fjord", "garnet", "harbor", "iris", "juniper",
    "kelp", "lumen", "maple", "nectar", "onyx", "pearl", "quartz", "raven", "sable", "tundra",
    "umber", "violet", "willow", "zephyr",
];

fn word(rng: &mut ChaCha8Rng) -> &'static str {
    WORDS[rng.random_range(0..WORDS.len())]
}

fn digits(rng: &mut ChaCha8Rng, count: usize) -> String {
    (0..count)
        .map(|_| char::from(b'0' + rng.random_range(0..10u8)))
        .collect()
}

fn capitalize(w: &str) -> String {
    let mut chars = w.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn human_names(rng: &mut ChaCha8Rng) -> (String, String) {
    let first = word(rng);
    let second = word(rng);
    let mut name = format!("{} {}", capitalize(first), capitalize(second));
    if rng.random_bool(0.15) {
        let len = rng.random_range(1..=2);
        name.push_str(&digits(rng, len));
    }
    let mut screen = format!("{first}{second}");
    if rng.random_bool(0.4) {
        let len = rng.random_range(1..=2);
        screen.push_str(&digits(rng, len));
    }
    (name, screen.chars().take(15).collect())
}

fn bot_names(rng: &mut ChaCha8Rng) -> (String, String) {
    let stem = word(rng);
    let name_len = rng.random_range(2..=4);
    let name_tail = digits(rng, name_len);
    let name = if rng.random_bool(0.5) {
        format!("{}_{}", stem, name_tail)
    } else {
        format!("{}{}", capitalize(stem), name_tail)
    };
    let screen_len = rng.random_range(2..=4);
    let screen_tail = digits(rng, screen_len);
    let screen = if rng.random_bool(0.3) {
        format!("{stem}_bot{screen_tail}")
    } else {
        format!("{stem}{screen_tail}")
    };
    (name, screen.chars().take(15).collect())
}

fn synth_description(rng: &mut ChaCha8Rng, bot: bool) -> (String, DescriptionEntities) {
    let empty_chance = if bot { 0.1 } else { 0.2 };
    if rng.random_bool(empty_chance) {
        return (String::new(), DescriptionEntities::default());
    }
    let n_words = rng.random_range(2..=6);
    let mut text = (0..n_words).map(|_| word(rng)).collect::<Vec<_>>().join(" ");
    let entities = DescriptionEntities {
        urls: if bot {
            rng.random_range(0..=2)
        } else {
            rng.random_range(0..=1)
        },
        mentions: rng.random_range(0..=1),
        hashtags: if bot {
            rng.random_range(0..=3)
        } else {
            rng.random_range(0..=1)
        },
    };
    for _ in 0..entities.urls {
        let slug = digits(rng, 4);
        text.push_str(&format!(" https://t.ex/{slug}"));
    }
    for _ in 0..entities.mentions {
        text.push_str(&format!(" @{}", word(rng)));
    }
    for _ in 0..entities.hashtags {
        text.push_str(&format!(" #{}", word(rng)));
    }
    (text, entities)
}

fn synth_profile(
    rng: &mut ChaCha8Rng,
    user_id: String,
    label: Label,
    signals: &DatasetSignals,
    collection: DateTime<Utc>,
) -> UserProfile {
    let bot = label == Label::Bot;
    let class = if bot { &signals.bot } else { &signals.human };

    let age_days = class.age_days.sample(rng);
    // Whole seconds only: the v1.1 date format cannot carry anything finer,
    // and the corpus must survive an emit/parse round trip bit-exactly.
    let created_at = collection - Duration::seconds((age_days * 86_400.0).round() as i64);
    let statuses_count = (class.statuses_rate.sample(rng) * age_days).round() as u64;
    let followers_count = (class.followers_rate.sample(rng) * age_days).round() as u64;
    let following_count = (class.following_rate.sample(rng) * age_days).round() as u64;
    let listed_count = (class.listed_rate.sample(rng) * age_days).round() as u64;

    let (name, screen_name) = if bot {
        bot_names(rng)
    } else {
        human_names(rng)
    };
    let (description, description_entities) = synth_description(rng, bot);

    let protected = rng.random_bool(if bot { 0.05 } else { 0.03 });
    let verified = rng.random_bool(if bot { 0.01 } else { 0.08 });
    let has_location = rng.random_bool(if bot { 0.25 } else { 0.7 });
    let has_default_profile_image = rng.random_bool(if bot { 0.45 } else { 0.05 });
    let has_profile_url = rng.random_bool(if bot { 0.4 } else { 0.3 });

    UserProfile {
        user_id,
        name,
        screen_name,
        description,
        created_at,
        followers_count,
        following_count,
        statuses_count,
        listed_count,
        protected,
        verified,
        has_location,
        has_profile_url,
        has_default_profile_image,
        description_entities,
        total_urls: u32::from(has_profile_url) + description_entities.urls,
    }
}

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

/// Generate the corpus as in-memory labeled profile datasets.
///
/// Dataset `d` draws from an independent seeded stream, so adding datasets to
/// a spec never perturbs the ones before them.
pub fn generate_profile_datasets(spec: &SyntheticSpec) -> Vec<LabeledDataset> {
    spec.validate().expect("invalid synthetic spec");
    let collection = synthetic_collection_date();
    (0..spec.n_datasets)
        .map(|d| {
            let mut rng = stage_rng(spec.seed, Domain::Synthetic, d as u64);
            let signals = dataset_signals(&mut rng, spec.overlap);

            let n = spec.rows_per_dataset;
            let n_bots = ((spec.bot_ratio * n as f64).round() as usize).min(n);
            let mut labels = vec![Label::Bot; n_bots];
            labels.resize(n, Label::Human);
            labels.shuffle(&mut rng);

            let mut dataset = LabeledDataset {
                collection_date: collection,
                dataset_name: format!("synthetic-{:02}", d + 1),
                ..LabeledDataset::default()
            };
            for (i, label) in labels.into_iter().enumerate() {
                let user_id = format!("{:09}", (d as u64 + 1) * 10_000_000 + i as u64);
                let profile = synth_profile(&mut rng, user_id, label, &signals, collection);
                dataset.push(profile, label);
            }
            dataset
        })
        .collect()
}

/// Generate the corpus and run it through the feature extractor.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Vec<FeatureMatrix> {
    generate_profile_datasets(spec)
        .iter()
        .map(|ds| build_matrix(ds).expect("synthetic profiles always extract"))
        .collect()
}

/// Write the corpus to `dir` as one `<name>.jsonl` + `<name>.labels.csv`
/// pair per dataset plus a shared `collection_date.txt`, alternating raw v1.1
/// and v2 user objects between lines so loaders see both shapes. Returns the
/// records paths in dataset order.
pub fn write_corpus(dir: &Path, spec: &SyntheticSpec) -> Result<Vec<PathBuf>> {
    spec.validate()?;
    fs::create_dir_all(dir)?;
    let stamp = synthetic_collection_date().to_rfc3339_opts(SecondsFormat::Secs, true);
    fs::write(dir.join("collection_date.txt"), format!("{stamp}\n"))?;

    let mut records_paths = Vec::new();
    for dataset in generate_profile_datasets(spec) {
        let mut records = String::new();
        for (i, profile) in dataset.profiles.iter().enumerate() {
            let line = if i % 2 == 0 {
                emit_v1_json(profile)
            } else {
                emit_v2_json(profile)
            };
            records.push_str(&line);
            records.push('\n');
        }
        let mut labels = String::from("user_id,label\n");
        for (profile, label) in dataset.profiles.iter().zip(&dataset.labels) {
            labels.push_str(&format!("{},{}\n", profile.user_id, label.as_str()));
        }

        let records_path = dir.join(format!("{}.jsonl", dataset.dataset_name));
        fs::write(&records_path, records)?;
        fs::write(
            dir.join(format!("{}.labels.csv", dataset.dataset_name)),
            labels,
        )?;
        records_paths.push(records_path);
    }
    Ok(records_paths)
}

/// Scan for a feature whose per-class value ranges do not intersect; returns
/// the first such column. `None` when no single feature separates the classes
/// (or when a class is empty).
pub fn separable_on_any_feature(matrix: &FeatureMatrix) -> Option<usize> {
    let (humans, bots) = matrix.class_counts();
    if humans == 0 || bots == 0 {
        return None;
    }
    for col in 0..matrix.n_cols() {
        let mut human = (f64::INFINITY, f64::NEG_INFINITY);
        let mut bot = (f64::INFINITY, f64::NEG_INFINITY);
        for (row, &label) in matrix.rows.iter().zip(&matrix.labels) {
            let side = if label == 1.0 { &mut bot } else { &mut human };
            side.0 = side.0.min(row[col]);
            side.1 = side.1.max(row[col]);
        }
        if bot.1 < human.0 || human.1 < bot.0 {
            return Some(col);
        }
    }
    None
}
