//! Profile → 49-feature vector extraction.

use chrono::{DateTime, Utc};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::features::text::{char_class_stats, char_len, jaccard_similarity, shannon_entropy};
use crate::features::{FeatureMatrix, FEATURE_COUNT};
use crate::profile::UserProfile;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Account age in days at collection time, floored at one second so every
/// *_by_age ratio stays defined even for just-created accounts.
pub fn account_age_days(created_at: DateTime<Utc>, collection_date: DateTime<Utc>) -> Result<f64> {
    if collection_date < created_at {
        return Err(Error::InvalidAge(format!(
            "collection date {collection_date} precedes account creation {created_at}"
        )));
    }
    let seconds = (collection_date - created_at).num_milliseconds() as f64 / 1000.0;
    Ok((seconds / SECONDS_PER_DAY).max(1.0 / SECONDS_PER_DAY))
}

/// Activity count normalized by account age in days.
pub fn ratio_by_age(value: f64, age_days: f64) -> f64 {
    debug_assert!(age_days > 0.0);
    value / age_days
}

/// Followers-per-following ratio; an account following nobody scores 0
/// rather than infinity so the feature domain stays bounded.
fn foll_friends(followers: f64, following: f64) -> f64 {
    if following == 0.0 {
        0.0
    } else {
        followers / following
    }
}

/// Compute the full feature vector for one profile, in canonical schema
/// order. Never emits NaN or infinity for a profile satisfying the type
/// invariants.
pub fn extract_features(
    profile: &UserProfile,
    collection_date: DateTime<Utc>,
) -> Result<Vec<f64>> {
    let age = account_age_days(profile.created_at, collection_date)?;
    let name = char_class_stats(&profile.name);
    let screen = char_class_stats(&profile.screen_name);
    let desc = char_class_stats(&profile.description);

    let listed = profile.listed_count as f64;
    let statuses = profile.statuses_count as f64;
    let followers = profile.followers_count as f64;
    let following = profile.following_count as f64;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };

    let values = vec![
        char_len(&profile.name),
        char_len(&profile.screen_name),
        char_len(&profile.description),
        listed,
        statuses,
        followers,
        following,
        name.upper_len,
        name.lower_len,
        name.digits_len,
        name.special_len,
        screen.upper_len,
        screen.lower_len,
        screen.digits_len,
        screen.special_len,
        desc.upper_len,
        desc.lower_len,
        desc.digits_len,
        desc.special_len,
        f64::from(profile.description_entities.urls),
        f64::from(profile.description_entities.mentions),
        f64::from(profile.description_entities.hashtags),
        f64::from(profile.total_urls),
        flag(profile.protected),
        flag(profile.verified),
        jaccard_similarity(&profile.screen_name, &profile.name),
        foll_friends(followers, following),
        age,
        ratio_by_age(listed, age),
        ratio_by_age(statuses, age),
        ratio_by_age(followers, age),
        ratio_by_age(following, age),
        name.upper_pcnt,
        name.lower_pcnt,
        name.digits_pcnt,
        name.special_pcnt,
        screen.upper_pcnt,
        screen.lower_pcnt,
        screen.digits_pcnt,
        screen.special_pcnt,
        desc.upper_pcnt,
        desc.lower_pcnt,
        desc.digits_pcnt,
        desc.special_pcnt,
        shannon_entropy(&profile.name),
        shannon_entropy(&profile.screen_name),
        flag(profile.has_location),
        flag(!profile.has_default_profile_image),
        flag(profile.has_profile_url),
    ];
    debug_assert_eq!(values.len(), FEATURE_COUNT);
    Ok(values)
}

/// Extract every profile of a dataset into a feature matrix. Rows are
/// ordered by `user_id` so the result is independent of input order.
pub fn build_matrix(dataset: &LabeledDataset) -> Result<FeatureMatrix> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "dataset {} has no rows",
            dataset.dataset_name
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&a, &b| {
        dataset.profiles[a]
            .user_id
            .cmp(&dataset.profiles[b].user_id)
    });

    let mut matrix = FeatureMatrix {
        rows: Vec::with_capacity(dataset.len()),
        labels: Vec::with_capacity(dataset.len()),
        user_ids: Vec::with_capacity(dataset.len()),
        schema: crate::features::feature_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        dataset_name: dataset.dataset_name.clone(),
    };
    for &i in &order {
        let profile = &dataset.profiles[i];
        let row = extract_features(profile, dataset.collection_date).map_err(|e| {
            Error::parse(format!("extracting user {}: {e}", profile.user_id))
        })?;
        matrix.rows.push(row);
        matrix.labels.push(dataset.labels[i].as_target());
        matrix.user_ids.push(profile.user_id.clone());
    }
    Ok(matrix)
}
