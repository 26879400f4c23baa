//! Golden-fixture check: one hand-audited profile, committed in both raw API
//! shapes, whose 49 extracted features must match the oracle sheet in
//! `data/golden_features.csv`. Count and flag features must match exactly;
//! derived reals within 1e-9.

use samlp_core::features::{extract_features, feature_names};
use samlp_core::profile::{parse_user_v1, parse_user_v2, utc};

fn oracle_sheet() -> Vec<(String, f64)> {
    let text = include_str!("data/golden_features.csv");
    text.lines()
        .skip(1)
        .map(|line| {
            let (name, value) = line.split_once(',').expect("malformed oracle row");
            (name.to_string(), value.parse().expect("unparseable value"))
        })
        .collect()
}

#[test]
fn both_api_shapes_normalize_to_the_same_profile() {
    let v1 = parse_user_v1(include_str!("data/golden_profile_v1.json")).unwrap();
    let v2 = parse_user_v2(include_str!("data/golden_profile_v2.json")).unwrap();
    assert_eq!(v1, v2);

    assert_eq!(v1.user_id, "42");
    assert_eq!(v1.created_at, utc(2018, 10, 10, 20, 19, 24));
    assert_eq!(v1.description_entities.urls, 1);
    assert_eq!(v1.description_entities.mentions, 1);
    assert_eq!(v1.description_entities.hashtags, 2);
    assert_eq!(v1.total_urls, 2);
}

#[test]
fn extracted_features_match_the_oracle_sheet() {
    let profile = parse_user_v1(include_str!("data/golden_profile_v1.json")).unwrap();
    let collection = utc(2023, 10, 10, 20, 19, 24);
    let features = extract_features(&profile, collection).unwrap();

    let oracle = oracle_sheet();
    assert_eq!(oracle.len(), 49);
    assert_eq!(features.len(), 49);

    for (i, (name, expected)) in oracle.iter().enumerate() {
        assert_eq!(
            feature_names()[i],
            name,
            "oracle sheet out of order at row {i}"
        );
        let got = features[i];
        if expected.fract() == 0.0 {
            assert_eq!(got, *expected, "{name}: got {got}, expected {expected}");
        } else {
            assert!(
                (got - expected).abs() <= 1e-9,
                "{name}: got {got}, expected {expected}"
            );
        }
    }
}
