//! Property tests for the text helpers, the profile emit/parse round trip,
//! and the range invariants every extracted feature vector must satisfy.

use chrono::{DateTime, Duration, Utc};
use proptest::prelude::*;

use samlp_core::features::{
    char_class_stats, char_len, extract_features, feature_names, jaccard_similarity,
    shannon_entropy,
};
use samlp_core::profile::{
    emit_v1_json, emit_v2_json, parse_user_v1, parse_user_v2, utc, DescriptionEntities,
    UserProfile,
};

fn collection_date() -> DateTime<Utc> {
    utc(2023, 1, 1, 0, 0, 0)
}

fn arb_profile() -> impl Strategy<Value = UserProfile> {
    (
        (
            "[0-9]{1,12}",
            any::<String>(),
            "[a-zA-Z0-9_]{1,15}",
            any::<String>(),
            0i64..250_000_000i64,
        ),
        (
            0u64..2_000_000,
            0u64..2_000_000,
            0u64..2_000_000,
            0u64..50_000,
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
        ),
        (0u32..4, 0u32..4, 0u32..4),
    )
        .prop_map(
            |(
                (user_id, name, screen_name, description, age_seconds),
                (
                    followers_count,
                    following_count,
                    statuses_count,
                    listed_count,
                    protected,
                    verified,
                    has_location,
                    has_profile_url,
                    has_default_profile_image,
                ),
                (urls, mentions, hashtags),
            )| {
                UserProfile {
                    user_id,
                    name,
                    screen_name,
                    description,
                    created_at: utc(2015, 1, 1, 0, 0, 0) + Duration::seconds(age_seconds),
                    followers_count,
                    following_count,
                    statuses_count,
                    listed_count,
                    protected,
                    verified,
                    has_location,
                    has_profile_url,
                    has_default_profile_image,
                    description_entities: DescriptionEntities {
                        urls,
                        mentions,
                        hashtags,
                    },
                    total_urls: u32::from(has_profile_url) + urls,
                }
            },
        )
}

fn index(name: &str) -> usize {
    feature_names().iter().position(|n| *n == name).unwrap()
}

proptest! {
    #[test]
    fn char_classes_partition_every_string(s in any::<String>()) {
        let stats = char_class_stats(&s);
        prop_assert_eq!(
            stats.upper_len + stats.lower_len + stats.digits_len + stats.special_len,
            char_len(&s)
        );
    }

    #[test]
    fn entropy_is_bounded_by_distinct_symbols(s in any::<String>()) {
        let entropy = shannon_entropy(&s);
        prop_assert!(entropy >= 0.0);
        let distinct = s.chars().collect::<std::collections::HashSet<_>>().len();
        prop_assert!(entropy <= (distinct.max(1) as f64).log2() + 1e-9);
    }

    #[test]
    fn jaccard_is_a_symmetric_unit_interval_score(a in any::<String>(), b in any::<String>()) {
        let ab = jaccard_similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, jaccard_similarity(&b, &a));
        prop_assert_eq!(jaccard_similarity(&a, &a), 1.0);
    }

    #[test]
    fn profiles_survive_both_raw_shapes(profile in arb_profile()) {
        prop_assert_eq!(&parse_user_v1(&emit_v1_json(&profile)).unwrap(), &profile);
        prop_assert_eq!(&parse_user_v2(&emit_v2_json(&profile)).unwrap(), &profile);
    }

    #[test]
    fn feature_vectors_respect_their_ranges(profile in arb_profile()) {
        let features = extract_features(&profile, collection_date()).unwrap();
        prop_assert_eq!(features.len(), feature_names().len());
        prop_assert!(features.iter().all(|v| v.is_finite()));

        // Character classes partition each text field.
        for field in ["name", "screen_name", "description"] {
            let len = features[index(&format!("{field}_len"))];
            let parts: f64 = ["upper", "lower", "digits", "special"]
                .iter()
                .map(|class| features[index(&format!("{field}_{class}_len"))])
                .sum();
            prop_assert_eq!(parts, len);

            let pcnt_sum: f64 = ["upper", "lower", "digits", "special"]
                .iter()
                .map(|class| features[index(&format!("{field}_{class}_pcnt"))])
                .sum();
            let expected = if len == 0.0 { 0.0 } else { 100.0 };
            prop_assert!((pcnt_sum - expected).abs() <= 1e-9, "{field} pcnts sum to {pcnt_sum}");
        }
        for (i, name) in feature_names().iter().enumerate() {
            if name.ends_with("_pcnt") {
                prop_assert!((0.0..=100.0).contains(&features[i]), "{name} = {}", features[i]);
            }
        }

        // Entropy bounds follow the field length.
        for field in ["name", "screen_name"] {
            let len = features[index(&format!("{field}_len"))];
            let entropy = features[index(&format!("{field}_entropy"))];
            prop_assert!(entropy >= 0.0);
            if len <= 1.0 {
                prop_assert_eq!(entropy, 0.0);
            } else {
                prop_assert!(entropy <= len.log2() + 1e-9);
            }
        }

        prop_assert!((0.0..=1.0).contains(&features[index("screen_name_sim")]));
        prop_assert!(features[index("age")] >= 1.0 / 86_400.0 - 1e-12);

        // Follower/following ratio degrades to 0 instead of dividing by zero.
        let foll_friends = features[index("foll_friends")];
        if profile.following_count == 0 {
            prop_assert_eq!(foll_friends, 0.0);
        } else {
            prop_assert_eq!(
                foll_friends,
                profile.followers_count as f64 / profile.following_count as f64
            );
        }

        for flag in ["protected", "verified", "has_location", "has_profile_image", "has_profile_url"] {
            let v = features[index(flag)];
            prop_assert!(v == 0.0 || v == 1.0, "{flag} = {v}");
        }
        prop_assert_eq!(
            features[index("has_profile_image")],
            f64::from(!profile.has_default_profile_image)
        );
        prop_assert_eq!(
            features[index("total_urls")],
            features[index("has_profile_url")] + features[index("description_urls")]
        );
    }
}
