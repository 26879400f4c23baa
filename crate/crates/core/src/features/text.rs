//! Character-level text statistics shared by several profile features.

use std::collections::BTreeSet;

/// Character-class counts and percentages for one text field.
///
/// Classes are assigned by Unicode category with priority
/// uppercase > lowercase > digit; anything else (punctuation, spaces,
/// symbols, emoji) counts as special. Percentages are on a 0–100 scale;
/// empty text yields all zeros.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CharClassStats {
    pub upper_len: f64,
    pub lower_len: f64,
    pub digits_len: f64,
    pub special_len: f64,
    pub upper_pcnt: f64,
    pub lower_pcnt: f64,
    pub digits_pcnt: f64,
    pub special_pcnt: f64,
}

pub fn char_class_stats(text: &str) -> CharClassStats {
    let mut upper = 0u64;
    let mut lower = 0u64;
    let mut digits = 0u64;
    let mut special = 0u64;
    for c in text.chars() {
        if c.is_uppercase() {
            upper += 1;
        } else if c.is_lowercase() {
            lower += 1;
        } else if c.is_numeric() {
            digits += 1;
        } else {
            special += 1;
        }
    }
    let total = (upper + lower + digits + special) as f64;
    let pcnt = |n: u64| if total == 0.0 { 0.0 } else { 100.0 * n as f64 / total };
    CharClassStats {
        upper_len: upper as f64,
        lower_len: lower as f64,
        digits_len: digits as f64,
        special_len: special as f64,
        upper_pcnt: pcnt(upper),
        lower_pcnt: pcnt(lower),
        digits_pcnt: pcnt(digits),
        special_pcnt: pcnt(special),
    }
}

/// Text length in Unicode characters (not bytes).
pub fn char_len(text: &str) -> f64 {
    text.chars().count() as f64
}

/// Shannon entropy in bits over the character frequency distribution.
/// Empty text has zero entropy.
pub fn shannon_entropy(text: &str) -> f64 {
    let mut counts: std::collections::BTreeMap<char, u64> = std::collections::BTreeMap::new();
    let mut total = 0u64;
    for c in text.chars() {
        *counts.entry(c).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .values()
        .map(|&k| {
            let p = k as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Jaccard similarity |A ∩ B| / |A ∪ B| over the case-sensitive character
/// sets of the two strings. Two empty strings are identical, hence 1.0.
pub fn jaccard_similarity(a: &str, b: &str) -> f64 {
    let set_a: BTreeSet<char> = a.chars().collect();
    let set_b: BTreeSet<char> = b.chars().collect();
    let union = set_a.union(&set_b).count();
    if union == 0 {
        return 1.0;
    }
    let intersection = set_a.intersection(&set_b).count();
    intersection as f64 / union as f64
}
