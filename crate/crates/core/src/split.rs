//! Seeded stratified splitting: holdout, K-fold plans, and majority-class
//! under-sampling. All three are pure functions of (inputs, seed).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::stage_rng_from;

/// Train/test row partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// K disjoint validation folds covering every input row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Validation rows of one fold.
    pub fn validation(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Training rows of one fold: every row outside it, ascending.
    pub fn training(&self, fold: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != fold)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Group row positions by class. Classes are keyed 0 = human, 1 = bot.
fn class_members(indices: &[usize], labels: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut humans = Vec::new();
    let mut bots = Vec::new();
    for &i in indices {
        if labels[i] == 1.0 {
            bots.push(i);
        } else {
            humans.push(i);
        }
    }
    (humans, bots)
}

/// Training share of a class of size `n`: the remainder of `ratio·n` rounds
/// toward train, with a fuzz guard so exact products (0.7·30 = 21) are not
/// pushed up by floating-point noise. Both sides keep at least one row.
fn train_count(n: usize, ratio: f64) -> usize {
    let target = ratio * n as f64;
    let rounded = target.round();
    let count = if (target - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        target.ceil() as usize
    };
    count.clamp(1, n - 1)
}

/// Stratified holdout split: each class is shuffled by the seeded RNG and
/// cut at the ratio, so both parts keep the natural class mix.
pub fn stratified_holdout(labels: &[f64], ratio: f64, seed: u64) -> Result<SplitIndices> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::Stratification(format!(
            "holdout ratio must lie in (0,1), got {ratio}"
        )));
    }
    let all: Vec<usize> = (0..labels.len()).collect();
    let (humans, bots) = class_members(&all, labels);
    for (class, members) in [("human", &humans), ("bot", &bots)] {
        if members.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {class} has {} samples; a stratified holdout needs at least 2",
                members.len()
            )));
        }
    }

    let mut rng = stage_rng_from(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for members in [humans, bots] {
        let mut shuffled = members;
        shuffled.shuffle(&mut rng);
        let cut = train_count(shuffled.len(), ratio);
        train_idx.extend_from_slice(&shuffled[..cut]);
        test_idx.extend_from_slice(&shuffled[cut..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(SplitIndices {
        train_idx,
        test_idx,
        seed,
        ratio,
    })
}

/// Stratified K-fold plan over the given rows: per-class round-robin
/// assignment after a seeded shuffle, so per-class fold sizes differ by at
/// most one.
pub fn stratified_kfold(
    indices: &[usize],
    labels: &[f64],
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Stratification(format!("k must be ≥ 2, got {k}")));
    }
    let (humans, bots) = class_members(indices, labels);
    for (class, members) in [("human", &humans), ("bot", &bots)] {
        if members.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} samples, fewer than k = {k}",
                members.len()
            )));
        }
    }

    let mut rng = stage_rng_from(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for members in [humans, bots] {
        let mut shuffled = members;
        shuffled.shuffle(&mut rng);
        for (i, idx) in shuffled.into_iter().enumerate() {
            folds[i % k].push(idx);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan { folds, seed })
}

/// Balance classes by keeping the whole minority and a seeded uniform
/// sample (without replacement) of the majority of equal size. Output is
/// ascending; already-balanced input comes back unchanged.
pub fn undersample_majority(indices: &[usize], labels: &[f64], seed: u64) -> Result<Vec<usize>> {
    let (humans, bots) = class_members(indices, labels);
    if humans.is_empty() || bots.is_empty() {
        return Err(Error::ClassAbsent(
            "under-sampling needs both classes present".into(),
        ));
    }
    let (minority, majority) = if humans.len() <= bots.len() {
        (humans, bots)
    } else {
        (bots, humans)
    };
    let mut rng = stage_rng_from(seed);
    let mut pool = majority;
    pool.shuffle(&mut rng);
    pool.truncate(minority.len());

    let mut out = minority;
    out.extend_from_slice(&pool);
    out.sort_unstable();
    Ok(out)
}
