//! Random forest of weighted-Gini CART trees with bootstrap bagging and
//! per-node feature subsampling.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::tree::{BestSplit, ListArena, Node, NodeSlice, Tree};
use crate::model::{ClassWeights, PreparedDataset};
use crate::seeding::{stage_rng, Domain};

/// How many features each split may consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    pub fn parse(text: &str) -> crate::error::Result<MaxFeatures> {
        match text {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            "all" => Ok(MaxFeatures::All),
            other => Err(crate::error::Error::Tuning(format!(
                "unknown max_features {other:?} (expected sqrt, log2 or all)"
            ))),
        }
    }

    fn count(self, n_features: usize) -> usize {
        let picked = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (n_features as f64).log2().floor() as usize,
            MaxFeatures::All => n_features,
        };
        picked.clamp(1, n_features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    /// 0 grows trees until pure or too small.
    pub max_depth: usize,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: u64,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub params: RfParams,
}

/// Per-class weighted mass and raw (multiplicity) sample count of a node.
/// Class masses live in an array indexed by the label so accumulation is
/// branch-free — labels look random in feature order, and a data-dependent
/// branch there mispredicts half the time.
#[derive(Debug, Clone, Copy, Default)]
struct NodeStats {
    /// w[0] = human mass, w[1] = bot mass.
    w: [f64; 2],
    count: u64,
}

impl NodeStats {
    /// Total weight times Gini impurity: W·(1 − Σ (w_c/W)²). This form
    /// makes the split gain a plain difference of parent and children.
    fn weighted_gini(&self) -> f64 {
        let total = self.w[0] + self.w[1];
        if total <= 0.0 {
            return 0.0;
        }
        total - (self.w[0] * self.w[0] + self.w[1] * self.w[1]) / total
    }

    fn is_pure(&self) -> bool {
        self.w[0] == 0.0 || self.w[1] == 0.0
    }

    /// Majority vote; exact ties side with human.
    fn vote(&self) -> f64 {
        if self.w[1] > self.w[0] {
            1.0
        } else {
            0.0
        }
    }

    fn add(&mut self, row: BaggedRow) {
        self.w[usize::from(row.is_bot)] += row.weight;
        self.count += u64::from(row.mult);
    }

    fn minus(&self, left: NodeStats) -> NodeStats {
        NodeStats {
            w: [self.w[0] - left.w[0], self.w[1] - left.w[1]],
            count: self.count - left.count,
        }
    }
}

/// One row's bagging state, gathered once per tree so split scans touch a
/// single array instead of labels, weights and multiplicities separately.
#[derive(Debug, Clone, Copy, Default)]
struct BaggedRow {
    /// Bootstrap multiplicity × class weight.
    weight: f64,
    /// Bootstrap multiplicity (1s when bagging is off).
    mult: u32,
    is_bot: bool,
}

struct TreeBuilder<'a> {
    rows: &'a [BaggedRow],
    params: &'a RfParams,
    arena: &'a mut ListArena,
    n_cols: usize,
    mtry: usize,
    nodes: Vec<Node>,
    side: &'a mut [bool],
    /// Scratch for the per-node feature draw.
    pool: Vec<usize>,
}

impl TreeBuilder<'_> {
    fn grow(&mut self, node: NodeSlice, stats: NodeStats, depth: usize, rng: &mut impl Rng) -> usize {
        let depth_capped = self.params.max_depth > 0 && depth >= self.params.max_depth;
        let too_small = stats.count < 2 * self.params.min_samples_leaf;
        if depth_capped || too_small || stats.is_pure() {
            self.nodes.push(Node::Leaf { value: stats.vote() });
            return self.nodes.len() - 1;
        }

        // Seeded per-node feature subsample, scanned in ascending feature
        // order so the lowest-index tie-break is meaningful. When every
        // feature is in play the draw is the identity and the rng is not
        // consulted.
        self.pool.clear();
        self.pool.extend(0..self.n_cols);
        if self.mtry < self.n_cols {
            self.pool.shuffle(rng);
            self.pool.truncate(self.mtry);
            self.pool.sort_unstable();
        }

        let parent_gini = stats.weighted_gini();
        let mut best = BestSplit::none();
        for &f in &self.pool {
            debug_assert_eq!(self.arena.feature(f), f);
            let rows = self.arena.list(f, node);
            let mut left = NodeStats::default();
            for (pos, &(r, here)) in rows.iter().enumerate() {
                left.add(self.rows[r as usize]);
                // A cut is only legal between distinct adjacent values.
                if pos + 1 >= rows.len() {
                    break;
                }
                let next = rows[pos + 1].1;
                if next <= here {
                    continue;
                }
                let right = stats.minus(left);
                if left.count < self.params.min_samples_leaf
                    || right.count < self.params.min_samples_leaf
                {
                    continue;
                }
                let gain = parent_gini - left.weighted_gini() - right.weighted_gini();
                best.challenge(gain, f, 0.5 * (here + next));
            }
        }

        if !best.found() {
            self.nodes.push(Node::Leaf { value: stats.vote() });
            return self.nodes.len() - 1;
        }

        let mut left_stats = NodeStats::default();
        let mut n_left = 0;
        for &(r, v) in self.arena.list(best.feature, node) {
            let goes_left = v < best.threshold;
            self.side[r as usize] = goes_left;
            if goes_left {
                left_stats.add(self.rows[r as usize]);
                n_left += 1;
            }
        }
        let right_stats = stats.minus(left_stats);
        let (left_node, right_node) = self.arena.partition(node, self.side, n_left);

        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: f64::NAN }); // placeholder
        let left = self.grow(left_node, left_stats, depth + 1, rng);
        let right = self.grow(right_node, right_stats, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }
}

impl ForestModel {
    pub fn fit(
        data: &PreparedDataset,
        class_weights: &ClassWeights,
        params: &RfParams,
        seed: u64,
    ) -> ForestModel {
        use rayon::prelude::*;

        let n = data.n_rows();
        let m = data.n_cols();
        let all_features: Vec<usize> = (0..m).collect();
        // map_init reuses one scratch set per worker across all its trees;
        // outputs depend only on (seed, tree index), so any thread count
        // collects the same forest.
        let trees: Vec<Tree> = (0..params.n_trees)
            .into_par_iter()
            .map_init(
                || {
                    (
                        ListArena::new(m, n),
                        vec![false; n],
                        vec![BaggedRow::default(); n],
                        vec![0u32; n],
                    )
                },
                |(arena, side, bagged, multiplicity), t| {
                    let mut rng = stage_rng(seed, Domain::ModelTraining, t as u64);
                    multiplicity.fill(0);
                    if params.bootstrap {
                        for _ in 0..n {
                            multiplicity[rng.random_range(0..n)] += 1;
                        }
                    } else {
                        multiplicity.fill(1);
                    }
                    let mut keep = vec![false; n];
                    let mut stats = NodeStats::default();
                    for r in 0..n {
                        bagged[r] = BaggedRow {
                            weight: f64::from(multiplicity[r])
                                * class_weights.weight_for(data.labels[r]),
                            mult: multiplicity[r],
                            is_bot: data.labels[r] == 1.0,
                        };
                        keep[r] = multiplicity[r] > 0;
                        if keep[r] {
                            stats.add(bagged[r]);
                        }
                    }
                    let root = arena.fill_root(&data.sorted, &data.cols, &all_features, &keep);

                    let mut builder = TreeBuilder {
                        rows: bagged,
                        params,
                        arena,
                        n_cols: m,
                        mtry: params.max_features.count(m),
                        nodes: Vec::new(),
                        side,
                        pool: Vec::with_capacity(m),
                    };
                    builder.grow(root, stats, 0, &mut rng);
                    Tree {
                        nodes: builder.nodes,
                    }
                },
            )
            .collect();

        ForestModel {
            trees,
            params: *params,
        }
    }

    /// Fraction of trees voting bot, in [0, 1].
    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let n_trees = self.trees.len() as f64;
        rows.iter()
            .map(|row| {
                let votes: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                votes / n_trees
            })
            .collect()
    }
}
