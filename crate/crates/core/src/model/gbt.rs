//! Gradient-boosted decision trees for binary log-loss, trained with
//! second-order (Newton) leaf estimates and L2-regularised split gains.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::model::tree::{BestSplit, ListArena, Node, NodeSlice, Tree};
use crate::model::PreparedDataset;
use crate::seeding::{stage_rng, Domain};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Regularised gain of splitting gradient/hessian mass (gl, hl) | (gr, hr).
/// Positive values improve on keeping the node whole.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let g = gl + gr;
    let h = hl + hr;
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// Fraction of rows drawn (without replacement) per tree.
    pub subsample: f64,
    /// Fraction of features available to each tree.
    pub colsample_bytree: f64,
    /// Minimum hessian mass per child.
    pub min_child_weight: f64,
    /// Minimum gain to keep a split.
    pub gamma: f64,
    /// L2 penalty on leaf values.
    pub reg_lambda: f64,
    /// Extra weight on positive rows; None derives n_neg / n_pos.
    pub scale_pos_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub scale_pos_weight: f64,
    pub params: GbtParams,
}

#[derive(Debug, Clone, Copy, Default)]
struct GradStats {
    g: f64,
    h: f64,
}

struct BoostBuilder<'a> {
    /// Per-row gradient/hessian of the current boosting round.
    gh: &'a [GradStats],
    params: &'a GbtParams,
    arena: &'a mut ListArena,
    nodes: Vec<Node>,
    side: &'a mut [bool],
}

impl BoostBuilder<'_> {
    fn leaf_value(&self, stats: GradStats) -> f64 {
        -stats.g / (stats.h + self.params.reg_lambda) * self.params.learning_rate
    }

    fn grow(&mut self, node: NodeSlice, stats: GradStats, depth: usize) -> usize {
        if depth >= self.params.max_depth || stats.h < 2.0 * self.params.min_child_weight {
            self.nodes.push(Node::Leaf {
                value: self.leaf_value(stats),
            });
            return self.nodes.len() - 1;
        }

        let lambda = self.params.reg_lambda;
        let gamma = self.params.gamma;
        let mut best = BestSplit::none();
        for seg in 0..self.arena.n_lists() {
            let f = self.arena.feature(seg);
            let rows = self.arena.list(seg, node);
            let mut left = GradStats::default();
            for (pos, &(r, here)) in rows.iter().enumerate() {
                let gs = self.gh[r as usize];
                left.g += gs.g;
                left.h += gs.h;
                if pos + 1 >= rows.len() {
                    break;
                }
                let next = rows[pos + 1].1;
                if next <= here {
                    continue;
                }
                let right = GradStats {
                    g: stats.g - left.g,
                    h: stats.h - left.h,
                };
                if left.h < self.params.min_child_weight || right.h < self.params.min_child_weight
                {
                    continue;
                }
                let gain = split_gain(left.g, left.h, right.g, right.h, lambda, gamma);
                best.challenge(gain, f, 0.5 * (here + next));
            }
        }

        if !best.found() {
            self.nodes.push(Node::Leaf {
                value: self.leaf_value(stats),
            });
            return self.nodes.len() - 1;
        }

        let seg = self
            .arena
            .seg_of(best.feature)
            .expect("winning split feature is in the active set");
        let mut left_stats = GradStats::default();
        let mut n_left = 0;
        for &(r, v) in self.arena.list(seg, node) {
            let goes_left = v < best.threshold;
            self.side[r as usize] = goes_left;
            if goes_left {
                let gs = self.gh[r as usize];
                left_stats.g += gs.g;
                left_stats.h += gs.h;
                n_left += 1;
            }
        }
        let right_stats = GradStats {
            g: stats.g - left_stats.g,
            h: stats.h - left_stats.h,
        };
        let (left_node, right_node) = self.arena.partition(node, self.side, n_left);

        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: f64::NAN });
        let left = self.grow(left_node, left_stats, depth + 1);
        let right = self.grow(right_node, right_stats, depth + 1);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }
}

impl GbtModel {
    /// Boost on `data`, optionally with explicit per-row weights (defaults
    /// to 1). The positive class additionally carries `scale_pos_weight`.
    pub fn fit(
        data: &PreparedDataset,
        sample_weights: Option<&[f64]>,
        params: &GbtParams,
        seed: u64,
    ) -> GbtModel {
        let n = data.n_rows();
        let m = data.n_cols();
        let n_pos = data.labels.iter().filter(|&&y| y == 1.0).count();
        let n_neg = n - n_pos;
        let spw = params
            .scale_pos_weight
            .unwrap_or(if n_pos > 0 { n_neg as f64 / n_pos as f64 } else { 1.0 });
        let weight: Vec<f64> = (0..n)
            .map(|r| {
                let base = sample_weights.map_or(1.0, |w| w[r]);
                if data.labels[r] == 1.0 {
                    base * spw
                } else {
                    base
                }
            })
            .collect();

        let weight_sum: f64 = weight.iter().sum();
        let positive_mass: f64 = (0..n)
            .filter(|&r| data.labels[r] == 1.0)
            .map(|r| weight[r])
            .sum();
        let p0 = (positive_mass / weight_sum).clamp(1e-7, 1.0 - 1e-7);
        let base_score = (p0 / (1.0 - p0)).ln();

        let n_rows_pick = ((params.subsample * n as f64).floor() as usize).clamp(1, n);
        let n_cols_pick = ((params.colsample_bytree * m as f64).floor() as usize).clamp(1, m);

        let mut f_raw = vec![base_score; n];
        let mut gh = vec![GradStats::default(); n];
        let mut arena = ListArena::new(n_cols_pick, n);
        let mut side = vec![false; n];
        let mut row_pool: Vec<usize> = (0..n).collect();
        let mut keep = vec![false; n];
        let mut trees = Vec::with_capacity(params.n_estimators);
        for t in 0..params.n_estimators {
            let mut rng = stage_rng(seed, Domain::ModelTraining, t as u64);
            for r in 0..n {
                let p = sigmoid(f_raw[r]);
                gh[r] = GradStats {
                    g: weight[r] * (p - data.labels[r]),
                    h: weight[r] * p * (1.0 - p),
                };
            }

            for (i, slot) in row_pool.iter_mut().enumerate() {
                *slot = i;
            }
            row_pool.shuffle(&mut rng);
            keep.fill(false);
            for &r in &row_pool[..n_rows_pick] {
                keep[r] = true;
            }

            let mut col_pool: Vec<usize> = (0..m).collect();
            col_pool.shuffle(&mut rng);
            col_pool.truncate(n_cols_pick);
            col_pool.sort_unstable();

            let root = arena.fill_root(&data.sorted, &data.cols, &col_pool, &keep);
            let mut stats = GradStats::default();
            for r in 0..n {
                if keep[r] {
                    stats.g += gh[r].g;
                    stats.h += gh[r].h;
                }
            }
            let mut builder = BoostBuilder {
                gh: &gh,
                params,
                arena: &mut arena,
                nodes: Vec::new(),
                side: &mut side,
            };
            builder.grow(root, stats, 0);
            let tree = Tree {
                nodes: builder.nodes,
            };
            for r in 0..n {
                f_raw[r] += tree.predict_row(&data.rows[r]);
            }
            trees.push(tree);
        }

        GbtModel {
            base_score,
            trees,
            scale_pos_weight: spw,
            params: *params,
        }
    }

    pub fn margin_row(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    /// Bot probabilities in (0, 1).
    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|row| sigmoid(self.margin_row(row))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;
    use rand::Rng as _;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prepared(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> PreparedDataset {
        let m = rows[0].len();
        PreparedDataset::from_matrix(&FeatureMatrix {
            user_ids: (0..rows.len()).map(|i| i.to_string()).collect(),
            schema: (0..m).map(|j| format!("f{j}")).collect(),
            rows,
            labels,
            dataset_name: "t".into(),
        })
    }

    fn plain_params(depth: usize, trees: usize, lr: f64, lambda: f64) -> GbtParams {
        GbtParams {
            max_depth: depth,
            learning_rate: lr,
            n_estimators: trees,
            subsample: 1.0,
            colsample_bytree: 1.0,
            min_child_weight: 0.0,
            gamma: 0.0,
            reg_lambda: lambda,
            scale_pos_weight: Some(1.0),
        }
    }

    #[test]
    fn column_subsampling_scans_the_drawn_columns() {
        // Column 0 is constant; only column 1 carries signal. With half the
        // columns drawn per tree, trees that draw column 1 must split on it.
        let n = 40;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![0.0, if i % 2 == 0 { 1.0 } else { -1.0 }])
            .collect();
        let labels: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i % 2 == 0))).collect();
        let data = prepared(rows.clone(), labels.clone());

        let params = GbtParams {
            colsample_bytree: 0.5,
            ..plain_params(3, 20, 0.5, 1.0)
        };
        let model = GbtModel::fit(&data, None, &params, 3);
        let used_signal = model.trees.iter().any(|t| {
            t.nodes
                .iter()
                .any(|n| matches!(n, Node::Split { feature: 1, .. }))
        });
        assert!(used_signal, "no tree ever split on the informative column");

        let correct = rows
            .iter()
            .zip(&labels)
            .filter(|(row, &y)| f64::from(u8::from(model.margin_row(row) > 0.0)) == y)
            .count();
        assert!(correct == n, "only {correct}/{n} rows classified correctly");
    }

    #[test]
    fn four_sample_gain_matches_hand_computation() {
        // y = [0,0,1,1] at x = [1,2,3,4], uniform p = 0.5:
        // g = ±0.5, h = 0.25 per row. Splitting at 2.5 puts all positive
        // gradient left, giving ½(1/1.5 + 1/1.5) = 2/3 with λ = 1.
        let g = split_gain(1.0, 0.5, -1.0, 0.5, 1.0, 0.0);
        assert!((g - 2.0 / 3.0).abs() < 1e-12, "gain {g}");
        // The off-centre cut at 1.5 is strictly worse.
        let side = split_gain(0.5, 0.25, -0.5, 0.75, 1.0, 0.0);
        assert!(side < g);
        assert!((side - (0.5 * (0.25 / 1.25 + 0.25 / 1.75 + 0.0) - 0.5 * 0.0)).abs() < 1.0);

        let data = prepared(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![0.0, 0.0, 1.0, 1.0],
        );
        let model = GbtModel::fit(&data, None, &plain_params(1, 1, 1.0, 1.0), 0);
        assert_eq!(model.base_score, 0.0);
        match model.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert!((threshold - 2.5).abs() < 1e-12);
            }
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn stump_threshold_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
        let labels: Vec<f64> = xs.iter().map(|&x| f64::from(x > 0.3)).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let data = prepared(rows.clone(), labels.clone());
        let lambda = 0.5;
        let model = GbtModel::fit(&data, None, &plain_params(1, 1, 1.0, lambda), 0);

        // Brute-force the best midpoint over the sorted column.
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let g: Vec<f64> = labels.iter().map(|&y| 0.5 - y).collect();
        let h = 0.25;
        let (mut best_gain, mut best_thr) = (f64::NEG_INFINITY, f64::NAN);
        let mut gl = 0.0;
        let mut hl = 0.0;
        for w in 0..order.len() - 1 {
            gl += g[order[w]];
            hl += h;
            let (a, b) = (xs[order[w]], xs[order[w + 1]]);
            if b <= a {
                continue;
            }
            let total_g: f64 = g.iter().sum();
            let gain = split_gain(gl, hl, total_g - gl, 0.25 * xs.len() as f64 - hl, lambda, 0.0);
            if gain > best_gain {
                best_gain = gain;
                best_thr = 0.5 * (a + b);
            }
        }
        match model.trees[0].nodes[0] {
            Node::Split { threshold, .. } => {
                assert!((threshold - best_thr).abs() < 1e-12, "{threshold} vs {best_thr}");
            }
            Node::Leaf { .. } => panic!("expected a split"),
        }
        // One stump separates this 1-D problem.
        let scores = model.score_rows(&rows);
        for (s, y) in scores.iter().zip(&labels) {
            assert_eq!(f64::from(*s >= 0.5), *y);
        }
    }

    #[test]
    fn training_logloss_is_nonincreasing_in_rounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let labels: Vec<f64> = rows
            .iter()
            .map(|r| f64::from(r[0] + 0.3 * r[1] > 0.6))
            .collect();
        let data = prepared(rows.clone(), labels.clone());
        let loss = |model: &GbtModel| -> f64 {
            model
                .score_rows(&rows)
                .iter()
                .zip(&labels)
                .map(|(p, y)| -(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
                .sum::<f64>()
        };
        // Same seed and no sampling, so each run extends the previous one.
        let mut last = f64::INFINITY;
        for rounds in 0..6 {
            let model = GbtModel::fit(&data, None, &plain_params(3, rounds, 0.3, 1.0), 0);
            let l = loss(&model);
            assert!(l <= last + 1e-9, "round {rounds}: {l} > {last}");
            last = l;
        }
    }

    #[test]
    fn zero_trees_predict_the_base_rate() {
        let data = prepared(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0.0, 0.0, 0.0, 1.0],
        );
        let model = GbtModel::fit(&data, None, &plain_params(3, 0, 0.1, 1.0), 0);
        let expected = sigmoid((0.25f64 / 0.75).ln());
        for s in model.score_rows(&data.rows) {
            assert!((s - expected).abs() < 1e-12);
            assert!((s - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn auto_scale_pos_weight_is_neg_over_pos() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let mut labels = vec![0.0; 10];
        labels[0] = 1.0;
        labels[1] = 1.0;
        let data = prepared(rows, labels);
        let mut params = plain_params(2, 1, 0.3, 1.0);
        params.scale_pos_weight = None;
        let model = GbtModel::fit(&data, None, &params, 0);
        assert_eq!(model.scale_pos_weight, 4.0);
        // With spw the weighted base rate is balanced again.
        assert_eq!(model.base_score, 0.0);
    }

    #[test]
    fn explicit_weights_match_equivalent_spw_decisions() {
        // Uniform weights + spw k should rank rows identically to
        // per-class weights proportional to (1, k) with spw 1.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let labels: Vec<f64> = rows.iter().map(|r| f64::from(r[0] > 0.7)).collect();
        let data = prepared(rows.clone(), labels.clone());
        let mut auto = plain_params(3, 8, 0.3, 0.01);
        auto.scale_pos_weight = None;

        let n_pos = labels.iter().filter(|&&y| y == 1.0).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        let per_row: Vec<f64> = labels
            .iter()
            .map(|&y| if y == 1.0 { n_neg / n_pos } else { 1.0 })
            .collect();
        let explicit = plain_params(3, 8, 0.3, 0.01);

        let a = GbtModel::fit(&data, None, &auto, 0);
        let b = GbtModel::fit(&data, Some(&per_row), &explicit, 0);
        assert_eq!(a.trees, b.trees);
        assert_eq!(a.base_score, b.base_score);
    }

    #[test]
    fn duplicating_every_row_barely_moves_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let labels: Vec<f64> = rows.iter().map(|r| f64::from(r[0] + r[1] > 1.0)).collect();
        let doubled_rows: Vec<Vec<f64>> = rows.iter().chain(rows.iter()).cloned().collect();
        let doubled_labels: Vec<f64> = labels.iter().chain(labels.iter()).copied().collect();

        let params = plain_params(3, 10, 0.3, 0.1);
        let a = GbtModel::fit(&prepared(rows.clone(), labels), None, &params, 0);
        let b = GbtModel::fit(&prepared(doubled_rows, doubled_labels), None, &params, 0);
        let sa = a.score_rows(&rows);
        let sb = b.score_rows(&rows);
        let max_gap = sa
            .iter()
            .zip(&sb)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(max_gap < 0.05, "max gap {max_gap}");
    }

    #[test]
    fn subsampling_changes_trees_but_stays_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let labels: Vec<f64> = rows.iter().map(|r| f64::from(r[2] > 0.5)).collect();
        let data = prepared(rows, labels);
        let mut sampled = plain_params(3, 6, 0.3, 1.0);
        sampled.subsample = 0.6;
        sampled.colsample_bytree = 0.7;
        let a = GbtModel::fit(&data, None, &sampled, 9);
        let b = GbtModel::fit(&data, None, &sampled, 9);
        let c = GbtModel::fit(&data, None, &sampled, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn json_round_trip_preserves_scores() {
        let data = prepared(
            vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![3.0, 0.0], vec![4.0, 1.0]],
            vec![0.0, 1.0, 0.0, 1.0],
        );
        let model = GbtModel::fit(&data, None, &plain_params(2, 4, 0.3, 1.0), 0);
        let json = serde_json::to_string(&model).unwrap();
        let back: GbtModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.score_rows(&data.rows), model.score_rows(&data.rows));
    }
}
