//! Decision-tree plumbing shared by the forest and boosting learners:
//! flat node storage, pre-sorted feature columns and order-preserving
//! partitions for fast exact greedy splits.

use serde::{Deserialize, Serialize};

/// One tree node. Rows with `value < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A decision tree as a flat node arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Tree {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Evaluate the tree on one feature row.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Whether `feature` appears in any split.
    pub fn uses_feature(&self, feature: usize) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::Split { feature: f, .. } if *f == feature))
    }
}

/// Row orderings per feature, ascending by value (ties by row index).
/// Built once per training set and shared by every tree grown on it.
#[derive(Debug, Clone)]
pub struct SortedColumns {
    pub per_feature: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn build(cols: &[Vec<f64>]) -> SortedColumns {
        let per_feature = cols
            .iter()
            .map(|col| {
                let mut order: Vec<u32> = (0..col.len() as u32).collect();
                order.sort_by(|&a, &b| {
                    col[a as usize]
                        .total_cmp(&col[b as usize])
                        .then(a.cmp(&b))
                });
                order
            })
            .collect();
        SortedColumns { per_feature }
    }
}

/// Per-tree scratch for node row lists. For every candidate feature it
/// holds the current node's rows in ascending feature order, with the
/// values carried alongside so split scans read sequentially instead of
/// gathering from the column arrays. Lists live as `n_lists` fixed-stride
/// segments of two flat buffers; splitting a node copies each list's range
/// into the other buffer (lefts first, order preserved), so growing an
/// entire tree allocates nothing past the arena itself, and the arena can
/// be reused across trees.
pub(crate) struct ListArena {
    ping: Vec<(u32, f64)>,
    pong: Vec<(u32, f64)>,
    /// Feature id of each segment, ascending.
    features: Vec<u32>,
    stride: usize,
}

/// One node's lists: the same `offset..offset + count` range of every
/// segment, in the buffer selected by depth parity.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeSlice {
    pub offset: usize,
    pub count: usize,
    in_pong: bool,
}

impl ListArena {
    /// `stride` must be at least the largest root row count ever filled.
    pub fn new(n_lists: usize, stride: usize) -> ListArena {
        ListArena {
            ping: vec![(0, 0.0); n_lists * stride],
            pong: vec![(0, 0.0); n_lists * stride],
            features: vec![0; n_lists],
            stride,
        }
    }

    pub fn n_lists(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, seg: usize) -> usize {
        self.features[seg] as usize
    }

    /// Segment holding `feature`, if it is a candidate.
    pub fn seg_of(&self, feature: usize) -> Option<usize> {
        self.features.binary_search(&(feature as u32)).ok()
    }

    /// Load the root lists — rows with `keep[row] == true` in each feature's
    /// sorted order — and return the root's view. `features` must be
    /// ascending and match the arena's segment count.
    pub fn fill_root(
        &mut self,
        sorted: &SortedColumns,
        cols: &[Vec<f64>],
        features: &[usize],
        keep: &[bool],
    ) -> NodeSlice {
        debug_assert_eq!(features.len(), self.features.len());
        let mut count = 0;
        for (seg, &f) in features.iter().enumerate() {
            self.features[seg] = f as u32;
            let col = &cols[f];
            let base = seg * self.stride;
            let mut at = base;
            for &r in &sorted.per_feature[f] {
                if keep[r as usize] {
                    self.ping[at] = (r, col[r as usize]);
                    at += 1;
                }
            }
            count = at - base;
        }
        NodeSlice { offset: 0, count, in_pong: false }
    }

    /// (row, value) pairs of one feature list of `node`.
    pub fn list(&self, seg: usize, node: NodeSlice) -> &[(u32, f64)] {
        let base = seg * self.stride + node.offset;
        let buf = if node.in_pong { &self.pong } else { &self.ping };
        &buf[base..base + node.count]
    }

    /// Split every list of `node` by the per-row side flags, writing lefts
    /// then rights into the other buffer. `n_left` must equal the number of
    /// the node's rows with `goes_left` true. Safe to interleave with
    /// growing the siblings: children occupy disjoint offset ranges, so a
    /// subtree never clobbers data its cousins still need.
    pub fn partition(
        &mut self,
        node: NodeSlice,
        goes_left: &[bool],
        n_left: usize,
    ) -> (NodeSlice, NodeSlice) {
        let (src, dst) = if node.in_pong {
            (&self.pong, &mut self.ping)
        } else {
            (&self.ping, &mut self.pong)
        };
        for seg in 0..self.features.len() {
            let base = seg * self.stride + node.offset;
            let mut li = base;
            let mut ri = base + n_left;
            for &(row, value) in &src[base..base + node.count] {
                if goes_left[row as usize] {
                    dst[li] = (row, value);
                    li += 1;
                } else {
                    dst[ri] = (row, value);
                    ri += 1;
                }
            }
            debug_assert_eq!(li, base + n_left);
        }
        let left = NodeSlice {
            offset: node.offset,
            count: n_left,
            in_pong: !node.in_pong,
        };
        let right = NodeSlice {
            offset: node.offset + n_left,
            count: node.count - n_left,
            in_pong: !node.in_pong,
        };
        (left, right)
    }
}

/// Candidate split chosen by a scan, with deterministic tie-breaking:
/// higher gain wins; equal gain prefers the lower feature index, then the
/// lower threshold.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BestSplit {
    pub gain: f64,
    pub feature: usize,
    pub threshold: f64,
}

impl BestSplit {
    pub fn none() -> BestSplit {
        BestSplit {
            gain: 0.0,
            feature: usize::MAX,
            threshold: f64::NAN,
        }
    }

    pub fn found(&self) -> bool {
        self.feature != usize::MAX
    }

    /// Replace the incumbent if the challenger wins under the tie rules.
    pub fn challenge(&mut self, gain: f64, feature: usize, threshold: f64) {
        let wins = if !self.found() {
            gain > 0.0
        } else {
            gain > self.gain
                || (gain == self.gain
                    && (feature < self.feature
                        || (feature == self.feature && threshold < self.threshold)))
        };
        if wins && gain > 0.0 {
            *self = BestSplit {
                gain,
                feature,
                threshold,
            };
        }
    }
}
