//! Regression tree with exact greedy splits on presorted feature columns.
//!
//! Trees are grown level-wise: one pass per feature over the globally sorted
//! row order collects the best candidate split for every node of the current
//! level, with second-order (Newton) leaf weights.

use serde::{Deserialize, Serialize};

/// One node of a flat-array tree. Internal nodes route on
/// `row[feature] < threshold`; leaves carry the additive score contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub value: f64,
    pub is_leaf: bool,
}

impl TreeNode {
    fn leaf(value: f64) -> Self {
        TreeNode {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
            is_leaf: true,
        }
    }
}

/// A single regression tree in the boosted ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    /// Additive score for one feature row.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            let node = &self.nodes[idx];
            if node.is_leaf {
                return node.value;
            }
            idx = if row[node.feature] < node.threshold {
                node.left
            } else {
                node.right
            };
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf).count()
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub lambda: f64,
    pub learning_rate: f64,
}

pub(crate) struct GrowResult {
    pub tree: Tree,
    /// Split gain accrued per feature while growing this tree.
    pub feature_gains: Vec<f64>,
}

struct BuildNode {
    grad: f64,
    hess: f64,
    count: usize,
    split: Option<Split>,
    left: usize,
    right: usize,
}

#[derive(Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Running scan state for one (feature, node) combination.
#[derive(Clone, Copy)]
struct ScanState {
    grad_left: f64,
    hess_left: f64,
    count_left: usize,
    prev_value: Option<f64>,
    best: Option<(f64, f64)>, // (gain, threshold)
}

impl ScanState {
    fn fresh() -> Self {
        ScanState {
            grad_left: 0.0,
            hess_left: 0.0,
            count_left: 0,
            prev_value: None,
            best: None,
        }
    }
}

fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, g: f64, h: f64, lambda: f64) -> f64 {
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda))
}

/// Grows one tree on the rows with `include[row]` set.
///
/// `columns` is the column-major feature matrix and `sorted[f]` the row
/// indices ascending by feature f. Splits with non-negative gain are
/// accepted, so a zero-gain split can still expose an interaction one level
/// deeper. Exact gain ties prefer the smaller threshold within a feature and
/// the lower `tie_rank` across features; ranking by feature name keeps the
/// grown tree invariant under column permutation.
pub(crate) fn grow_tree(
    columns: &[Vec<f64>],
    sorted: &[Vec<u32>],
    tie_rank: &[usize],
    grad: &[f64],
    hess: &[f64],
    include: &[bool],
    params: &TreeParams,
) -> GrowResult {
    let n_features = columns.len();
    let mut feature_gains = vec![0.0; n_features];

    let mut root = BuildNode {
        grad: 0.0,
        hess: 0.0,
        count: 0,
        split: None,
        left: 0,
        right: 0,
    };
    for (row, &inc) in include.iter().enumerate() {
        if inc {
            root.grad += grad[row];
            root.hess += hess[row];
            root.count += 1;
        }
    }
    let mut builds = vec![root];

    // node_of_row[row]: build-node index, or -1 when the row is out of sample
    // or already settled in a leaf.
    let mut node_of_row: Vec<i32> = include
        .iter()
        .map(|&inc| if inc { 0 } else { -1 })
        .collect();

    let mut active: Vec<usize> = vec![0];
    for _depth in 0..params.max_depth {
        if active.is_empty() {
            break;
        }
        // Position of each build node within the active level.
        let mut active_pos = vec![-1i32; builds.len()];
        for (pos, &node) in active.iter().enumerate() {
            active_pos[node] = pos as i32;
        }

        let mut best: Vec<Option<Split>> = vec![None; active.len()];
        for (feature, order) in sorted.iter().enumerate() {
            let mut states = vec![ScanState::fresh(); active.len()];
            for &row32 in order {
                let row = row32 as usize;
                let node = node_of_row[row];
                if node < 0 {
                    continue;
                }
                let pos = active_pos[node as usize];
                if pos < 0 {
                    continue;
                }
                let state = &mut states[pos as usize];
                let value = columns[feature][row];
                if let Some(prev) = state.prev_value {
                    if value > prev {
                        let total = &builds[node as usize];
                        let count_right = total.count - state.count_left;
                        if state.count_left >= params.min_samples_leaf
                            && count_right >= params.min_samples_leaf
                        {
                            let gain = split_gain(
                                state.grad_left,
                                state.hess_left,
                                total.grad - state.grad_left,
                                total.hess - state.hess_left,
                                total.grad,
                                total.hess,
                                params.lambda,
                            );
                            if gain >= 0.0
                                && state.best.map_or(true, |(bg, _)| gain > bg)
                            {
                                state.best = Some((gain, 0.5 * (prev + value)));
                            }
                        }
                    }
                }
                state.grad_left += grad[row];
                state.hess_left += hess[row];
                state.count_left += 1;
                state.prev_value = Some(value);
            }
            for (pos, state) in states.iter().enumerate() {
                if let Some((gain, threshold)) = state.best {
                    let wins = best[pos].map_or(true, |s| {
                        gain > s.gain
                            || (gain == s.gain && tie_rank[feature] < tie_rank[s.feature])
                    });
                    if wins {
                        best[pos] = Some(Split {
                            feature,
                            threshold,
                            gain,
                        });
                    }
                }
            }
        }

        // Apply the chosen splits and partition rows into fresh children.
        let mut next_active = Vec::new();
        for (pos, &node) in active.iter().enumerate() {
            if let Some(split) = best[pos] {
                let left = builds.len();
                let right = builds.len() + 1;
                builds.push(BuildNode {
                    grad: 0.0,
                    hess: 0.0,
                    count: 0,
                    split: None,
                    left: 0,
                    right: 0,
                });
                builds.push(BuildNode {
                    grad: 0.0,
                    hess: 0.0,
                    count: 0,
                    split: None,
                    left: 0,
                    right: 0,
                });
                let parent = &mut builds[node];
                parent.split = Some(split);
                parent.left = left;
                parent.right = right;
                feature_gains[split.feature] += split.gain;
                next_active.push(left);
                next_active.push(right);
            }
        }
        for row in 0..node_of_row.len() {
            let node = node_of_row[row];
            if node < 0 {
                continue;
            }
            let node = node as usize;
            match builds[node].split {
                Some(split) => {
                    let child = if columns[split.feature][row] < split.threshold {
                        builds[node].left
                    } else {
                        builds[node].right
                    };
                    builds[child].grad += grad[row];
                    builds[child].hess += hess[row];
                    builds[child].count += 1;
                    node_of_row[row] = child as i32;
                }
                None => node_of_row[row] = -1,
            }
        }
        active = next_active;
    }

    let nodes = builds
        .iter()
        .map(|b| match b.split {
            Some(split) => TreeNode {
                feature: split.feature,
                threshold: split.threshold,
                left: b.left,
                right: b.right,
                value: 0.0,
                is_leaf: false,
            },
            None => TreeNode::leaf(
                -b.grad / (b.hess + params.lambda) * params.learning_rate,
            ),
        })
        .collect();
    GrowResult {
        tree: Tree { nodes },
        feature_gains,
    }
}

/// Stable per-feature orderings of row indices, computed once per fit.
pub(crate) fn presort(columns: &[Vec<f64>]) -> Vec<Vec<u32>> {
    columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..col.len() as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
            idx
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n_features = rows[0].len();
        (0..n_features)
            .map(|f| rows.iter().map(|r| r[f]).collect())
            .collect()
    }

    #[test]
    fn single_split_separates_groups() {
        // Gradients favor separating small from large feature values.
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let grad: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { -1.0 }).collect();
        let hess = vec![0.25; 10];
        let columns = to_columns(&rows);
        let sorted = presort(&columns);
        let params = TreeParams {
            max_depth: 1,
            min_samples_leaf: 1,
            lambda: 1.0,
            learning_rate: 1.0,
        };
        let result = grow_tree(&columns, &sorted, &[0], &grad, &hess, &vec![true; 10], &params);
        assert_eq!(result.tree.n_leaves(), 2);
        assert!(result.feature_gains[0] > 0.0);
        // Left leaf pulls scores down where gradients are positive.
        assert!(result.tree.score(&[0.0]) < 0.0);
        assert!(result.tree.score(&[9.0]) > 0.0);
    }

    #[test]
    fn min_samples_leaf_blocks_unbalanced_splits() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        // Only row 0 differs, so the sole useful split would isolate it.
        let grad = vec![5.0, -1.0, -1.0, -1.0, -1.0, -1.0];
        let hess = vec![0.25; 6];
        let columns = to_columns(&rows);
        let sorted = presort(&columns);
        let params = TreeParams {
            max_depth: 3,
            min_samples_leaf: 3,
            lambda: 1.0,
            learning_rate: 1.0,
        };
        let result = grow_tree(&columns, &sorted, &[0], &grad, &hess, &vec![true; 6], &params);
        for node in result.tree.nodes() {
            if !node.is_leaf {
                // Any split must leave at least 3 rows on each side.
                let left = rows.iter().filter(|r| r[0] < node.threshold).count();
                assert!(left >= 3 && rows.len() - left >= 3);
            }
        }
    }

    #[test]
    fn constant_feature_yields_single_leaf() {
        let rows: Vec<Vec<f64>> = (0..8).map(|_| vec![1.0]).collect();
        let grad = vec![1.0; 8];
        let hess = vec![0.25; 8];
        let columns = to_columns(&rows);
        let sorted = presort(&columns);
        let params = TreeParams {
            max_depth: 4,
            min_samples_leaf: 1,
            lambda: 1.0,
            learning_rate: 0.5,
        };
        let result = grow_tree(&columns, &sorted, &[0], &grad, &hess, &vec![true; 8], &params);
        assert_eq!(result.tree.n_leaves(), 1);
        let expected = -8.0 / (8.0 * 0.25 + 1.0) * 0.5;
        assert!((result.tree.score(&[1.0]) - expected).abs() < 1e-12);
    }
}
