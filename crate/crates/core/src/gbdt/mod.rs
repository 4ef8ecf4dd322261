//! Gradient-boosted decision trees for pair classification.
//!
//! Stagewise additive training with logistic loss for two classes and
//! softmax cross-entropy otherwise, one regression tree per class and stage,
//! fitted to negative gradients with second-order leaf weights.

mod tree;

pub use tree::{Tree, TreeNode};

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Distribution;
use crate::dataset::PairLabel;
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use tree::{grow_tree, presort, TreeParams};

/// Leaf-weight regularization for the Newton step.
const LAMBDA: f64 = 1.0;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 4,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidConfig(
                "learning_rate must lie in (0, 1]".into(),
            ));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::InvalidConfig("subsample must lie in (0, 1]".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig(
                "min_samples_leaf must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A trained boosted-tree classifier.
///
/// Binary problems keep one tree sequence scored through a sigmoid; problems
/// with more classes keep one sequence per class scored through a softmax.
/// Persisted as a self-describing JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    version: u32,
    classes: Vec<PairLabel>,
    feature_names: Vec<String>,
    base_scores: Vec<f64>,
    trees: Vec<Vec<Tree>>,
    feature_gains: Vec<f64>,
    stage_losses: Vec<f64>,
    config: TrainConfig,
}

/// Current on-disk model schema version.
pub const MODEL_VERSION: u32 = 1;

impl BoostedModel {
    pub fn classes(&self) -> &[PairLabel] {
        &self.classes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Mean training loss after initialization and after every stage.
    pub fn stage_losses(&self) -> &[f64] {
        &self.stage_losses
    }

    /// Raw additive scores per tree sequence (one for binary, K otherwise).
    pub fn raw_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.n_features()
            )));
        }
        Ok(self
            .base_scores
            .iter()
            .zip(&self.trees)
            .map(|(base, seq)| base + seq.iter().map(|t| t.score(row)).sum::<f64>())
            .collect())
    }

    /// Class probabilities for one feature row.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Distribution> {
        let raw = self.raw_scores(row)?;
        let probs = if self.classes.len() == 2 {
            let p = sigmoid(raw[0]);
            vec![1.0 - p, p]
        } else {
            softmax(&raw)
        };
        Distribution::from_weights(&probs)
    }

    /// Most probable class; exact ties go to the earlier class in the list.
    pub fn predict(&self, row: &[f64]) -> Result<PairLabel> {
        let proba = self.predict_proba(row)?;
        let mut best = 0;
        for (i, &p) in proba.probs().iter().enumerate() {
            if p > proba.probs()[best] {
                best = i;
            }
        }
        Ok(self.classes[best])
    }

    /// Total split gain per feature, normalized to sum to one (all zeros for
    /// a model that never split).
    pub fn feature_importance(&self) -> Vec<(String, f64)> {
        let total: f64 = self.feature_gains.iter().sum();
        self.feature_names
            .iter()
            .zip(&self.feature_gains)
            .map(|(name, gain)| {
                let share = if total > 0.0 { gain / total } else { 0.0 };
                (name.clone(), share)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: BoostedModel = serde_json::from_str(text)?;
        if model.version != MODEL_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model version {}",
                model.version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Analytic first and second derivatives of the configured loss.
///
/// Single-column scores use the logistic loss with class index 1 as the
/// positive class; wider score matrices use softmax cross-entropy. Returned
/// matrices have the same shape as `raw_scores`.
pub fn loss_gradients(
    labels: &[PairLabel],
    classes: &[PairLabel],
    raw_scores: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if labels.len() != raw_scores.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels vs {} score rows",
            labels.len(),
            raw_scores.len()
        )));
    }
    let width = raw_scores.first().map_or(0, |r| r.len());
    if width == 0 || raw_scores.iter().any(|r| r.len() != width) {
        return Err(Error::DimensionMismatch("ragged or empty score rows".into()));
    }
    let class_index = |label: &PairLabel| -> Result<usize> {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::InvalidLabels(format!("label {label} not in class list")))
    };

    let mut grads = Vec::with_capacity(labels.len());
    let mut hessians = Vec::with_capacity(labels.len());
    if width == 1 {
        if classes.len() != 2 {
            return Err(Error::DimensionMismatch(
                "single-column scores require exactly 2 classes".into(),
            ));
        }
        for (label, row) in labels.iter().zip(raw_scores) {
            let y = if class_index(label)? == 1 { 1.0 } else { 0.0 };
            let p = sigmoid(row[0]);
            grads.push(vec![p - y]);
            hessians.push(vec![p * (1.0 - p)]);
        }
    } else {
        if classes.len() != width {
            return Err(Error::DimensionMismatch(format!(
                "{} classes vs score width {width}",
                classes.len()
            )));
        }
        for (label, row) in labels.iter().zip(raw_scores) {
            let target = class_index(label)?;
            let probs = softmax(row);
            let mut g = Vec::with_capacity(width);
            let mut h = Vec::with_capacity(width);
            for (k, &p) in probs.iter().enumerate() {
                let y = if k == target { 1.0 } else { 0.0 };
                g.push(p - y);
                h.push(p * (1.0 - p));
            }
            grads.push(g);
            hessians.push(h);
        }
    }
    Ok((grads, hessians))
}

/// Trains a boosted model. Deterministic for a fixed config and data.
pub fn fit(
    features: &[Vec<f64>],
    labels: &[PairLabel],
    feature_names: &[String],
    cfg: &TrainConfig,
) -> Result<BoostedModel> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(Error::InvalidFeatures("empty feature matrix".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} labels",
            features.len(),
            labels.len()
        )));
    }
    let n_features = feature_names.len();
    if features.iter().any(|r| r.len() != n_features) {
        return Err(Error::DimensionMismatch(
            "feature row width does not match feature names".into(),
        ));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidFeatures("non-finite feature value".into()));
    }
    {
        let mut unique: Vec<&String> = feature_names.iter().collect();
        unique.sort();
        unique.dedup();
        if unique.len() != n_features {
            return Err(Error::InvalidFeatures("duplicate feature names".into()));
        }
    }
    // Break exact gain ties by feature name so grown trees do not depend on
    // column order.
    let tie_rank: Vec<usize> = {
        let mut order: Vec<usize> = (0..n_features).collect();
        order.sort_by(|&a, &b| feature_names[a].cmp(&feature_names[b]));
        let mut rank = vec![0usize; n_features];
        for (r, &f) in order.iter().enumerate() {
            rank[f] = r;
        }
        rank
    };

    let classes: Vec<PairLabel> = PairLabel::ALL
        .iter()
        .copied()
        .filter(|c| labels.contains(c))
        .collect();
    if classes.len() < 2 {
        return Err(Error::InvalidLabels(
            "training needs at least 2 classes".into(),
        ));
    }
    let class_idx: Vec<usize> = labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).expect("present"))
        .collect();

    let n = features.len();
    let columns: Vec<Vec<f64>> = (0..n_features)
        .map(|f| features.iter().map(|r| r[f]).collect())
        .collect();
    let sorted = presort(&columns);
    let params = TreeParams {
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
        lambda: LAMBDA,
        learning_rate: cfg.learning_rate,
    };

    let binary = classes.len() == 2;
    let tracks = if binary { 1 } else { classes.len() };
    let base_scores: Vec<f64> = if binary {
        let positives = class_idx.iter().filter(|&&c| c == 1).count();
        let negatives = n - positives;
        vec![(positives as f64 / negatives as f64).ln()]
    } else {
        (0..tracks)
            .map(|k| {
                let count = class_idx.iter().filter(|&&c| c == k).count();
                (count as f64 / n as f64).ln()
            })
            .collect()
    };

    // scores[track][row]
    let mut scores: Vec<Vec<f64>> = base_scores.iter().map(|&b| vec![b; n]).collect();
    let mut trees: Vec<Vec<Tree>> = vec![Vec::with_capacity(cfg.n_trees); tracks];
    let mut feature_gains = vec![0.0; n_features];
    let mut stage_losses = Vec::with_capacity(cfg.n_trees + 1);
    stage_losses.push(mean_loss(&scores, &class_idx, binary));

    for stage in 0..cfg.n_trees {
        let include = sample_mask(n, cfg.subsample, derive_seed(cfg.seed, stage as u64));

        if binary {
            let mut grad = vec![0.0; n];
            let mut hess = vec![0.0; n];
            for row in 0..n {
                let p = sigmoid(scores[0][row]);
                let y = if class_idx[row] == 1 { 1.0 } else { 0.0 };
                grad[row] = p - y;
                hess[row] = p * (1.0 - p);
            }
            let grown = grow_tree(&columns, &sorted, &tie_rank, &grad, &hess, &include, &params);
            for row in 0..n {
                scores[0][row] += grown.tree.score(&features[row]);
            }
            for (total, gain) in feature_gains.iter_mut().zip(&grown.feature_gains) {
                *total += gain;
            }
            trees[0].push(grown.tree);
        } else {
            // All class trees of a stage share the gradients of the stage's
            // starting probabilities.
            let probs: Vec<Vec<f64>> = (0..n)
                .map(|row| {
                    let raw: Vec<f64> = scores.iter().map(|track| track[row]).collect();
                    softmax(&raw)
                })
                .collect();
            let mut stage_trees = Vec::with_capacity(tracks);
            for k in 0..tracks {
                let mut grad = vec![0.0; n];
                let mut hess = vec![0.0; n];
                for row in 0..n {
                    let p = probs[row][k];
                    let y = if class_idx[row] == k { 1.0 } else { 0.0 };
                    grad[row] = p - y;
                    hess[row] = p * (1.0 - p);
                }
                let grown = grow_tree(&columns, &sorted, &tie_rank, &grad, &hess, &include, &params);
                for (total, gain) in feature_gains.iter_mut().zip(&grown.feature_gains) {
                    *total += gain;
                }
                stage_trees.push(grown.tree);
            }
            for (k, tree) in stage_trees.into_iter().enumerate() {
                for row in 0..n {
                    scores[k][row] += tree.score(&features[row]);
                }
                trees[k].push(tree);
            }
        }
        stage_losses.push(mean_loss(&scores, &class_idx, binary));
    }

    Ok(BoostedModel {
        version: MODEL_VERSION,
        classes,
        feature_names: feature_names.to_vec(),
        base_scores,
        trees,
        feature_gains,
        stage_losses,
        config: cfg.clone(),
    })
}

fn sample_mask(n: usize, subsample: f64, seed: u64) -> Vec<bool> {
    if subsample >= 1.0 {
        return vec![true; n];
    }
    let take = ((subsample * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut mask = vec![false; n];
    for &i in idx.iter().take(take) {
        mask[i] = true;
    }
    mask
}

fn mean_loss(scores: &[Vec<f64>], class_idx: &[usize], binary: bool) -> f64 {
    let n = class_idx.len();
    let mut total = 0.0;
    for row in 0..n {
        let p = if binary {
            let p1 = sigmoid(scores[0][row]);
            if class_idx[row] == 1 {
                p1
            } else {
                1.0 - p1
            }
        } else {
            let raw: Vec<f64> = scores.iter().map(|track| track[row]).collect();
            softmax(&raw)[class_idx[row]]
        };
        total -= p.max(1e-15).ln();
    }
    total / n as f64
}
