//! Experiment orchestration: stratified splits, cross-validation, holdout
//! evaluation, and schema-stable JSON reports.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    generate_synthetic_anm, load_challenge, load_tuebingen, randomize_directions, PairDataset,
    PairLabel,
};
use crate::error::{Error, Result};
use crate::features::{
    extract_all, select_bins, write_features_csv, ExtractionConfig, FeatureRecord, FeatureVector,
};
use crate::gbdt::{fit, BoostedModel, TrainConfig};
use crate::seed::derive_seed;

const Z_95: f64 = 1.96;

// Stream tags for sub-seed derivation.
const STREAM_DATASET: u64 = 0x01;
const STREAM_RANDOMIZE: u64 = 0x02;
const STREAM_FOLDS: u64 = 0x03;
const STREAM_SPLIT: u64 = 0x04;
const STREAM_BINS: u64 = 0x05;
const STREAM_TRAIN_FINAL: u64 = 0x06;
const STREAM_TRAIN_FOLD: u64 = 0x100;

/// Partitions indices into `k` folds with per-class counts differing by at
/// most one across folds. Deterministic under the seed.
///
/// Classes with fewer than `k` members degrade to a best-effort proportional
/// assignment (with a warning) rather than failing.
pub fn stratified_kfold(labels: &[PairLabel], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidConfig("need at least 2 folds".into()));
    }
    if k > labels.len() {
        return Err(Error::InvalidConfig(format!(
            "{k} folds exceed dataset size {}",
            labels.len()
        )));
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (class_pos, class) in PairLabel::ALL.iter().enumerate() {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| *l == class)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            log::warn!(
                "class {class} has {} members for {k} folds; stratification is best-effort",
                members.len()
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, class_pos as u64));
        members.shuffle(&mut rng);
        // Round-robin deal, rotated per class so small classes do not pile
        // into the first folds.
        for (i, idx) in members.into_iter().enumerate() {
            folds[(i + class_pos) % k].push(idx);
        }
    }
    for fold in folds.iter_mut() {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Stratified train/test split with `round(fraction * n)` test items spread
/// across classes by largest remainder. Deterministic under the seed.
pub fn holdout_split(
    labels: &[PairLabel],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction {fraction} outside (0, 1)"
        )));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::InvalidConfig("need at least 2 items to split".into()));
    }
    let target_test = ((fraction * n as f64).round() as usize).clamp(1, n - 1);

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (class_pos, class) in PairLabel::ALL.iter().enumerate() {
        let members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| *l == class)
            .map(|(i, _)| i)
            .collect();
        if !members.is_empty() {
            groups.push((class_pos, members));
        }
    }

    // Base quota per class, then largest fractional remainders take the rest.
    let mut quotas: Vec<usize> = Vec::with_capacity(groups.len());
    let mut remainders: Vec<(f64, usize)> = Vec::new();
    let mut assigned = 0usize;
    for (slot, (_, members)) in groups.iter().enumerate() {
        let exact = fraction * members.len() as f64;
        let base = (exact.floor() as usize).min(members.len());
        quotas.push(base);
        assigned += base;
        remainders.push((exact - base as f64, slot));
    }
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut extra = target_test.saturating_sub(assigned);
    for &(_, slot) in remainders.iter().cycle().take(remainders.len() * 2) {
        if extra == 0 {
            break;
        }
        if quotas[slot] < groups[slot].1.len() {
            quotas[slot] += 1;
            extra -= 1;
        }
    }

    let mut test = Vec::with_capacity(target_test);
    let mut train = Vec::with_capacity(n - target_test);
    for (slot, (class_pos, members)) in groups.iter().enumerate() {
        let mut shuffled = members.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x50 + *class_pos as u64));
        shuffled.shuffle(&mut rng);
        test.extend_from_slice(&shuffled[..quotas[slot]]);
        train.extend_from_slice(&shuffled[quotas[slot]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    if train.is_empty() {
        return Err(Error::InvalidConfig("holdout split left no training data".into()));
    }
    Ok((train, test))
}

/// Binomial accuracy with the 95% normal-approximation half-width
/// `1.96 * sqrt(p(1-p)/n)`.
pub fn accuracy_ci(correct: usize, total: usize) -> Result<(f64, f64)> {
    if total == 0 {
        return Err(Error::InvalidConfig("empty evaluation set".into()));
    }
    if correct > total {
        return Err(Error::InvalidConfig(format!(
            "{correct} correct out of {total}"
        )));
    }
    let p = correct as f64 / total as f64;
    let half = Z_95 * (p * (1.0 - p) / total as f64).sqrt();
    Ok((p, half))
}

/// Binomial accuracy with half the width of the 95% Wilson score interval.
pub fn wilson_ci(correct: usize, total: usize) -> Result<(f64, f64)> {
    if total == 0 {
        return Err(Error::InvalidConfig("empty evaluation set".into()));
    }
    if correct > total {
        return Err(Error::InvalidConfig(format!(
            "{correct} correct out of {total}"
        )));
    }
    let n = total as f64;
    let p = correct as f64 / n;
    let z2 = Z_95 * Z_95;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    Ok((p, half))
}

/// Classification task: direction only, or all four relationships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "2class")]
    TwoClass,
    #[serde(rename = "4class")]
    FourClass,
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2class" => Ok(TaskKind::TwoClass),
            "4class" => Ok(TaskKind::FourClass),
            other => Err(Error::InvalidConfig(format!("unknown task {other:?}"))),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::TwoClass => "2class",
            TaskKind::FourClass => "4class",
        })
    }
}

/// Evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "cv")]
    Cv,
    #[serde(rename = "holdout")]
    Holdout,
    /// Cross-validation on the training portion, then a single evaluation on
    /// the held-out portion.
    #[serde(rename = "cv+holdout")]
    CvHoldout,
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cv" => Ok(Protocol::Cv),
            "holdout" => Ok(Protocol::Holdout),
            "cv+holdout" => Ok(Protocol::CvHoldout),
            other => Err(Error::InvalidConfig(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Confidence interval flavor for pooled accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CiMethod {
    Normal,
    Wilson,
}

impl CiMethod {
    fn interval(&self, correct: usize, total: usize) -> Result<(f64, f64)> {
        match self {
            CiMethod::Normal => accuracy_ci(correct, total),
            CiMethod::Wilson => wilson_ci(correct, total),
        }
    }
}

/// Which dataset an experiment runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetSpec {
    Synthetic {
        n_pairs: usize,
        n_samples: usize,
        #[serde(default = "default_two")]
        classes: usize,
    },
    Challenge {
        data_path: PathBuf,
        target_path: PathBuf,
    },
    Tuebingen {
        dir: PathBuf,
        #[serde(default = "default_true")]
        randomize: bool,
    },
}

fn default_two() -> usize {
    2
}

fn default_true() -> bool {
    true
}

/// A full experiment description, serializable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub task: TaskKind,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub extraction: ExtractionConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_protocol")]
    pub protocol: Protocol,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_holdout_fraction")]
    pub holdout_fraction: f64,
    #[serde(default = "default_ci_method")]
    pub ci_method: CiMethod,
    /// When present, the bin count is chosen by cross-validated search over
    /// these candidates before feature extraction (training data only).
    #[serde(default)]
    pub bin_candidates: Option<Vec<usize>>,
    /// Optional path for the extracted feature table.
    #[serde(default)]
    pub features_out: Option<PathBuf>,
    /// Optional path for a plot-ready CSV of per-fold accuracies.
    #[serde(default)]
    pub fold_csv_out: Option<PathBuf>,
}

fn default_schema_version() -> u32 {
    1
}

fn default_protocol() -> Protocol {
    Protocol::CvHoldout
}

fn default_cv_folds() -> usize {
    10
}

fn default_holdout_fraction() -> f64 {
    0.2
}

fn default_ci_method() -> CiMethod {
    CiMethod::Normal
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One cross-validation fold's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Accuracy within one true class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: PairLabel,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Pooled cross-validation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub folds: Vec<FoldResult>,
    /// Pooled accuracy: total correct over total predictions.
    pub mean_accuracy: f64,
    pub pooled_correct: usize,
    pub pooled_total: usize,
    pub ci_half_width: f64,
    /// Standard error of the per-fold accuracies, reported alongside the
    /// pooled binomial interval.
    pub per_fold_std_error: f64,
    pub per_class: Vec<ClassAccuracy>,
    pub confusion: Vec<Vec<usize>>,
}

/// Single-split evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub ci_half_width: f64,
    pub per_class: Vec<ClassAccuracy>,
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportanceEntry {
    pub feature: String,
    pub importance: f64,
}

/// Schema-stable experiment report. Every field is always present; sections
/// that do not apply to the chosen protocol are explicit nulls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub seed: u64,
    pub task: TaskKind,
    pub protocol: Protocol,
    pub ci_method: CiMethod,
    pub classes: Vec<PairLabel>,
    pub n_pairs: usize,
    pub skipped_pairs: usize,
    pub selected_bins: Option<usize>,
    pub extraction: ExtractionConfig,
    pub train: TrainConfig,
    pub cv: Option<CvSummary>,
    pub holdout: Option<SplitSummary>,
    pub feature_importance: Vec<FeatureImportanceEntry>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Human-readable rendering for terminals.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "task {} | protocol {:?} | seed {} | {} pairs | classes {}\n",
            self.task,
            self.protocol,
            self.seed,
            self.n_pairs,
            self.classes
                .iter()
                .map(|c| c.as_str())
                .collect::<Vec<_>>()
                .join("/")
        ));
        if let Some(bins) = self.selected_bins {
            out.push_str(&format!("selected bins: {bins}\n"));
        }
        if let Some(cv) = &self.cv {
            out.push_str(&format!(
                "cv: accuracy {:.4} ± {:.4} ({} folds, per-fold se {:.4})\n",
                cv.mean_accuracy,
                cv.ci_half_width,
                cv.folds.len(),
                cv.per_fold_std_error
            ));
            for fr in &cv.folds {
                out.push_str(&format!(
                    "  fold {:>2}: {:>4}/{:<4} = {:.4}\n",
                    fr.fold, fr.correct, fr.total, fr.accuracy
                ));
            }
            for ca in &cv.per_class {
                out.push_str(&format!(
                    "  class {:<11} {:>4}/{:<4} = {:.4}\n",
                    ca.class, ca.correct, ca.total, ca.accuracy
                ));
            }
        }
        if let Some(h) = &self.holdout {
            out.push_str(&format!(
                "holdout: accuracy {:.4} ± {:.4} ({}/{})\n",
                h.accuracy, h.ci_half_width, h.correct, h.total
            ));
        }
        out.push_str("top features:\n");
        let mut ranked = self.feature_importance.clone();
        ranked.sort_by(|a, b| b.importance.partial_cmp(&a.importance).unwrap());
        for entry in ranked.iter().take(10) {
            out.push_str(&format!("  {:<28} {:.4}\n", entry.feature, entry.importance));
        }
        out
    }
}

struct Evaluation {
    correct: usize,
    total: usize,
    per_class: Vec<ClassAccuracy>,
    confusion: Vec<Vec<usize>>,
}

fn evaluate_predictions(
    classes: &[PairLabel],
    truths: &[PairLabel],
    predictions: &[PairLabel],
) -> Evaluation {
    let class_pos = |l: &PairLabel| classes.iter().position(|c| c == l).expect("known class");
    let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
    let mut correct = 0usize;
    for (truth, pred) in truths.iter().zip(predictions) {
        confusion[class_pos(truth)][class_pos(pred)] += 1;
        if truth == pred {
            correct += 1;
        }
    }
    let per_class = classes
        .iter()
        .enumerate()
        .map(|(i, class)| {
            let total: usize = confusion[i].iter().sum();
            let right = confusion[i][i];
            ClassAccuracy {
                class: *class,
                correct: right,
                total,
                accuracy: if total > 0 {
                    right as f64 / total as f64
                } else {
                    0.0
                },
            }
        })
        .collect();
    Evaluation {
        correct,
        total: truths.len(),
        per_class,
        confusion,
    }
}

fn train_on(
    matrix: &[Vec<f64>],
    labels: &[PairLabel],
    idx: &[usize],
    names: &[String],
    cfg: &TrainConfig,
) -> Result<BoostedModel> {
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| matrix[i].clone()).collect();
    let subset: Vec<PairLabel> = idx.iter().map(|&i| labels[i]).collect();
    fit(&rows, &subset, names, cfg)
}

/// Runs one cross-validation pass over the given subset of indices.
fn run_cv(
    matrix: &[Vec<f64>],
    labels: &[PairLabel],
    subset: &[usize],
    classes: &[PairLabel],
    names: &[String],
    spec: &ExperimentSpec,
) -> Result<CvSummary> {
    let sub_labels: Vec<PairLabel> = subset.iter().map(|&i| labels[i]).collect();
    let folds = stratified_kfold(&sub_labels, spec.cv_folds, derive_seed(spec.seed, STREAM_FOLDS))?;

    let fold_outputs: Vec<Result<(Vec<PairLabel>, Vec<PairLabel>, usize, usize)>> = folds
        .par_iter()
        .enumerate()
        .map(|(fold_no, test_local)| {
            let test_set: HashSet<usize> = test_local.iter().copied().collect();
            let train_local: Vec<usize> = (0..subset.len()).filter(|i| !test_set.contains(i)).collect();
            // No test index may leak into its own fold's training set.
            assert!(train_local.iter().all(|i| !test_set.contains(i)));
            let train_global: Vec<usize> = train_local.iter().map(|&i| subset[i]).collect();
            let cfg = TrainConfig {
                seed: derive_seed(spec.seed, STREAM_TRAIN_FOLD + fold_no as u64),
                ..spec.train.clone()
            };
            let model = train_on(matrix, labels, &train_global, names, &cfg)?;
            let mut truths = Vec::with_capacity(test_local.len());
            let mut preds = Vec::with_capacity(test_local.len());
            let mut correct = 0usize;
            for &i in test_local {
                let global = subset[i];
                let pred = model.predict(&matrix[global])?;
                if pred == labels[global] {
                    correct += 1;
                }
                truths.push(labels[global]);
                preds.push(pred);
            }
            Ok((truths, preds, correct, test_local.len()))
        })
        .collect();

    let mut folds_out = Vec::with_capacity(fold_outputs.len());
    let mut all_truths = Vec::new();
    let mut all_preds = Vec::new();
    let mut pooled_correct = 0usize;
    let mut pooled_total = 0usize;
    for (fold_no, result) in fold_outputs.into_iter().enumerate() {
        let (truths, preds, correct, total) = result?;
        folds_out.push(FoldResult {
            fold: fold_no,
            correct,
            total,
            accuracy: correct as f64 / total as f64,
        });
        pooled_correct += correct;
        pooled_total += total;
        all_truths.extend(truths);
        all_preds.extend(preds);
    }

    let evaluation = evaluate_predictions(classes, &all_truths, &all_preds);
    let (mean_accuracy, ci_half_width) = spec.ci_method.interval(pooled_correct, pooled_total)?;
    let k = folds_out.len() as f64;
    let fold_mean = folds_out.iter().map(|f| f.accuracy).sum::<f64>() / k;
    let fold_var = folds_out
        .iter()
        .map(|f| (f.accuracy - fold_mean).powi(2))
        .sum::<f64>()
        / (k - 1.0).max(1.0);
    Ok(CvSummary {
        folds: folds_out,
        mean_accuracy,
        pooled_correct,
        pooled_total,
        ci_half_width,
        per_fold_std_error: (fold_var / k).sqrt(),
        per_class: evaluation.per_class,
        confusion: evaluation.confusion,
    })
}

fn run_split_eval(
    matrix: &[Vec<f64>],
    labels: &[PairLabel],
    model: &BoostedModel,
    test_idx: &[usize],
    classes: &[PairLabel],
    ci_method: CiMethod,
) -> Result<SplitSummary> {
    let mut truths = Vec::with_capacity(test_idx.len());
    let mut preds = Vec::with_capacity(test_idx.len());
    for &i in test_idx {
        truths.push(labels[i]);
        preds.push(model.predict(&matrix[i])?);
    }
    let evaluation = evaluate_predictions(classes, &truths, &preds);
    let (accuracy, ci_half_width) = ci_method.interval(evaluation.correct, evaluation.total)?;
    Ok(SplitSummary {
        correct: evaluation.correct,
        total: evaluation.total,
        accuracy,
        ci_half_width,
        per_class: evaluation.per_class,
        confusion: evaluation.confusion,
    })
}

fn resolve_dataset(spec: &ExperimentSpec) -> Result<PairDataset> {
    match &spec.dataset {
        DatasetSpec::Synthetic {
            n_pairs,
            n_samples,
            classes,
        } => generate_synthetic_anm(
            *n_pairs,
            *n_samples,
            *classes,
            derive_seed(spec.seed, STREAM_DATASET),
        ),
        DatasetSpec::Challenge {
            data_path,
            target_path,
        } => load_challenge(data_path, target_path),
        DatasetSpec::Tuebingen { dir, randomize } => {
            let ds = load_tuebingen(dir)?;
            if *randomize {
                randomize_directions(&ds, derive_seed(spec.seed, STREAM_RANDOMIZE))
            } else {
                Ok(ds)
            }
        }
    }
}

/// Runs the full experiment: dataset resolution, optional bin search,
/// feature extraction (once, cached in memory), protocol execution, and
/// report assembly.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<EvalReport> {
    crate::init_thread_pool();
    let full = resolve_dataset(spec)?;

    let dataset = match spec.task {
        TaskKind::TwoClass => full.filtered(|l| {
            matches!(l, PairLabel::Causal | PairLabel::Anticausal)
        }),
        TaskKind::FourClass => {
            let distinct: HashSet<PairLabel> = full.labels().iter().copied().collect();
            if distinct.len() <= 2 {
                return Err(Error::InvalidConfig(format!(
                    "4-class task on a {}-label dataset",
                    distinct.len()
                )));
            }
            full.clone()
        }
    };
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("no pairs left after task filter".into()));
    }
    let labels = dataset.labels().to_vec();
    let classes: Vec<PairLabel> = PairLabel::ALL
        .iter()
        .copied()
        .filter(|c| labels.contains(c))
        .collect();
    if classes.len() < 2 {
        return Err(Error::InvalidLabels(format!(
            "task {} needs at least 2 classes, found {}",
            spec.task,
            classes.len()
        )));
    }

    // The holdout split is fixed before any bin search so search never sees
    // held-out pairs.
    let split = match spec.protocol {
        Protocol::Cv => None,
        Protocol::Holdout | Protocol::CvHoldout => Some(holdout_split(
            &labels,
            spec.holdout_fraction,
            derive_seed(spec.seed, STREAM_SPLIT),
        )?),
    };

    let selected_bins = match &spec.bin_candidates {
        None => None,
        Some(candidates) => {
            let search_idx: Vec<usize> = match &split {
                Some((train, _)) => train.clone(),
                None => (0..dataset.len()).collect(),
            };
            let search_pairs: Vec<_> = search_idx
                .iter()
                .map(|&i| dataset.pairs()[i].clone())
                .collect();
            let search_labels: Vec<_> = search_idx.iter().map(|&i| labels[i]).collect();
            Some(select_bins(
                &search_pairs,
                &search_labels,
                candidates,
                spec.cv_folds.min(5),
                derive_seed(spec.seed, STREAM_BINS),
                &spec.extraction,
            )?)
        }
    };
    let extraction = match selected_bins {
        Some(bins) => spec.extraction.with_bins(bins),
        None => spec.extraction.clone(),
    };
    extraction.validate()?;

    let features = extract_all(dataset.pairs(), &extraction)?;
    let matrix: Vec<Vec<f64>> = features.iter().map(|f| f.values().to_vec()).collect();
    let names: Vec<String> = FeatureVector::NAMES.iter().map(|n| n.to_string()).collect();

    let final_cfg = TrainConfig {
        seed: derive_seed(spec.seed, STREAM_TRAIN_FINAL),
        ..spec.train.clone()
    };
    let all_idx: Vec<usize> = (0..dataset.len()).collect();

    let (cv, holdout, final_model) = match (spec.protocol, &split) {
        (Protocol::Cv, _) => {
            let cv = run_cv(&matrix, &labels, &all_idx, &classes, &names, spec)?;
            let model = train_on(&matrix, &labels, &all_idx, &names, &final_cfg)?;
            (Some(cv), None, model)
        }
        (Protocol::Holdout, Some((train_idx, test_idx))) => {
            let model = train_on(&matrix, &labels, train_idx, &names, &final_cfg)?;
            let summary = run_split_eval(
                &matrix,
                &labels,
                &model,
                test_idx,
                &classes,
                spec.ci_method,
            )?;
            (None, Some(summary), model)
        }
        (Protocol::CvHoldout, Some((train_idx, test_idx))) => {
            let cv = run_cv(&matrix, &labels, train_idx, &classes, &names, spec)?;
            let model = train_on(&matrix, &labels, train_idx, &names, &final_cfg)?;
            let summary = run_split_eval(
                &matrix,
                &labels,
                &model,
                test_idx,
                &classes,
                spec.ci_method,
            )?;
            (Some(cv), Some(summary), model)
        }
        _ => unreachable!("split presence follows protocol"),
    };

    if let Some(path) = &spec.features_out {
        let records: Vec<FeatureRecord> = dataset
            .pairs()
            .iter()
            .zip(&labels)
            .zip(&features)
            .map(|((p, l), f)| FeatureRecord {
                id: p.id().to_string(),
                label: *l,
                features: *f,
            })
            .collect();
        let file = fs::File::create(path)?;
        write_features_csv(file, &records)?;
    }
    if let Some(path) = &spec.fold_csv_out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["fold", "correct", "total", "accuracy"])?;
        if let Some(cv) = &cv {
            for fr in &cv.folds {
                w.write_record([
                    fr.fold.to_string(),
                    fr.correct.to_string(),
                    fr.total.to_string(),
                    format!("{}", fr.accuracy),
                ])?;
            }
        }
        w.flush()?;
    }

    let feature_importance = final_model
        .feature_importance()
        .into_iter()
        .map(|(feature, importance)| FeatureImportanceEntry {
            feature,
            importance,
        })
        .collect();

    Ok(EvalReport {
        schema_version: spec.schema_version,
        seed: spec.seed,
        task: spec.task,
        protocol: spec.protocol,
        ci_method: spec.ci_method,
        classes,
        n_pairs: dataset.len(),
        skipped_pairs: dataset.skipped(),
        selected_bins,
        extraction,
        train: spec.train.clone(),
        cv,
        holdout,
        feature_importance,
    })
}
