//! The 21-dimensional QIF feature vector for a variable pair.
//!
//! For each measure family (Bayes vulnerability, Bayes risk, Shannon) and
//! each comparison mode (additive, multiplicative) the vector carries the
//! direct leakage, the reverse leakage, and their difference; three capacity
//! features (direct, reverse, difference) complete the set.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    categorize, discretize_numeric, estimate_joint_categorical, estimate_joint_kde,
    joint_to_prior_channel, BandwidthRule, FlowDirection, JointDistribution,
};
use crate::dataset::PairLabel;
use crate::error::{Error, Result};
use crate::eval::stratified_kfold;
use crate::gbdt::{fit, TrainConfig};
use crate::seed::derive_seed;
use crate::measures::{bayes_capacity, leakage, LeakageMode, MeasureKind};

/// Whether a sample column is treated as continuous or as discrete categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Numerical,
    Categorical,
}

/// Two aligned sample columns with type tags and an identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct VariablePair {
    id: String,
    x: Vec<f64>,
    y: Vec<f64>,
    x_kind: VariableKind,
    y_kind: VariableKind,
}

impl VariablePair {
    pub fn new(
        id: impl Into<String>,
        x: Vec<f64>,
        y: Vec<f64>,
        x_kind: VariableKind,
        y_kind: VariableKind,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidSamples(format!(
                "column length mismatch: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidSamples(
                "pairs need at least 2 samples".into(),
            ));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples("non-finite value".into()));
        }
        Ok(Self {
            id: id.into(),
            x,
            y,
            x_kind,
            y_kind,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_kind(&self) -> VariableKind {
        self.x_kind
    }

    pub fn y_kind(&self) -> VariableKind {
        self.y_kind
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The same pair with the roles of x and y exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            id: self.id.clone(),
            x: self.y.clone(),
            y: self.x.clone(),
            x_kind: self.y_kind,
            y_kind: self.x_kind,
        }
    }
}

/// Knobs for turning a pair into a joint distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    /// Bin count for the equal-width discretizer (mixed pairs and fallback).
    pub n_bins: usize,
    /// Lattice resolution per axis for the Gaussian kernel estimator.
    pub kde_grid: usize,
    /// Kernel bandwidth selection.
    pub bandwidth: BandwidthRule,
    /// Substitute for multiplicative leakages with a zero denominator.
    pub degenerate_cap: f64,
    /// Route numeric/numeric pairs through the discretizer instead of the
    /// kernel estimator.
    pub force_binning: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            n_bins: 10,
            kde_grid: 32,
            bandwidth: BandwidthRule::Silverman,
            degenerate_cap: 1e6,
            force_binning: false,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 {
            return Err(Error::InvalidConfig("n_bins must be at least 2".into()));
        }
        if self.kde_grid < 4 {
            return Err(Error::InvalidConfig("kde_grid must be at least 4".into()));
        }
        if !(self.degenerate_cap.is_finite() && self.degenerate_cap > 0.0) {
            return Err(Error::InvalidConfig(
                "degenerate_cap must be finite and positive".into(),
            ));
        }
        Ok(())
    }

    pub fn with_bins(&self, n_bins: usize) -> Self {
        Self { n_bins, ..self.clone() }
    }
}

/// Number of features produced per pair.
pub const FEATURE_COUNT: usize = 21;

/// The fixed 21-entry feature vector.
///
/// Layout: six (measure, mode) blocks of direct / reverse / difference, in
/// the order Bayes vulnerability, Bayes risk, Shannon, additive before
/// multiplicative; then direct capacity, reverse capacity, and their
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    /// Column names, aligned with [`FeatureVector::values`].
    pub const NAMES: [&'static str; FEATURE_COUNT] = [
        "bayes_vuln_add_direct",
        "bayes_vuln_add_reverse",
        "bayes_vuln_add_diff",
        "bayes_vuln_mul_direct",
        "bayes_vuln_mul_reverse",
        "bayes_vuln_mul_diff",
        "bayes_risk_add_direct",
        "bayes_risk_add_reverse",
        "bayes_risk_add_diff",
        "bayes_risk_mul_direct",
        "bayes_risk_mul_reverse",
        "bayes_risk_mul_diff",
        "shannon_add_direct",
        "shannon_add_reverse",
        "shannon_add_diff",
        "shannon_mul_direct",
        "shannon_mul_reverse",
        "shannon_mul_diff",
        "capacity_direct",
        "capacity_reverse",
        "capacity_diff",
    ];

    pub fn from_values(values: [f64; FEATURE_COUNT]) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.values
    }

    /// Looks a feature up by its column name.
    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }
}

/// The three measure families in feature order.
const KINDS: [MeasureKind; 3] = [
    MeasureKind::BayesVulnerability,
    MeasureKind::BayesRisk,
    MeasureKind::ShannonUncertainty,
];
const MODES: [LeakageMode; 2] = [LeakageMode::Additive, LeakageMode::Multiplicative];

/// Computes the full feature vector for one pair.
///
/// Numeric/numeric pairs go through the kernel estimator (falling back to
/// binning when a column is constant); pairs with a categorical side go
/// through the discretizer and a contingency table.
pub fn extract_features(pair: &VariablePair, cfg: &ExtractionConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let joint = build_joint(pair, cfg)?;

    let mut per_direction = [[0.0; 7]; 2];
    for (d, dir) in [FlowDirection::Direct, FlowDirection::Reverse]
        .into_iter()
        .enumerate()
    {
        let (prior, ch) = joint_to_prior_channel(&joint, dir)?;
        let mut slot = 0;
        for kind in KINDS {
            for mode in MODES {
                let v = match leakage(kind, mode, &prior, &ch) {
                    Ok(v) => v,
                    Err(Error::DegenerateLeakage) => cfg.degenerate_cap,
                    Err(e) => return Err(e),
                };
                per_direction[d][slot] = v;
                slot += 1;
            }
        }
        per_direction[d][slot] = bayes_capacity(&ch);
    }

    let mut values = [0.0; FEATURE_COUNT];
    for block in 0..7 {
        let direct = per_direction[0][block];
        let reverse = per_direction[1][block];
        values[block * 3] = direct;
        values[block * 3 + 1] = reverse;
        values[block * 3 + 2] = direct - reverse;
    }
    for v in values.iter_mut() {
        if !v.is_finite() {
            *v = cfg.degenerate_cap;
        }
    }
    Ok(FeatureVector { values })
}

fn build_joint(pair: &VariablePair, cfg: &ExtractionConfig) -> Result<JointDistribution> {
    let numeric_pair =
        pair.x_kind == VariableKind::Numerical && pair.y_kind == VariableKind::Numerical;
    if numeric_pair && !cfg.force_binning {
        match estimate_joint_kde(&pair.x, &pair.y, cfg.kde_grid, cfg.bandwidth) {
            Ok(j) => return Ok(j),
            Err(Error::ConstantColumn) => {}
            Err(e) => return Err(e),
        }
    }
    let x_codes = column_codes(&pair.x, pair.x_kind, cfg.n_bins)?;
    let y_codes = column_codes(&pair.y, pair.y_kind, cfg.n_bins)?;
    estimate_joint_categorical(&x_codes, &y_codes)
}

fn column_codes(values: &[f64], kind: VariableKind, n_bins: usize) -> Result<Vec<usize>> {
    match kind {
        VariableKind::Numerical => discretize_numeric(values, n_bins),
        VariableKind::Categorical => Ok(categorize(values)?.0),
    }
}

/// Extracts features for every pair, in order, using the worker pool.
pub fn extract_all(pairs: &[VariablePair], cfg: &ExtractionConfig) -> Result<Vec<FeatureVector>> {
    crate::init_thread_pool();
    pairs
        .par_iter()
        .map(|p| {
            extract_features(p, cfg)
                .map_err(|e| Error::InvalidSamples(format!("pair {}: {e}", p.id())))
        })
        .collect()
}

/// Picks the bin count whose cross-validated downstream accuracy is highest,
/// breaking ties toward the smaller candidate.
pub fn select_bins(
    pairs: &[VariablePair],
    labels: &[PairLabel],
    candidates: &[usize],
    cv_folds: usize,
    seed: u64,
    base: &ExtractionConfig,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no bin candidates".into()));
    }
    if pairs.is_empty() || pairs.len() != labels.len() {
        return Err(Error::InvalidLabels(
            "pairs and labels must be non-empty and aligned".into(),
        ));
    }
    let mut distinct = labels.to_vec();
    distinct.sort_by_key(|l| *l as usize);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidLabels("need at least 2 classes".into()));
    }
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }

    let train_cfg = TrainConfig {
        n_trees: 60,
        max_depth: 3,
        seed: derive_seed(seed, 0xB1),
        ..TrainConfig::default()
    };
    let names: Vec<String> = FeatureVector::NAMES.iter().map(|n| n.to_string()).collect();

    let mut best: Option<(usize, f64)> = None;
    for &cand in candidates {
        let cfg = base.with_bins(cand);
        let features = extract_all(pairs, &cfg)?;
        let matrix: Vec<Vec<f64>> = features.iter().map(|f| f.values().to_vec()).collect();
        let folds = stratified_kfold(labels, cv_folds, derive_seed(seed, 0xF0))?;

        let mut correct = 0usize;
        let mut total = 0usize;
        for test_idx in &folds {
            let test: std::collections::HashSet<usize> = test_idx.iter().copied().collect();
            let train_rows: Vec<Vec<f64>> = (0..pairs.len())
                .filter(|i| !test.contains(i))
                .map(|i| matrix[i].clone())
                .collect();
            let train_labels: Vec<PairLabel> = (0..pairs.len())
                .filter(|i| !test.contains(i))
                .map(|i| labels[i])
                .collect();
            let model = fit(&train_rows, &train_labels, &names, &train_cfg)?;
            for &i in test_idx {
                if model.predict(&matrix[i])? == labels[i] {
                    correct += 1;
                }
                total += 1;
            }
        }
        let acc = correct as f64 / total as f64;
        best = match best {
            None => Some((cand, acc)),
            Some((bc, ba)) if acc > ba || (acc == ba && cand < bc) => Some((cand, acc)),
            other => other,
        };
    }
    Ok(best.expect("at least one candidate scored").0)
}

/// One row of the exported feature table.
#[derive(Debug, Clone)]
pub struct FeatureRecord {
    pub id: String,
    pub label: PairLabel,
    pub features: FeatureVector,
}

/// Writes the feature table as CSV: a fixed header of feature names, one row
/// per pair id.
pub fn write_features_csv<W: io::Write>(writer: W, records: &[FeatureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["pair_id".to_string(), "label".to_string()];
    header.extend(FeatureVector::NAMES.iter().map(|n| n.to_string()));
    w.write_record(&header)?;
    for rec in records {
        let mut row = vec![rec.id.clone(), rec.label.as_str().to_string()];
        row.extend(rec.features.values().iter().map(|v| format!("{v}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a feature table produced by [`write_features_csv`].
pub fn read_features_csv<R: io::Read>(reader: R) -> Result<Vec<FeatureRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    {
        let headers = r.headers()?;
        let mut expected = vec!["pair_id", "label"];
        expected.extend(FeatureVector::NAMES);
        if headers.len() != expected.len()
            || headers.iter().zip(&expected).any(|(h, e)| h != *e)
        {
            return Err(Error::Dataset("unexpected feature CSV header".into()));
        }
    }
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let id = record
            .get(0)
            .ok_or_else(|| Error::Dataset(format!("row {i}: missing pair_id")))?
            .to_string();
        let label: PairLabel = record
            .get(1)
            .ok_or_else(|| Error::Dataset(format!("row {i}: missing label")))?
            .parse()
            .map_err(|e: Error| Error::Dataset(format!("row {i}: {e}")))?;
        let mut values = [0.0; FEATURE_COUNT];
        for (j, v) in values.iter_mut().enumerate() {
            let field = record
                .get(j + 2)
                .ok_or_else(|| Error::Dataset(format!("row {i}: missing feature {j}")))?;
            *v = field
                .parse()
                .map_err(|_| Error::Dataset(format!("row {i}: bad float {field:?}")))?;
        }
        out.push(FeatureRecord {
            id,
            label,
            features: FeatureVector::from_values(values),
        });
    }
    Ok(out)
}
