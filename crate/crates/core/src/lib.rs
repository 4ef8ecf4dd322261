//! Quantitative information flow measures as features for pairwise causal
//! discovery.
//!
//! The pipeline turns a pair of sample columns into an empirical channel in
//! both flow directions, computes vulnerability-based leakage measures over
//! it, and feeds the resulting feature vectors to a boosted-tree classifier
//! that predicts whether the pair is causal, anticausal, confounded, or
//! independent.
//!
//! Modules, in data-flow order:
//!
//! - [`channel`]: sample columns to joints, priors, and channels
//! - [`measures`]: vulnerabilities, leakages, and Bayes capacity
//! - [`features`]: the fixed 21-entry feature vector per pair
//! - [`dataset`]: benchmark loaders and the synthetic generator
//! - [`gbdt`]: the boosted-tree classifier
//! - [`eval`]: cross-validation, holdout evaluation, and reports

pub mod channel;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod gbdt;
pub mod measures;
pub mod seed;

pub use channel::{
    categorize, discretize_numeric, estimate_joint_categorical, estimate_joint_kde,
    joint_to_prior_channel, BandwidthRule, Channel, Distribution, FlowDirection,
    JointDistribution,
};
pub use dataset::{
    generate_synthetic_anm, load_challenge, load_tuebingen, randomize_directions, write_challenge,
    DatasetSource, PairDataset, PairLabel,
};
pub use error::{Error, Result};
pub use eval::{
    accuracy_ci, holdout_split, run_experiment, stratified_kfold, wilson_ci, CiMethod,
    DatasetSpec, EvalReport, ExperimentSpec, Protocol, TaskKind,
};
pub use features::{
    extract_all, extract_features, read_features_csv, select_bins, write_features_csv,
    ExtractionConfig, FeatureRecord, FeatureVector, VariableKind, VariablePair, FEATURE_COUNT,
};
pub use gbdt::{fit, loss_gradients, BoostedModel, TrainConfig};
pub use measures::{
    bayes_capacity, leakage, posterior_measure, prior_measure, GainFunction, LeakageMode,
    MeasureKind, Objective,
};

use std::sync::Once;

/// Environment variable capping worker parallelism.
pub const THREADS_ENV: &str = "QIF_CAUSAL_THREADS";

static POOL_INIT: Once = Once::new();

/// Builds the global worker pool once, honoring `QIF_CAUSAL_THREADS`.
///
/// Safe to call from multiple entry points; later calls are no-ops, and an
/// already-initialized pool (for instance under a test harness) is left
/// untouched.
pub fn init_thread_pool() {
    POOL_INIT.call_once(|| {
        if let Ok(value) = std::env::var(THREADS_ENV) {
            if let Ok(threads) = value.parse::<usize>() {
                if threads > 0 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build_global();
                }
            }
        }
    });
}
