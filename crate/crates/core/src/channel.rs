//! Empirical joints, priors, and channels.
//!
//! Raw sample columns become a [`JointDistribution`] (contingency normalization
//! for categorical data, grid-evaluated Gaussian KDE for numeric data), which is
//! then factorized into a prior and a row-stochastic [`Channel`] in either flow
//! direction.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for "sums to one" checks on probability vectors and matrices.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// A finite probability vector: the prior over secret values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Builds a distribution, checking non-negativity and unit total.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(
                "entries must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `n` values.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs non-empty support");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Normalizes a vector of non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    /// Largest entry: the best single-guess probability.
    pub fn max_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Shannon entropy in bits, with the 0 log 0 = 0 convention.
    pub fn entropy_bits(&self) -> f64 {
        self.probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }
}

/// Which way information flows through the pair: X to Y or Y to X.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowDirection {
    Direct,
    Reverse,
}

/// Empirical joint probability over two discrete supports.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    cells: Vec<Vec<f64>>,
    x_labels: Vec<String>,
    y_labels: Vec<String>,
}

impl JointDistribution {
    /// Builds a joint, checking non-negativity and unit total.
    pub fn new(cells: Vec<Vec<f64>>, x_labels: Vec<String>, y_labels: Vec<String>) -> Result<Self> {
        if cells.is_empty() || cells[0].is_empty() {
            return Err(Error::InvalidJoint("empty matrix".into()));
        }
        let width = cells[0].len();
        if cells.iter().any(|row| row.len() != width) {
            return Err(Error::InvalidJoint("ragged rows".into()));
        }
        if cells.len() != x_labels.len() || width != y_labels.len() {
            return Err(Error::InvalidJoint("label count does not match shape".into()));
        }
        let mut total = 0.0;
        for row in &cells {
            for &c in row {
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::InvalidJoint(
                        "cells must be finite and non-negative".into(),
                    ));
                }
                total += c;
            }
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidJoint(format!(
                "cells sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            cells,
            x_labels,
            y_labels,
        })
    }

    pub fn cells(&self) -> &[Vec<f64>] {
        &self.cells
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.cells.len(), self.cells[0].len())
    }

    /// The same joint with the roles of X and Y exchanged.
    pub fn transposed(&self) -> Self {
        let (rows, cols) = self.shape();
        let mut cells = vec![vec![0.0; rows]; cols];
        for (i, row) in self.cells.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                cells[j][i] = c;
            }
        }
        Self {
            cells,
            x_labels: self.y_labels.clone(),
            y_labels: self.x_labels.clone(),
        }
    }
}

/// Row-stochastic conditional matrix: entry (x, y) holds the probability of
/// output y given input x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
}

impl Channel {
    /// Builds a channel, checking that every row is a probability vector.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidChannel("empty matrix".into()));
        }
        let width = rows[0].len();
        for row in &rows {
            if row.len() != width {
                return Err(Error::InvalidChannel("ragged rows".into()));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0 + PROB_SUM_TOL) {
                return Err(Error::InvalidChannel("entries must lie in [0, 1]".into()));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::InvalidChannel(format!(
                    "row sums to {total}, expected 1"
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Identity channel over `n` values: every input maps to its own output.
    pub fn identity(n: usize) -> Self {
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.rows[0].len()
    }
}

/// Bandwidth selection for the Gaussian kernel estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthRule {
    /// Per-axis rule of thumb: 1.06 sigma n^(-1/5).
    Silverman,
    /// A fixed bandwidth applied to both axes.
    Fixed(f64),
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::Silverman
    }
}

impl BandwidthRule {
    fn bandwidth(&self, values: &[f64]) -> Result<f64> {
        match *self {
            BandwidthRule::Silverman => {
                let sd = sample_std(values);
                if sd <= 0.0 {
                    return Err(Error::ConstantColumn);
                }
                Ok(1.06 * sd * (values.len() as f64).powf(-0.2))
            }
            BandwidthRule::Fixed(h) => {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::InvalidConfig(format!("fixed bandwidth {h}")));
                }
                Ok(h)
            }
        }
    }
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

/// Maps the distinct values of a finite numeric column to category codes in
/// order of first appearance, together with printable labels.
pub fn categorize(values: &[f64]) -> Result<(Vec<usize>, Vec<String>)> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSamples("non-finite value".into()));
    }
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut codes = Vec::with_capacity(values.len());
    for &v in values {
        let key = v.to_bits();
        let code = *index.entry(key).or_insert_with(|| {
            labels.push(format!("{v}"));
            labels.len() - 1
        });
        codes.push(code);
    }
    Ok((codes, labels))
}

/// Contingency-table estimate of the joint from two aligned category columns.
///
/// Cell (a, b) holds count(x = a, y = b) / n; labels are ordered by first
/// appearance in each column.
pub fn estimate_joint_categorical<T>(xs: &[T], ys: &[T]) -> Result<JointDistribution>
where
    T: Eq + Hash + Clone + ToString,
{
    if xs.is_empty() {
        return Err(Error::InvalidSamples("empty input".into()));
    }
    if xs.len() != ys.len() {
        return Err(Error::InvalidSamples(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    let mut x_index: HashMap<T, usize> = HashMap::new();
    let mut y_index: HashMap<T, usize> = HashMap::new();
    let mut x_labels = Vec::new();
    let mut y_labels = Vec::new();
    let mut counts: Vec<Vec<u64>> = Vec::new();
    for (x, y) in xs.iter().zip(ys) {
        let i = *x_index.entry(x.clone()).or_insert_with(|| {
            x_labels.push(x.to_string());
            counts.push(Vec::new());
            x_labels.len() - 1
        });
        let j = *y_index.entry(y.clone()).or_insert_with(|| {
            y_labels.push(y.to_string());
            y_labels.len() - 1
        });
        for row in counts.iter_mut() {
            if row.len() < y_labels.len() {
                row.resize(y_labels.len(), 0);
            }
        }
        counts[i][j] += 1;
    }
    let n = xs.len() as f64;
    let cells = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / n).collect())
        .collect();
    JointDistribution::new(cells, x_labels, y_labels)
}

/// Equal-width binning of a numeric column into `n_bins` codes.
///
/// Value v maps to floor((v - min) / width), clamped to `n_bins - 1`;
/// constant columns map everything to bin 0.
pub fn discretize_numeric(values: &[f64], n_bins: usize) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::InvalidSamples("empty input".into()));
    }
    if n_bins == 0 {
        return Err(Error::InvalidConfig("n_bins must be positive".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSamples("non-finite value".into()));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![0; values.len()]);
    }
    let width = (max - min) / n_bins as f64;
    Ok(values
        .iter()
        .map(|&v| (((v - min) / width) as usize).min(n_bins - 1))
        .collect())
}

/// Bivariate product-Gaussian kernel estimate of the joint, evaluated on a
/// `grid` by `grid` lattice spanning [min - 3h, max + 3h] on each axis and
/// renormalized to total mass one.
pub fn estimate_joint_kde(
    xs: &[f64],
    ys: &[f64],
    grid: usize,
    bandwidth: BandwidthRule,
) -> Result<JointDistribution> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidSamples(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidSamples(
            "kernel estimation needs at least 2 samples".into(),
        ));
    }
    if grid < 2 {
        return Err(Error::InvalidConfig("grid must be at least 2".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidSamples("non-finite value".into()));
    }
    let hx = bandwidth.bandwidth(xs)?;
    let hy = bandwidth.bandwidth(ys)?;

    let gx = grid_points(xs, hx, grid);
    let gy = grid_points(ys, hy, grid);

    // Product kernel: per-sample axis responses are computed once, then the
    // joint cell is a dot product over samples.
    let kx = kernel_matrix(&gx, xs, hx);
    let ky = kernel_matrix(&gy, ys, hy);

    let mut cells = vec![vec![0.0; grid]; grid];
    let mut total = 0.0;
    for (a, row) in cells.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..xs.len() {
                acc += kx[a][i] * ky[b][i];
            }
            *cell = acc;
            total += acc;
        }
    }
    if total <= 0.0 {
        return Err(Error::InvalidJoint("kernel mass vanished".into()));
    }
    for row in cells.iter_mut() {
        for cell in row.iter_mut() {
            *cell /= total;
        }
    }
    let x_labels = gx.iter().map(|v| format!("{v:.6e}")).collect();
    let y_labels = gy.iter().map(|v| format!("{v:.6e}")).collect();
    JointDistribution::new(cells, x_labels, y_labels)
}

fn grid_points(values: &[f64], h: f64, grid: usize) -> Vec<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (max - min) / (grid - 1) as f64;
    (0..grid).map(|i| min + step * i as f64).collect()
}

fn kernel_matrix(grid: &[f64], samples: &[f64], h: f64) -> Vec<Vec<f64>> {
    grid.iter()
        .map(|&g| {
            samples
                .iter()
                .map(|&s| {
                    let u = (g - s) / h;
                    (-0.5 * u * u).exp()
                })
                .collect()
        })
        .collect()
}

/// Factorizes a joint into a prior and a channel along the given direction.
///
/// Direct uses row marginals as the prior and divides each row by its
/// marginal; Reverse applies the same factorization to the transposed joint.
/// Zero-marginal rows are dropped from both prior and channel.
pub fn joint_to_prior_channel(
    joint: &JointDistribution,
    dir: FlowDirection,
) -> Result<(Distribution, Channel)> {
    match dir {
        FlowDirection::Direct => factorize_rows(joint),
        FlowDirection::Reverse => factorize_rows(&joint.transposed()),
    }
}

fn factorize_rows(joint: &JointDistribution) -> Result<(Distribution, Channel)> {
    let mut marginals = Vec::new();
    let mut rows = Vec::new();
    for row in joint.cells() {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            marginals.push(total);
            rows.push(row.iter().map(|c| c / total).collect());
        }
    }
    if marginals.is_empty() {
        return Err(Error::InvalidJoint("all-zero joint".into()));
    }
    Ok((Distribution::from_weights(&marginals)?, Channel::new(rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn categorical_joint_uniform_counts() {
        let j = estimate_joint_categorical(&["a", "a", "b", "b"], &["0", "1", "0", "1"]).unwrap();
        for row in j.cells() {
            for &c in row {
                assert_close(c, 0.25, 1e-12);
            }
        }
    }

    #[test]
    fn categorical_joint_degenerate_support() {
        let j = estimate_joint_categorical(&["a", "a"], &["0", "0"]).unwrap();
        assert_eq!(j.shape(), (1, 1));
        assert_close(j.cells()[0][0], 1.0, 1e-12);
    }

    #[test]
    fn categorical_joint_direct_counts() {
        let j = estimate_joint_categorical(&["a", "b", "a"], &["0", "1", "0"]).unwrap();
        assert_close(j.cells()[0][0], 2.0 / 3.0, 1e-12);
        assert_close(j.cells()[1][1], 1.0 / 3.0, 1e-12);
        assert_close(j.cells()[0][1], 0.0, 1e-12);
        assert_close(j.cells()[1][0], 0.0, 1e-12);
        assert_eq!(j.x_labels(), &["a", "b"]);
    }

    #[test]
    fn categorical_joint_rejects_bad_input() {
        assert!(matches!(
            estimate_joint_categorical::<&str>(&[], &[]),
            Err(Error::InvalidSamples(_))
        ));
        assert!(matches!(
            estimate_joint_categorical(&["a"], &["0", "1"]),
            Err(Error::InvalidSamples(_))
        ));
    }

    #[test]
    fn discretize_midpoint_split() {
        assert_eq!(
            discretize_numeric(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(),
            vec![0, 0, 1, 1]
        );
    }

    #[test]
    fn discretize_constant_column() {
        assert_eq!(discretize_numeric(&[5.0, 5.0, 5.0], 3).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn discretize_boundaries() {
        assert_eq!(
            discretize_numeric(&[0.0, 0.49, 0.51, 1.0], 2).unwrap(),
            vec![0, 0, 1, 1]
        );
    }

    #[test]
    fn discretize_rejects_bad_input() {
        assert!(matches!(
            discretize_numeric(&[], 4),
            Err(Error::InvalidSamples(_))
        ));
        assert!(matches!(
            discretize_numeric(&[1.0, f64::NAN], 4),
            Err(Error::InvalidSamples(_))
        ));
    }

    #[test]
    fn kde_cells_sum_to_one() {
        let xs = [0.3, -1.2, 0.8, 2.0, -0.4, 1.1];
        let ys = [1.0, 0.2, -0.7, 0.4, 1.6, -0.2];
        let j = estimate_joint_kde(&xs, &ys, 16, BandwidthRule::Silverman).unwrap();
        let total: f64 = j.cells().iter().flatten().sum();
        assert_close(total, 1.0, 1e-9);
    }

    #[test]
    fn kde_swap_symmetric_samples_give_symmetric_grid() {
        // Sample set closed under (x, y) -> (y, x).
        let xs = [0.0, 1.0, 2.0, 1.0, 0.5, -1.0];
        let ys = [1.0, 0.0, 1.0, 2.0, -1.0, 0.5];
        let j = estimate_joint_kde(&xs, &ys, 12, BandwidthRule::Silverman).unwrap();
        let t = j.transposed();
        for (ra, rb) in j.cells().iter().zip(t.cells()) {
            for (&a, &b) in ra.iter().zip(rb) {
                assert_close(a, b, 1e-9);
            }
        }
    }

    #[test]
    fn kde_rejects_constant_and_short_columns() {
        assert!(matches!(
            estimate_joint_kde(&[1.0, 1.0, 1.0], &[0.1, 0.4, 0.9], 8, BandwidthRule::Silverman),
            Err(Error::ConstantColumn)
        ));
        assert!(matches!(
            estimate_joint_kde(&[1.0], &[2.0], 8, BandwidthRule::Silverman),
            Err(Error::InvalidSamples(_))
        ));
    }

    #[test]
    fn factorize_direct_division() {
        let j = JointDistribution::new(
            vec![vec![0.4, 0.1], vec![0.1, 0.4]],
            vec!["x0".into(), "x1".into()],
            vec!["y0".into(), "y1".into()],
        )
        .unwrap();
        let (prior, ch) = joint_to_prior_channel(&j, FlowDirection::Direct).unwrap();
        assert_close(prior.probs()[0], 0.5, 1e-12);
        assert_close(prior.probs()[1], 0.5, 1e-12);
        assert_close(ch.rows()[0][0], 0.8, 1e-12);
        assert_close(ch.rows()[0][1], 0.2, 1e-12);
        assert_close(ch.rows()[1][0], 0.2, 1e-12);
        assert_close(ch.rows()[1][1], 0.8, 1e-12);

        // This joint is symmetric, so the reverse factorization matches.
        let (rp, rc) = joint_to_prior_channel(&j, FlowDirection::Reverse).unwrap();
        assert_eq!(rp, prior);
        assert_eq!(rc, ch);
    }

    #[test]
    fn factorize_deterministic_joint_gives_identity_channel() {
        let j = JointDistribution::new(
            vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            vec!["x0".into(), "x1".into()],
            vec!["y0".into(), "y1".into()],
        )
        .unwrap();
        let (_, ch) = joint_to_prior_channel(&j, FlowDirection::Direct).unwrap();
        assert_eq!(ch, Channel::identity(2));
    }

    #[test]
    fn factorize_drops_zero_rows() {
        let j = JointDistribution::new(
            vec![vec![0.0, 0.0], vec![0.5, 0.5]],
            vec!["x0".into(), "x1".into()],
            vec!["y0".into(), "y1".into()],
        )
        .unwrap();
        let (prior, ch) = joint_to_prior_channel(&j, FlowDirection::Direct).unwrap();
        assert_eq!(prior.support_size(), 1);
        assert_eq!(ch.n_inputs(), 1);
    }

    #[test]
    fn reverse_equals_direct_of_transpose() {
        let j = JointDistribution::new(
            vec![vec![0.1, 0.3], vec![0.25, 0.35]],
            vec!["x0".into(), "x1".into()],
            vec!["y0".into(), "y1".into()],
        )
        .unwrap();
        let rev = joint_to_prior_channel(&j, FlowDirection::Reverse).unwrap();
        let direct_t = joint_to_prior_channel(&j.transposed(), FlowDirection::Direct).unwrap();
        assert_eq!(rev, direct_t);
    }

    proptest! {
        #[test]
        fn prior_times_channel_recovers_joint(
            (n_rows, n_cols, flat) in (2usize..6, 2usize..6).prop_flat_map(|(r, c)| {
                (Just(r), Just(c), proptest::collection::vec(0.0f64..1.0, r * c))
            })
        ) {
            let total: f64 = flat.iter().sum();
            prop_assume!(total > 1e-6);
            let cells: Vec<Vec<f64>> = (0..n_rows)
                .map(|i| flat[i * n_cols..(i + 1) * n_cols].iter().map(|c| c / total).collect())
                .collect();
            let width = n_cols;
            let xl = (0..cells.len()).map(|i| format!("x{i}")).collect();
            let yl = (0..width).map(|i| format!("y{i}")).collect();
            let j = JointDistribution::new(cells.clone(), xl, yl).unwrap();

            for dir in [FlowDirection::Direct, FlowDirection::Reverse] {
                let base = match dir {
                    FlowDirection::Direct => j.clone(),
                    FlowDirection::Reverse => j.transposed(),
                };
                let (prior, ch) = joint_to_prior_channel(&j, dir).unwrap();
                let kept: Vec<&Vec<f64>> = base
                    .cells()
                    .iter()
                    .filter(|r| r.iter().sum::<f64>() > 0.0)
                    .collect();
                prop_assert_eq!(kept.len(), prior.support_size());
                for (i, row) in kept.iter().enumerate() {
                    for (j2, &c) in row.iter().enumerate() {
                        let rebuilt = prior.probs()[i] * ch.rows()[i][j2];
                        prop_assert!((rebuilt - c).abs() <= 1e-9);
                    }
                }
            }
        }

        #[test]
        fn discretize_codes_within_range(
            values in proptest::collection::vec(-1e6f64..1e6, 1..200),
            n_bins in 1usize..40
        ) {
            let codes = discretize_numeric(&values, n_bins).unwrap();
            prop_assert!(codes.iter().all(|&c| c < n_bins));
        }

        #[test]
        fn kde_output_is_valid_joint(
            pairs in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 4..40)
        ) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            match estimate_joint_kde(&xs, &ys, 8, BandwidthRule::Silverman) {
                Ok(j) => {
                    let total: f64 = j.cells().iter().flatten().sum();
                    prop_assert!((total - 1.0).abs() <= 1e-9);
                    prop_assert!(j.cells().iter().flatten().all(|c| *c >= 0.0));
                }
                Err(Error::ConstantColumn) => {}
                Err(e) => return Err(TestCaseError::fail(format!("unexpected error: {e}"))),
            }
        }
    }
}
