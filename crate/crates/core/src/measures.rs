//! Vulnerability, leakage, and capacity measures over (prior, channel) pairs.
//!
//! Three measure families are wired into the feature pipeline: Bayes
//! vulnerability (gain-flavored), Bayes risk, and Shannon uncertainty (both
//! loss-flavored). A general finite gain/loss evaluator is exposed alongside
//! the closed forms.

use serde::{Deserialize, Serialize};

use crate::channel::{Channel, Distribution};
use crate::error::{Error, Result};

/// Which vulnerability family to measure.
///
/// `BayesVulnerability` is gain-flavored (higher means more vulnerable);
/// `BayesRisk` and `ShannonUncertainty` are loss-flavored (higher means less
/// vulnerable).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    BayesVulnerability,
    BayesRisk,
    ShannonUncertainty,
}

impl MeasureKind {
    /// True for measures where larger values mean a more exposed secret.
    pub fn is_gain_flavored(&self) -> bool {
        matches!(self, MeasureKind::BayesVulnerability)
    }
}

/// How prior and posterior measures are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageMode {
    Additive,
    Multiplicative,
}

/// Whether an evaluator is maximized (gain) or minimized (loss).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Maximize,
    Minimize,
}

/// A finite gain (or loss) function over actions W and secrets X.
///
/// Entry (w, x) holds the adversary's payoff for taking action w when the
/// secret is x. Prior and posterior vulnerabilities optimize the expected
/// payoff over the action set.
#[derive(Debug, Clone)]
pub struct GainFunction {
    payoffs: Vec<Vec<f64>>,
    objective: Objective,
}

impl GainFunction {
    /// Builds an evaluator from a dense payoff matrix, `payoffs[w][x]`.
    pub fn from_matrix(payoffs: Vec<Vec<f64>>, objective: Objective) -> Result<Self> {
        if payoffs.is_empty() || payoffs[0].is_empty() {
            return Err(Error::InvalidConfig("empty payoff matrix".into()));
        }
        let width = payoffs[0].len();
        if payoffs.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidConfig("ragged payoff matrix".into()));
        }
        if payoffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite payoff".into()));
        }
        Ok(Self { payoffs, objective })
    }

    /// The identity gain: one when the guess matches the secret, zero otherwise.
    pub fn identity(n: usize) -> Self {
        let mut payoffs = vec![vec![0.0; n]; n];
        for (w, row) in payoffs.iter_mut().enumerate() {
            row[w] = 1.0;
        }
        Self {
            payoffs,
            objective: Objective::Maximize,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.payoffs.len()
    }

    pub fn n_secrets(&self) -> usize {
        self.payoffs[0].len()
    }

    pub fn evaluate(&self, action: usize, secret: usize) -> f64 {
        self.payoffs[action][secret]
    }

    /// Expected payoff of the best action under the prior alone.
    pub fn prior_vulnerability(&self, prior: &Distribution) -> Result<f64> {
        if prior.support_size() != self.n_secrets() {
            return Err(Error::DimensionMismatch(format!(
                "prior support {} vs {} secrets",
                prior.support_size(),
                self.n_secrets()
            )));
        }
        Ok(self.optimize(prior.probs()))
    }

    /// Expected payoff of the best per-output action after observing the
    /// channel output.
    pub fn posterior_vulnerability(&self, prior: &Distribution, ch: &Channel) -> Result<f64> {
        check_dims(prior, ch)?;
        if ch.n_inputs() != self.n_secrets() {
            return Err(Error::DimensionMismatch(format!(
                "channel inputs {} vs {} secrets",
                ch.n_inputs(),
                self.n_secrets()
            )));
        }
        let mut total = 0.0;
        let mut weights = vec![0.0; ch.n_inputs()];
        for y in 0..ch.n_outputs() {
            for (x, w) in weights.iter_mut().enumerate() {
                *w = prior.probs()[x] * ch.rows()[x][y];
            }
            total += self.optimize(&weights);
        }
        Ok(total)
    }

    fn optimize(&self, weights: &[f64]) -> f64 {
        let expected = self.payoffs.iter().map(|row| {
            row.iter()
                .zip(weights)
                .map(|(payoff, w)| payoff * w)
                .sum::<f64>()
        });
        match self.objective {
            Objective::Maximize => expected.fold(f64::NEG_INFINITY, f64::max),
            Objective::Minimize => expected.fold(f64::INFINITY, f64::min),
        }
    }
}

fn check_dims(prior: &Distribution, ch: &Channel) -> Result<()> {
    if prior.support_size() != ch.n_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "prior support {} vs channel inputs {}",
            prior.support_size(),
            ch.n_inputs()
        )));
    }
    Ok(())
}

/// Prior measure of the secret before any output is observed.
///
/// Bayes vulnerability is the largest prior entry, Bayes risk its complement,
/// and Shannon uncertainty the entropy in bits.
pub fn prior_measure(kind: MeasureKind, prior: &Distribution) -> f64 {
    match kind {
        MeasureKind::BayesVulnerability => prior.max_prob(),
        MeasureKind::BayesRisk => 1.0 - prior.max_prob(),
        MeasureKind::ShannonUncertainty => prior.entropy_bits(),
    }
}

/// Posterior measure after observing the channel output.
pub fn posterior_measure(kind: MeasureKind, prior: &Distribution, ch: &Channel) -> Result<f64> {
    check_dims(prior, ch)?;
    match kind {
        MeasureKind::BayesVulnerability => Ok(posterior_bayes_vulnerability(prior, ch)),
        MeasureKind::BayesRisk => Ok(1.0 - posterior_bayes_vulnerability(prior, ch)),
        MeasureKind::ShannonUncertainty => Ok(conditional_entropy_bits(prior, ch)),
    }
}

fn posterior_bayes_vulnerability(prior: &Distribution, ch: &Channel) -> f64 {
    let mut total = 0.0;
    for y in 0..ch.n_outputs() {
        let mut best = 0.0f64;
        for x in 0..ch.n_inputs() {
            best = best.max(prior.probs()[x] * ch.rows()[x][y]);
        }
        total += best;
    }
    total
}

fn conditional_entropy_bits(prior: &Distribution, ch: &Channel) -> f64 {
    let mut total = 0.0;
    for y in 0..ch.n_outputs() {
        let mut p_y = 0.0;
        for x in 0..ch.n_inputs() {
            p_y += prior.probs()[x] * ch.rows()[x][y];
        }
        if p_y <= 0.0 {
            continue;
        }
        for x in 0..ch.n_inputs() {
            let joint = prior.probs()[x] * ch.rows()[x][y];
            if joint > 0.0 {
                total += joint * (p_y / joint).log2();
            }
        }
    }
    total
}

/// Posterior-vs-prior comparison, oriented so larger always means more
/// information flow.
///
/// Gain-flavored measures use posterior - prior (or posterior / prior);
/// loss-flavored measures flip the roles.
pub fn leakage(
    kind: MeasureKind,
    mode: LeakageMode,
    prior: &Distribution,
    ch: &Channel,
) -> Result<f64> {
    let before = prior_measure(kind, prior);
    let after = posterior_measure(kind, prior, ch)?;
    let (numer, denom, gain) = if kind.is_gain_flavored() {
        (after, before, after - before)
    } else {
        (before, after, before - after)
    };
    match mode {
        LeakageMode::Additive => Ok(gain),
        LeakageMode::Multiplicative => {
            if denom <= 0.0 {
                Err(Error::DegenerateLeakage)
            } else {
                Ok(numer / denom)
            }
        }
    }
}

/// Multiplicative Bayes capacity in bits: log2 of the sum of the channel's
/// column maxima. Prior-independent upper bound on multiplicative Bayes
/// leakage; always non-negative.
pub fn bayes_capacity(ch: &Channel) -> f64 {
    let mut total = 0.0;
    for y in 0..ch.n_outputs() {
        let mut best = 0.0f64;
        for x in 0..ch.n_inputs() {
            best = best.max(ch.rows()[x][y]);
        }
        total += best;
    }
    total.log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn dist(probs: &[f64]) -> Distribution {
        Distribution::new(probs.to_vec()).unwrap()
    }

    fn channel(rows: &[&[f64]]) -> Channel {
        Channel::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    /// Brute-force posterior Bayes vulnerability: enumerate the joint's
    /// columns and take each column's maximum. Independent of the library's
    /// measure path.
    fn oracle_posterior_bayes(prior: &Distribution, ch: &Channel) -> f64 {
        let joint: Vec<Vec<f64>> = prior
            .probs()
            .iter()
            .zip(ch.rows())
            .map(|(p, row)| row.iter().map(|c| p * c).collect())
            .collect();
        (0..ch.n_outputs())
            .map(|y| {
                joint
                    .iter()
                    .map(|row| row[y])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum()
    }

    fn random_prior(rng: &mut ChaCha8Rng, n: usize) -> Distribution {
        let weights: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
        Distribution::from_weights(&weights).unwrap()
    }

    fn random_channel(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Channel {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
                let total: f64 = w.iter().sum();
                w.iter().map(|v| v / total).collect()
            })
            .collect();
        Channel::new(rows).unwrap()
    }

    #[test]
    fn prior_bayes_vulnerability_is_max_entry() {
        assert_close(
            prior_measure(MeasureKind::BayesVulnerability, &dist(&[0.7, 0.3])),
            0.7,
            1e-12,
        );
    }

    #[test]
    fn prior_bayes_vulnerability_uniform_pin_space() {
        // One-shot guess of a 4-digit PIN: 10,000 equally likely codes.
        let pins = Distribution::uniform(10_000);
        assert_close(
            prior_measure(MeasureKind::BayesVulnerability, &pins),
            1.0 / 10_000.0,
            1e-15,
        );
    }

    #[test]
    fn prior_shannon_uniform_four() {
        assert_close(
            prior_measure(MeasureKind::ShannonUncertainty, &Distribution::uniform(4)),
            2.0,
            1e-12,
        );
    }

    #[test]
    fn prior_bayes_risk_is_complement() {
        assert_close(
            prior_measure(MeasureKind::BayesRisk, &dist(&[0.7, 0.3])),
            0.3,
            1e-12,
        );
    }

    #[test]
    fn posterior_bayes_vulnerability_column_maxima() {
        // Expected value frozen from the brute-force joint enumeration oracle.
        let prior = dist(&[0.5, 0.5]);
        let ch = channel(&[&[0.8, 0.2], &[0.3, 0.7]]);
        let expected = oracle_posterior_bayes(&prior, &ch);
        assert_close(expected, 0.75, 1e-12);
        assert_close(
            posterior_measure(MeasureKind::BayesVulnerability, &prior, &ch).unwrap(),
            0.75,
            1e-12,
        );
    }

    #[test]
    fn posterior_identity_channel_reveals_secret() {
        let prior = dist(&[0.2, 0.5, 0.3]);
        let ch = Channel::identity(3);
        assert_close(
            posterior_measure(MeasureKind::BayesVulnerability, &prior, &ch).unwrap(),
            1.0,
            1e-12,
        );
    }

    #[test]
    fn posterior_constant_channel_equals_prior() {
        let prior = dist(&[0.6, 0.4]);
        let ch = channel(&[&[0.3, 0.7], &[0.3, 0.7]]);
        for kind in [
            MeasureKind::BayesVulnerability,
            MeasureKind::BayesRisk,
            MeasureKind::ShannonUncertainty,
        ] {
            assert_close(
                posterior_measure(kind, &prior, &ch).unwrap(),
                prior_measure(kind, &prior),
                1e-9,
            );
        }
    }

    #[test]
    fn posterior_rejects_dimension_mismatch() {
        let prior = dist(&[0.5, 0.5]);
        let ch = Channel::identity(3);
        assert!(matches!(
            posterior_measure(MeasureKind::BayesVulnerability, &prior, &ch),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn multiplicative_bayes_leakage_identity_uniform() {
        for n in [2usize, 5, 9] {
            let prior = Distribution::uniform(n);
            let ch = Channel::identity(n);
            assert_close(
                leakage(
                    MeasureKind::BayesVulnerability,
                    LeakageMode::Multiplicative,
                    &prior,
                    &ch,
                )
                .unwrap(),
                n as f64,
                1e-9,
            );
        }
    }

    #[test]
    fn additive_shannon_leakage_constant_channel_is_zero() {
        let prior = dist(&[0.25, 0.75]);
        let ch = channel(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert_close(
            leakage(
                MeasureKind::ShannonUncertainty,
                LeakageMode::Additive,
                &prior,
                &ch,
            )
            .unwrap(),
            0.0,
            1e-9,
        );
    }

    #[test]
    fn hand_channel_leakages() {
        // Derived from the 0.75 posterior of the enumeration oracle above.
        let prior = dist(&[0.5, 0.5]);
        let ch = channel(&[&[0.8, 0.2], &[0.3, 0.7]]);
        assert_close(
            leakage(
                MeasureKind::BayesVulnerability,
                LeakageMode::Additive,
                &prior,
                &ch,
            )
            .unwrap(),
            0.25,
            1e-12,
        );
        assert_close(
            leakage(
                MeasureKind::BayesVulnerability,
                LeakageMode::Multiplicative,
                &prior,
                &ch,
            )
            .unwrap(),
            1.5,
            1e-12,
        );
    }

    #[test]
    fn degenerate_multiplicative_denominator_errors() {
        // Deterministic channel drives posterior Shannon uncertainty to zero.
        let prior = dist(&[0.5, 0.5]);
        let ch = Channel::identity(2);
        assert!(matches!(
            leakage(
                MeasureKind::ShannonUncertainty,
                LeakageMode::Multiplicative,
                &prior,
                &ch,
            ),
            Err(Error::DegenerateLeakage)
        ));
    }

    #[test]
    fn capacity_identity_and_constant() {
        assert_close(bayes_capacity(&Channel::identity(2)), 1.0, 1e-12);
        let constant = channel(&[&[0.3, 0.7], &[0.3, 0.7]]);
        assert_close(bayes_capacity(&constant), 0.0, 1e-12);
    }

    #[test]
    fn capacity_column_maxima_arithmetic() {
        let ch = channel(&[&[0.8, 0.2], &[0.3, 0.7]]);
        assert_close(bayes_capacity(&ch), 1.5f64.log2(), 1e-12);
        assert_close(bayes_capacity(&ch), 0.584963, 1e-6);
    }

    #[test]
    fn identity_gain_function_matches_bayes_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(2..8);
            let m = rng.gen_range(2..8);
            let prior = random_prior(&mut rng, n);
            let ch = random_channel(&mut rng, n, m);
            let g = GainFunction::identity(n);
            assert_close(
                g.prior_vulnerability(&prior).unwrap(),
                prior_measure(MeasureKind::BayesVulnerability, &prior),
                1e-12,
            );
            assert_close(
                g.posterior_vulnerability(&prior, &ch).unwrap(),
                posterior_measure(MeasureKind::BayesVulnerability, &prior, &ch).unwrap(),
                1e-12,
            );
        }
    }

    #[test]
    fn loss_objective_minimizes() {
        // A two-action loss where action 0 is always cheaper.
        let g = GainFunction::from_matrix(
            vec![vec![0.1, 0.2], vec![0.5, 0.9]],
            Objective::Minimize,
        )
        .unwrap();
        let prior = dist(&[0.5, 0.5]);
        assert_close(g.prior_vulnerability(&prior).unwrap(), 0.15, 1e-12);
    }

    #[test]
    fn measures_invariant_under_secret_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.gen_range(2..7);
            let m = rng.gen_range(2..7);
            let prior = random_prior(&mut rng, n);
            let ch = random_channel(&mut rng, n, m);

            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let p2 = Distribution::new(perm.iter().map(|&i| prior.probs()[i]).collect()).unwrap();
            let c2 = Channel::new(perm.iter().map(|&i| ch.rows()[i].clone()).collect()).unwrap();

            for kind in [
                MeasureKind::BayesVulnerability,
                MeasureKind::BayesRisk,
                MeasureKind::ShannonUncertainty,
            ] {
                assert_close(prior_measure(kind, &prior), prior_measure(kind, &p2), 1e-12);
                assert_close(
                    posterior_measure(kind, &prior, &ch).unwrap(),
                    posterior_measure(kind, &p2, &c2).unwrap(),
                    1e-12,
                );
            }
        }
    }

    proptest! {
        #[test]
        fn monotonicity_and_miracle_bound(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..10);
            let m = rng.gen_range(2..10);
            let prior = random_prior(&mut rng, n);
            let ch = random_channel(&mut rng, n, m);

            let pv = prior_measure(MeasureKind::BayesVulnerability, &prior);
            let qv = posterior_measure(MeasureKind::BayesVulnerability, &prior, &ch).unwrap();
            prop_assert!(qv >= pv - 1e-9);

            let ph = prior_measure(MeasureKind::ShannonUncertainty, &prior);
            let qh = posterior_measure(MeasureKind::ShannonUncertainty, &prior, &ch).unwrap();
            prop_assert!(qh <= ph + 1e-9);

            let mult = leakage(
                MeasureKind::BayesVulnerability,
                LeakageMode::Multiplicative,
                &prior,
                &ch,
            ).unwrap();
            prop_assert!(mult <= 2f64.powf(bayes_capacity(&ch)) + 1e-9);

            let uniform = Distribution::uniform(n);
            let mult_u = leakage(
                MeasureKind::BayesVulnerability,
                LeakageMode::Multiplicative,
                &uniform,
                &ch,
            ).unwrap();
            prop_assert!((mult_u - 2f64.powf(bayes_capacity(&ch))).abs() <= 1e-9);
        }

        #[test]
        fn constant_channel_has_no_leakage(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..8);
            let m = rng.gen_range(2..8);
            let prior = random_prior(&mut rng, n);
            let row = random_channel(&mut rng, 1, m).rows()[0].clone();
            let ch = Channel::new(vec![row; n]).unwrap();

            for kind in [
                MeasureKind::BayesVulnerability,
                MeasureKind::BayesRisk,
                MeasureKind::ShannonUncertainty,
            ] {
                let add = leakage(kind, LeakageMode::Additive, &prior, &ch).unwrap();
                prop_assert!(add.abs() <= 1e-9);
                match leakage(kind, LeakageMode::Multiplicative, &prior, &ch) {
                    Ok(mult) => prop_assert!((mult - 1.0).abs() <= 1e-9),
                    Err(Error::DegenerateLeakage) => {}
                    Err(e) => return Err(TestCaseError::fail(format!("unexpected: {e}"))),
                }
            }
        }
    }
}
