//! Consistent Bayesian belief systems over two hypotheses and the exact
//! one-step expectations used to certify the (log-)submartingale property.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MdpModel, ModelError, SenderType};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("belief {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("log of non-positive belief {0}")]
    LogDomain(f64),
    #[error("likelihood rows have different lengths ({0} vs {1})")]
    RowLength(usize, usize),
    #[error("observed state {0} out of range")]
    Observation(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Receiver's belief that the sender is malicious.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReceiverBelief(f64);

impl ReceiverBelief {
    pub fn new(prob_malicious: f64) -> Result<Self, BeliefError> {
        if (0.0..=1.0).contains(&prob_malicious) {
            Ok(ReceiverBelief(prob_malicious))
        } else {
            Err(BeliefError::OutOfRange(prob_malicious))
        }
    }

    pub fn prob_malicious(self) -> f64 {
        self.0
    }

    pub fn prob(self, theta: SenderType) -> f64 {
        match theta {
            SenderType::Malicious => self.0,
            SenderType::Benign => 1.0 - self.0,
        }
    }
}

/// Sender's belief that the receiver is aware of the vulnerability.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SenderBelief(f64);

impl SenderBelief {
    pub fn new(prob_aware: f64) -> Result<Self, BeliefError> {
        if (0.0..=1.0).contains(&prob_aware) {
            Ok(SenderBelief(prob_aware))
        } else {
            Err(BeliefError::OutOfRange(prob_aware))
        }
    }

    pub fn prob_aware(self) -> f64 {
        self.0
    }
}

/// One-step conditional mass functions under two competing hypotheses.
///
/// `primary` is the hypothesis whose probability the belief tracks (the
/// malicious sender, or the aware receiver); `alternative` is the other one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodProfile<'a> {
    pub primary: &'a [f64],
    pub alternative: &'a [f64],
}

impl<'a> LikelihoodProfile<'a> {
    pub fn new(primary: &'a [f64], alternative: &'a [f64]) -> Result<Self, BeliefError> {
        if primary.len() != alternative.len() {
            return Err(BeliefError::RowLength(primary.len(), alternative.len()));
        }
        Ok(LikelihoodProfile { primary, alternative })
    }

    /// Profile for a receiver belief, from per-sender-type rows.
    pub fn from_sender_rows(benign: &'a [f64], malicious: &'a [f64]) -> Result<Self, BeliefError> {
        Self::new(malicious, benign)
    }

    pub fn identical(&self) -> bool {
        self.primary == self.alternative
    }

    pub fn row(&self, theta: SenderType) -> &'a [f64] {
        match theta {
            SenderType::Malicious => self.primary,
            SenderType::Benign => self.alternative,
        }
    }
}

/// The path-conditional likelihood for pure strategies: `P(.|x, a, r)`.
pub fn one_step_likelihood(model: &MdpModel, action: usize, reaction: usize, state: usize) -> Result<&[f64], BeliefError> {
    Ok(model.checked_row(state, action, reaction)?)
}

/// Result of one Bayes step on a two-hypothesis belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesStep {
    /// Posterior probability of the primary hypothesis.
    pub posterior: f64,
    /// Bayes coefficient of the primary hypothesis: posterior / prior when the
    /// prior is positive. `None` when the update was impossible.
    pub coefficient: Option<f64>,
    /// The observation has zero probability under every hypothesis with
    /// positive prior; the prior was kept.
    pub impossible: bool,
}

/// Bayes' rule on the primary-hypothesis probability `prior`.
///
/// Identical rows short-circuit to the prior so the belief is unchanged
/// bitwise. A zero denominator keeps the prior and sets `impossible`.
pub fn bayes_step(prior: f64, likelihoods: &LikelihoodProfile<'_>, observed: usize) -> Result<BayesStep, BeliefError> {
    if observed >= likelihoods.primary.len() {
        return Err(BeliefError::Observation(observed));
    }
    let p1 = likelihoods.primary[observed];
    let p0 = likelihoods.alternative[observed];
    let numerator = p1 * prior;
    let denominator = numerator + p0 * (1.0 - prior);
    if denominator == 0.0 {
        return Ok(BayesStep {
            posterior: prior,
            coefficient: None,
            impossible: true,
        });
    }
    if likelihoods.identical() {
        return Ok(BayesStep {
            posterior: prior,
            coefficient: Some(1.0),
            impossible: false,
        });
    }
    Ok(BayesStep {
        posterior: numerator / denominator,
        coefficient: Some(p1 / denominator),
        impossible: false,
    })
}

/// Receiver-side update over sender types.
pub fn bayes_update(
    prior: ReceiverBelief,
    likelihoods: &LikelihoodProfile<'_>,
    observed: usize,
) -> Result<(ReceiverBelief, BayesStep), BeliefError> {
    let step = bayes_step(prior.0, likelihoods, observed)?;
    Ok((ReceiverBelief(step.posterior.clamp(0.0, 1.0)), step))
}

/// Sender-side update over receiver types. The rows are the transitions under
/// the reaction each receiver type would have taken at this step.
pub fn sender_belief_update(
    prior: SenderBelief,
    unaware_row: &[f64],
    aware_row: &[f64],
    observed: usize,
) -> Result<(SenderBelief, BayesStep), BeliefError> {
    let profile = LikelihoodProfile::new(aware_row, unaware_row)?;
    let step = bayes_step(prior.0, &profile, observed)?;
    Ok((SenderBelief(step.posterior.clamp(0.0, 1.0)), step))
}

/// The posterior of the primary hypothesis after observing each next state.
fn posteriors(prior: f64, likelihoods: &LikelihoodProfile<'_>) -> Vec<f64> {
    (0..likelihoods.primary.len())
        .map(|x| {
            bayes_step(prior, likelihoods, x)
                .map(|s| s.posterior)
                .unwrap_or(prior)
        })
        .collect()
}

/// `sum_x' p_true(x') * pi_{k+1}(primary | x')`, by exact enumeration.
///
/// `truth_is_primary` selects which row generates the next state; the
/// returned value is the expectation of the primary-hypothesis belief.
pub fn exact_expected_next_belief(prior: f64, likelihoods: &LikelihoodProfile<'_>, truth_is_primary: bool) -> f64 {
    let truth = if truth_is_primary { likelihoods.primary } else { likelihoods.alternative };
    posteriors(prior, likelihoods)
        .iter()
        .zip(truth)
        .filter(|(_, &p)| p > 0.0)
        .map(|(post, p)| p * post)
        .sum()
}

/// Same expectation for the belief on the *true* hypothesis, i.e. the quantity
/// that must dominate the current belief on the true type.
pub fn expected_belief_on_truth(prior_on_truth: f64, truth: &[f64], other: &[f64]) -> f64 {
    let profile = LikelihoodProfile { primary: truth, alternative: other };
    exact_expected_next_belief(prior_on_truth, &profile, true)
}

/// `sum_x' p_true(x') * ln pi_{k+1}(true | x')` over states with positive mass.
pub fn expected_next_log_belief(prior_on_truth: f64, truth: &[f64], other: &[f64]) -> Result<f64, BeliefError> {
    let profile = LikelihoodProfile { primary: truth, alternative: other };
    let mut total = 0.0;
    for (x, &p) in truth.iter().enumerate() {
        if p > 0.0 {
            let post = bayes_step(prior_on_truth, &profile, x)?.posterior;
            total += p * log_belief(post)?;
        }
    }
    Ok(total)
}

/// The Jensen quantity `G = sum_{x in X+} p_true(x)^2 / sum_phi p_phi(x) pi(phi)`,
/// which is at least one for every prior.
pub fn jensen_witness(prior_on_truth: f64, truth: &[f64], other: &[f64]) -> f64 {
    truth
        .iter()
        .zip(other)
        .filter_map(|(&pt, &po)| {
            let mix = pt * prior_on_truth + po * (1.0 - prior_on_truth);
            (mix > 0.0).then(|| pt * pt / mix)
        })
        .sum()
}

/// Natural log of a positive belief.
pub fn log_belief(belief: f64) -> Result<f64, BeliefError> {
    if belief > 0.0 {
        Ok(belief.ln())
    } else {
        Err(BeliefError::LogDomain(belief))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{self, A_B, A_M, R_B, R_M, X_A, X_N};

    // rows are [x_n, x_a]
    const MAL: [f64; 2] = [0.7, 0.3];
    const BEN: [f64; 2] = [0.8, 0.2];

    #[test]
    fn likelihood_rows_from_model() {
        let m = presets::g1_known_vuln();
        assert_eq!(one_step_likelihood(&m, A_M, R_B, X_N).unwrap(), &[0.7, 0.3]);
        assert_eq!(one_step_likelihood(&m, A_B, R_M, X_A).unwrap(), &[0.7, 0.3]);
        assert!(one_step_likelihood(&m, 5, R_B, X_N).is_err());
    }

    #[test]
    fn point_mass_row() {
        let m = MdpModel::from_rows(&["u", "v"], &["a"], &["r"], "u", |_, _, _| vec![0.0, 1.0]).unwrap();
        assert_eq!(one_step_likelihood(&m, 0, 0, 0).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn bayes_reference_value() {
        let profile = LikelihoodProfile::from_sender_rows(&BEN, &MAL).unwrap();
        let (post, step) = bayes_update(ReceiverBelief::new(0.01).unwrap(), &profile, X_A).unwrap();
        // 0.3 * 0.01 / (0.3 * 0.01 + 0.2 * 0.99)
        assert!((post.prob_malicious() - 0.003 / 0.201).abs() < 1e-12);
        assert!((step.coefficient.unwrap() - 0.3 / 0.201).abs() < 1e-12);
        assert!(!step.impossible);
    }

    #[test]
    fn identical_rows_are_neutral() {
        let profile = LikelihoodProfile::new(&MAL, &MAL).unwrap();
        for prior in [0.0, 0.123456789, 0.5, 1.0] {
            for x in 0..2 {
                assert_eq!(bayes_step(prior, &profile, x).unwrap().posterior.to_bits(), prior.to_bits());
            }
        }
    }

    #[test]
    fn zero_prior_absorbs() {
        let profile = LikelihoodProfile::from_sender_rows(&BEN, &MAL).unwrap();
        for x in 0..2 {
            assert_eq!(bayes_step(0.0, &profile, x).unwrap().posterior, 0.0);
        }
    }

    #[test]
    fn impossible_event_keeps_prior() {
        let profile = LikelihoodProfile::new(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        let step = bayes_step(0.4, &profile, 1).unwrap();
        assert!(step.impossible);
        assert_eq!(step.posterior, 0.4);
        assert!(bayes_step(0.4, &profile, 2).is_err());
    }

    #[test]
    fn sender_side_examples() {
        // reaction-independent rows: prior is returned untouched
        let row = [0.4, 0.6];
        let (post, _) = sender_belief_update(SenderBelief::new(0.8).unwrap(), &row, &row, 1).unwrap();
        assert_eq!(post.prob_aware().to_bits(), 0.8f64.to_bits());

        // aware likelihood 0.3, unaware 0.5 on the observed state
        let (post, _) = sender_belief_update(SenderBelief::new(0.8).unwrap(), &[0.5, 0.5], &[0.7, 0.3], 1).unwrap();
        assert!((post.prob_aware() - 0.24 / 0.34).abs() < 1e-12);

        let (post, _) = sender_belief_update(SenderBelief::new(1.0).unwrap(), &[0.5, 0.5], &[0.7, 0.3], 1).unwrap();
        assert_eq!(post.prob_aware(), 1.0);
    }

    #[test]
    fn expected_next_belief_reference() {
        let profile = LikelihoodProfile::from_sender_rows(&BEN, &MAL).unwrap();
        let e = exact_expected_next_belief(0.01, &profile, true);
        // 0.3 * (0.003 / 0.201) + 0.7 * (0.007 / 0.799)
        let oracle = 0.3 * (0.003 / 0.201) + 0.7 * (0.007 / 0.799);
        assert!((e - oracle).abs() < 1e-15);
        assert!((e - 0.0106103).abs() < 1e-7);
        assert!(e >= 0.01);

        let same = LikelihoodProfile::new(&MAL, &MAL).unwrap();
        assert_eq!(exact_expected_next_belief(0.37, &same, true), 0.37);
        assert_eq!(exact_expected_next_belief(1.0, &profile, true), 1.0);
    }

    #[test]
    fn log_belief_values() {
        assert_eq!(log_belief(1.0).unwrap(), 0.0);
        assert!(matches!(log_belief(0.0), Err(BeliefError::LogDomain(_))));
        // -ln(100) from the alternating series of ln(1 + 1/99) and ln(99) = 2 ln 3 + ln 11,
        // checked against a direct atanh series instead of the libm path
        let atanh_ln = |y: f64| {
            let z = (y - 1.0) / (y + 1.0);
            let mut term = z;
            let mut sum = 0.0;
            for n in 0..200 {
                sum += term / (2 * n + 1) as f64;
                term *= z * z;
            }
            2.0 * sum
        };
        let oracle = -(atanh_ln(10.0) * 2.0);
        assert!((log_belief(0.01).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle + 4.605170185988091).abs() < 1e-12);
    }

    #[test]
    fn jensen_witness_at_least_one() {
        for prior in [0.01, 0.3, 0.9] {
            assert!(jensen_witness(prior, &MAL, &BEN) >= 1.0 - 1e-12);
            assert!(jensen_witness(prior, &BEN, &MAL) >= 1.0 - 1e-12);
        }
        assert!((jensen_witness(0.5, &MAL, &MAL) - 1.0).abs() < 1e-15);
    }
}
