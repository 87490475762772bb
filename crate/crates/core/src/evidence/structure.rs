use rand::Rng;

use super::{EvidenceMatrix, SignalDistribution};
use crate::error::{Error, Result};
use crate::loglik::{log_odds, logit_inverse};

/// Largest signal count the brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_SIGNALS: usize = 20;

/// A partial-evidence information structure: prior, conditionally
/// independent signals and the evidence matrix saying who sees what.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationStructure {
    prior: f64,
    mu_tilde: f64,
    signals: Vec<SignalDistribution>,
    evidence: EvidenceMatrix,
}

/// One simulated round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSample {
    pub omega: bool,
    pub signal_outcomes: Vec<usize>,
    /// `x_j(s_j)` for every signal.
    pub posteriors: Vec<f64>,
    /// `F_i` for every expert.
    pub expert_forecasts: Vec<f64>,
    /// Full-information Bayesian forecast `r*(s)`.
    pub r_star: f64,
}

/// Pools conditionally independent posteriors that share the prior `mu`,
/// in log-odds space: `logistic(sum_j (logit x_j - logit mu) + logit mu)`.
///
/// A posterior of exactly 0 or 1 is treated as certainty. Certainty in both
/// directions at once describes an impossible profile and is rejected.
pub fn pool_posteriors(mu: f64, posteriors: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mu_tilde = log_odds(mu)?;
    let mut sum = 0.0;
    let (mut certain0, mut certain1) = (false, false);
    for x in posteriors {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                value: x,
                domain: "posterior in [0, 1]",
            });
        }
        if x == 0.0 {
            certain0 = true;
        } else if x == 1.0 {
            certain1 = true;
        } else {
            sum += log_odds(x)? - mu_tilde;
        }
    }
    match (certain0, certain1) {
        (true, true) => Err(Error::InvalidStructure(
            "posteriors 0 and 1 in the same profile".into(),
        )),
        (true, false) => Ok(0.0),
        (false, true) => Ok(1.0),
        (false, false) => Ok(logit_inverse(sum + mu_tilde)),
    }
}

impl InformationStructure {
    pub fn new(prior: f64, signals: Vec<SignalDistribution>, evidence: EvidenceMatrix) -> Result<Self> {
        let mu_tilde = log_odds(prior)?;
        if signals.len() != evidence.m() {
            return Err(Error::Dimension {
                expected: evidence.m(),
                got: signals.len(),
            });
        }
        if let Some(j) = signals.iter().position(|s| s.prior() != prior) {
            return Err(Error::InvalidStructure(format!(
                "signal {j} was built with prior {} but the structure prior is {prior}",
                signals[j].prior()
            )));
        }
        if let Some(i) = (0..evidence.n()).find(|&i| evidence.observed(i).is_empty()) {
            return Err(Error::InvalidStructure(format!("expert {i} observes no signal")));
        }
        Ok(Self {
            prior,
            mu_tilde,
            signals,
            evidence,
        })
    }

    /// Builds every signal from a posterior support `(x, w)` via the splitting lemma.
    pub fn from_posteriors(
        prior: f64,
        supports: &[Vec<(f64, f64)>],
        evidence: EvidenceMatrix,
    ) -> Result<Self> {
        let signals = supports
            .iter()
            .map(|s| SignalDistribution::from_posteriors(prior, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(prior, signals, evidence)
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn mu_tilde(&self) -> f64 {
        self.mu_tilde
    }

    pub fn signals(&self) -> &[SignalDistribution] {
        &self.signals
    }

    pub fn evidence(&self) -> &EvidenceMatrix {
        &self.evidence
    }

    pub fn n(&self) -> usize {
        self.evidence.n()
    }

    pub fn m(&self) -> usize {
        self.evidence.m()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.m() {
            return Err(Error::Dimension {
                expected: self.m(),
                got: len,
            });
        }
        Ok(())
    }

    /// Full-information forecast `r*(s)` from the per-signal posteriors.
    pub fn optimal_forecast(&self, posteriors: &[f64]) -> Result<f64> {
        self.check_len(posteriors.len())?;
        pool_posteriors(self.prior, posteriors.iter().copied())
    }

    /// Expert `i`'s forecast: the same pooling restricted to `A_i`.
    pub fn expert_forecast(&self, expert: usize, posteriors: &[f64]) -> Result<f64> {
        self.check_len(posteriors.len())?;
        if expert >= self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: expert,
            });
        }
        pool_posteriors(
            self.prior,
            self.evidence.observed(expert).iter().map(|&j| posteriors[j]),
        )
    }

    /// Fills a round from a realized state and signal profile.
    pub fn round_from_outcomes(&self, omega: bool, signal_outcomes: Vec<usize>) -> RoundSample {
        assert_eq!(signal_outcomes.len(), self.m(), "one outcome per signal");
        let ys: Vec<f64> = signal_outcomes
            .iter()
            .zip(&self.signals)
            .map(|(&k, s)| s.y_tilde(k))
            .collect();
        let posteriors = signal_outcomes
            .iter()
            .zip(&self.signals)
            .map(|(&k, s)| s.posterior(k))
            .collect();
        let pooled = |idx: &mut dyn Iterator<Item = usize>| -> f64 {
            let total: f64 = idx.map(|j| ys[j]).sum();
            logit_inverse(total + self.mu_tilde)
        };
        let expert_forecasts = (0..self.n())
            .map(|i| pooled(&mut self.evidence.observed(i).iter().copied()))
            .collect();
        let r_star = pooled(&mut (0..self.m()));
        RoundSample {
            omega,
            signal_outcomes,
            posteriors,
            expert_forecasts,
            r_star,
        }
    }

    /// Draws `omega ~ Bernoulli(mu)`, then each signal independently from `C_j^omega`.
    pub fn sample_round<R: Rng + ?Sized>(&self, rng: &mut R) -> RoundSample {
        let omega = rng.random::<f64>() < self.prior;
        let outcomes = self.signals.iter().map(|s| s.sample(omega, rng)).collect();
        self.round_from_outcomes(omega, outcomes)
    }

    /// Probability of a full signal profile, `sum_omega P(omega) prod_j P(s_j | omega)`.
    pub fn profile_probability(&self, signal_outcomes: &[usize]) -> f64 {
        let (p1, p0) = self.joint(signal_outcomes.iter().copied().enumerate());
        p1 + p0
    }

    fn joint(&self, outcomes: impl Iterator<Item = (usize, usize)>) -> (f64, f64) {
        let mut p1 = self.prior;
        let mut p0 = 1.0 - self.prior;
        for (j, k) in outcomes {
            p1 *= self.signals[j].likelihood(k, true);
            p0 *= self.signals[j].likelihood(k, false);
        }
        (p1, p0)
    }

    /// `P(omega = 1 | s)` by conditioning the joint distribution directly.
    /// Independent of the log-odds path; used as a cross-check.
    pub fn brute_force_optimal(&self, signal_outcomes: &[usize]) -> f64 {
        assert!(self.m() <= BRUTE_FORCE_MAX_SIGNALS, "oracle limited to 20 signals");
        let (p1, p0) = self.joint(signal_outcomes.iter().copied().enumerate());
        p1 / (p1 + p0)
    }

    /// `P(omega = 1 | s_{A_i})` by direct conditioning.
    pub fn brute_force_expert(&self, expert: usize, signal_outcomes: &[usize]) -> f64 {
        let (p1, p0) = self.joint(
            self.evidence
                .observed(expert)
                .iter()
                .map(|&j| (j, signal_outcomes[j])),
        );
        p1 / (p1 + p0)
    }

    /// Every signal profile with positive probability, as `(profile, probability)`.
    pub fn enumerate_profiles(&self) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        let mut profile = vec![0usize; self.m()];
        loop {
            let p = self.profile_probability(&profile);
            if p > 0.0 {
                out.push((profile.clone(), p));
            }
            // odometer increment
            let mut j = 0;
            loop {
                if j == self.m() {
                    return out;
                }
                profile[j] += 1;
                if profile[j] < self.signals[j].len() {
                    break;
                }
                profile[j] = 0;
                j += 1;
            }
        }
    }

    /// Number of distinct signal profiles.
    pub fn profile_count(&self) -> f64 {
        self.signals.iter().map(|s| s.len() as f64).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversarial::example1;

    #[test]
    fn example_one_forecasts() {
        let s = example1();
        let r = s.round_from_outcomes(true, vec![0, 1, 0]);
        assert!((r.expert_forecasts[0] - 0.5).abs() < 1e-12);
        assert!((r.expert_forecasts[1] - 0.5).abs() < 1e-12);
        assert!((r.r_star - 0.25).abs() < 1e-12);

        let r = s.round_from_outcomes(false, vec![1, 1, 0]);
        assert!((r.expert_forecasts[0] - 0.9).abs() < 1e-12);
        assert!((r.expert_forecasts[1] - 0.5).abs() < 1e-12);
        assert!((r.r_star - 0.75).abs() < 1e-12);
        assert!((s.brute_force_optimal(&[1, 1, 0]) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn pooling_examples() {
        assert!((pool_posteriors(0.5, [0.25, 0.75, 0.25]).unwrap() - 0.25).abs() < 1e-12);
        assert!((pool_posteriors(0.5, [0.75, 0.75, 0.25]).unwrap() - 0.75).abs() < 1e-12);
        assert!((pool_posteriors(0.5, [0.25, 0.75]).unwrap() - 0.5).abs() < 1e-12);
        assert!((pool_posteriors(0.5, [0.75, 0.75]).unwrap() - 0.9).abs() < 1e-12);
        assert!((pool_posteriors(0.3, [0.62]).unwrap() - 0.62).abs() < 1e-12);
        assert_eq!(pool_posteriors(0.5, [0.3, 0.0]).unwrap(), 0.0);
        assert_eq!(pool_posteriors(0.5, [1.0, 0.7]).unwrap(), 1.0);
        assert!(pool_posteriors(0.5, [1.0, 0.0]).is_err());
        assert!(pool_posteriors(0.5, [1.2]).is_err());
    }

    #[test]
    fn structure_forecast_api() {
        let s = example1();
        assert!((s.optimal_forecast(&[0.25, 0.75, 0.25]).unwrap() - 0.25).abs() < 1e-12);
        assert!((s.expert_forecast(0, &[0.25, 0.75, 0.9]).unwrap() - 0.5).abs() < 1e-12);
        assert!((s.expert_forecast(0, &[0.75, 0.75, 0.1]).unwrap() - 0.9).abs() < 1e-12);
        assert!(s.optimal_forecast(&[0.5, 0.5]).is_err());
        assert!(s.expert_forecast(2, &[0.5; 3]).is_err());
    }

    #[test]
    fn single_signal_expert_is_optimal() {
        let sig = SignalDistribution::from_pairs(0.3, &[(0.1, 0.6), (0.9, 0.4)]).unwrap();
        let s = InformationStructure::new(0.3, vec![sig], EvidenceMatrix::identity(1).unwrap()).unwrap();
        for k in 0..2 {
            let r = s.round_from_outcomes(true, vec![k]);
            assert_eq!(r.expert_forecasts[0], r.r_star);
            assert!((r.r_star - r.posteriors[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn uninformative_signals_give_prior() {
        let sigs = vec![SignalDistribution::uninformative(0.37).unwrap(); 2];
        let s = InformationStructure::new(0.37, sigs, EvidenceMatrix::identity(2).unwrap()).unwrap();
        assert!((s.brute_force_optimal(&[0, 0]) - 0.37).abs() < 1e-15);
        assert!((s.round_from_outcomes(false, vec![0, 0]).r_star - 0.37).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_structures() {
        let sig = SignalDistribution::uninformative(0.5).unwrap();
        let empty_row = EvidenceMatrix::from_rows(&[vec![1], vec![0]]).unwrap();
        assert!(InformationStructure::new(0.5, vec![sig.clone()], empty_row).is_err());
        let id2 = EvidenceMatrix::identity(2).unwrap();
        assert!(InformationStructure::new(0.5, vec![sig.clone()], id2.clone()).is_err());
        let other = SignalDistribution::uninformative(0.4).unwrap();
        assert!(InformationStructure::new(0.5, vec![sig, other], id2).is_err());
    }

    #[test]
    fn example_one_profile_probability() {
        let s = example1();
        assert!((s.profile_probability(&[0, 1, 0]) - 3.0 / 32.0).abs() < 1e-15);
        assert!((s.profile_probability(&[1, 0, 1]) - 3.0 / 32.0).abs() < 1e-15);
        let total: f64 = s.enumerate_profiles().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
