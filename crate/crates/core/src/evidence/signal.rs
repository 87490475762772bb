use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance for conditional probabilities summing to one.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;
/// Tolerance for a posterior support's weighted mean matching the prior.
pub const MEAN_TOL: f64 = 1e-10;

/// One realization of a signal: its likelihood under each state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalOutcome {
    pub p_given_omega1: f64,
    pub p_given_omega0: f64,
}

/// A finite signal `s_j` correlated with the binary state.
///
/// Built against a prior; posteriors are derived from the likelihoods and the
/// prior, never stored independently of them.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDistribution {
    prior: f64,
    outcomes: Vec<SignalOutcome>,
    posteriors: Vec<f64>,
    // logit(x) - logit(mu) per outcome; infinite for degenerate posteriors.
    y_tilde: Vec<f64>,
    cdf1: Vec<f64>,
    cdf0: Vec<f64>,
}

fn cumulative(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

fn logit_or_infinite(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        p.ln() - (-p).ln_1p()
    }
}

impl SignalDistribution {
    /// Builds a signal from `(P(s | omega = 1), P(s | omega = 0))` pairs.
    pub fn new(prior: f64, outcomes: Vec<SignalOutcome>) -> Result<Self> {
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::Domain {
                value: prior,
                domain: "prior in (0, 1)",
            });
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidSignal("no outcomes".into()));
        }
        for (k, o) in outcomes.iter().enumerate() {
            let in_unit = |p: f64| (0.0..=1.0).contains(&p);
            if !in_unit(o.p_given_omega1) || !in_unit(o.p_given_omega0) {
                return Err(Error::InvalidSignal(format!(
                    "outcome {k} has a probability outside [0, 1]"
                )));
            }
            if o.p_given_omega1 == 0.0 && o.p_given_omega0 == 0.0 {
                return Err(Error::InvalidSignal(format!("outcome {k} has zero probability")));
            }
        }
        let s1: f64 = outcomes.iter().map(|o| o.p_given_omega1).sum();
        let s0: f64 = outcomes.iter().map(|o| o.p_given_omega0).sum();
        if (s1 - 1.0).abs() > PROBABILITY_SUM_TOL || (s0 - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::InvalidSignal(format!(
                "conditional probabilities sum to {s1} (omega=1) and {s0} (omega=0)"
            )));
        }

        let posteriors: Vec<f64> = outcomes
            .iter()
            .map(|o| {
                let a = prior * o.p_given_omega1;
                a / (a + (1.0 - prior) * o.p_given_omega0)
            })
            .collect();
        let mu_tilde = logit_or_infinite(prior);
        let y_tilde = posteriors.iter().map(|&x| logit_or_infinite(x) - mu_tilde).collect();
        Ok(Self {
            prior,
            cdf1: cumulative(outcomes.iter().map(|o| o.p_given_omega1)),
            cdf0: cumulative(outcomes.iter().map(|o| o.p_given_omega0)),
            outcomes,
            posteriors,
            y_tilde,
        })
    }

    /// Convenience constructor from `(p1, p0)` tuples.
    pub fn from_pairs(prior: f64, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            prior,
            pairs
                .iter()
                .map(|&(p_given_omega1, p_given_omega0)| SignalOutcome {
                    p_given_omega1,
                    p_given_omega0,
                })
                .collect(),
        )
    }

    /// Splitting-lemma construction: the signal whose posterior equals `x`
    /// with ex-ante probability `w`, for each `(x, w)` in `support`.
    ///
    /// Uses `P(s | 1) = x w / mu` and `P(s | 0) = (1 - x) w / (1 - mu)`.
    pub fn from_posteriors(prior: f64, support: &[(f64, f64)]) -> Result<Self> {
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::Domain {
                value: prior,
                domain: "prior in (0, 1)",
            });
        }
        if support.is_empty() {
            return Err(Error::InvalidSignal("empty posterior support".into()));
        }
        if support.iter().any(|&(x, w)| !(0.0..=1.0).contains(&x) || !(w > 0.0)) {
            return Err(Error::InvalidSignal(
                "posteriors must lie in [0, 1] and weights must be positive".into(),
            ));
        }
        let total: f64 = support.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > MEAN_TOL {
            return Err(Error::InvalidSignal(format!("weights sum to {total}, not 1")));
        }
        let mean: f64 = support.iter().map(|&(x, w)| x * w).sum();
        if (mean - prior).abs() > MEAN_TOL {
            return Err(Error::InvalidSignal(format!(
                "posterior mean {mean} does not match the prior {prior}"
            )));
        }
        let pairs: Vec<(f64, f64)> = support
            .iter()
            .map(|&(x, w)| (x * w / prior, (1.0 - x) * w / (1.0 - prior)))
            .collect();
        // absorb rounding so the conditionals sum to one exactly enough
        let s1: f64 = pairs.iter().map(|p| p.0).sum();
        let s0: f64 = pairs.iter().map(|p| p.1).sum();
        let pairs: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (a / s1, b / s0)).collect();
        Self::from_pairs(prior, &pairs)
    }

    /// A single-outcome signal carrying no information.
    pub fn uninformative(prior: f64) -> Result<Self> {
        Self::from_pairs(prior, &[(1.0, 1.0)])
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn outcomes(&self) -> &[SignalOutcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// `x(s) = P(omega = 1 | s)`.
    pub fn posterior(&self, outcome: usize) -> f64 {
        self.posteriors[outcome]
    }

    pub fn posteriors(&self) -> &[f64] {
        &self.posteriors
    }

    /// Prior-adjusted log-likelihood `logit(x(s)) - logit(mu)`.
    pub fn y_tilde(&self, outcome: usize) -> f64 {
        self.y_tilde[outcome]
    }

    /// Ex-ante probability of an outcome.
    pub fn marginal(&self, outcome: usize) -> f64 {
        let o = self.outcomes[outcome];
        self.prior * o.p_given_omega1 + (1.0 - self.prior) * o.p_given_omega0
    }

    pub fn likelihood(&self, outcome: usize, omega: bool) -> f64 {
        let o = self.outcomes[outcome];
        if omega {
            o.p_given_omega1
        } else {
            o.p_given_omega0
        }
    }

    /// Expected posterior; equals the prior up to rounding.
    pub fn posterior_mean(&self) -> f64 {
        (0..self.len()).map(|k| self.marginal(k) * self.posterior(k)).sum()
    }

    /// Draws an outcome index from `C_j^omega`.
    pub fn sample<R: Rng + ?Sized>(&self, omega: bool, rng: &mut R) -> usize {
        let cdf = if omega { &self.cdf1 } else { &self.cdf0 };
        let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
        cdf.iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| {
                // u landed on the top edge; take the last outcome with mass
                (0..cdf.len())
                    .rev()
                    .find(|&k| self.likelihood(k, omega) > 0.0)
                    .expect("a conditional distribution has positive mass")
            })
    }
}
