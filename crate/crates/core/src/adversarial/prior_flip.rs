use rand::Rng;

use crate::error::{Error, Result};

/// One round of the prior-flip sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipRound {
    pub prior: f64,
    pub forecasts: Vec<f64>,
    pub r_star: f64,
    pub omega: bool,
}

/// Environment where the prior flips between `high` and `1 - high` with
/// probability 1/2 each round while every expert reports 1/2.
///
/// The benchmark forecast is the round's prior and the state is drawn from
/// it. The forecast profile carries no information about which prior is in
/// force, so an aggregator that is not told the prior can do no better than
/// 1/2 and pays `KL(high || 1/2)` per round; one that is told the prior can
/// forecast it exactly.
///
/// This is a demonstration, not a consistent Bayesian information
/// structure: reports of 1/2 are not the experts' true posteriors here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorFlipAdversary {
    n: usize,
    high: f64,
}

impl PriorFlipAdversary {
    pub fn new(n: usize, high: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("need at least one expert".into()));
        }
        if !(high > 0.5 && high < 1.0) {
            return Err(Error::Config(format!("high prior must lie in (1/2, 1), got {high}")));
        }
        Ok(Self { n, high })
    }

    /// Priors 0.9 and 0.1.
    pub fn standard(n: usize) -> Self {
        Self::new(n, 0.9).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn sample_round<R: Rng + ?Sized>(&self, rng: &mut R) -> FlipRound {
        let prior = if rng.random::<bool>() { self.high } else { 1.0 - self.high };
        let omega = rng.random::<f64>() < prior;
        FlipRound {
            prior,
            forecasts: vec![0.5; self.n],
            r_star: prior,
            omega,
        }
    }

    /// `T` rounds from one generator.
    pub fn sequence<R: Rng + ?Sized>(&self, rounds: usize, rng: &mut R) -> Vec<FlipRound> {
        (0..rounds).map(|_| self.sample_round(rng)).collect()
    }

    /// Per-round regret of the best forecast that ignores the prior.
    pub fn ignorant_floor(&self) -> f64 {
        crate::loglik::expected_regret(0.5, self.high)
    }
}
