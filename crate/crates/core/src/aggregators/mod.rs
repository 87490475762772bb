//! Online aggregators sharing one round protocol: see the forecast profile
//! (and the prior, if prior-aware), emit a forecast, then observe the state.

mod baselines;
mod dynamic;
mod prior_ignorant;

use std::fmt;
use std::str::FromStr;

pub use baselines::{best_expert_hindsight, ConstantHalf, SimpleAverage};
pub use dynamic::DynamicPriorAware;
pub use prior_ignorant::StaticPriorIgnorant;

use crate::error::{Error, Result};

/// Whether an aggregator is told the current prior each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMode {
    Aware,
    Ignorant,
}

/// What an aggregator sees in a round. The prior is present only for
/// prior-aware aggregators.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub forecasts: &'a [f64],
    pub prior: Option<f64>,
}

/// Counters exposed for traces and tests.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    pub extreme_rounds: u64,
    pub non_extreme_rounds: u64,
    pub clipped_gradients: u64,
    pub prior_clamps: u64,
    /// Prior estimated by a prior-ignorant learner, once available.
    pub estimated_prior: Option<f64>,
}

pub trait Aggregator: Send {
    fn name(&self) -> &'static str;

    fn prior_mode(&self) -> PriorMode;

    /// Emits this round's forecast. Must be followed by exactly one `update`.
    fn forecast(&mut self, obs: &Observation<'_>) -> Result<f64>;

    /// Reveals the realized state for the round just forecast.
    fn update(&mut self, omega: bool) -> Result<()>;

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::default()
    }
}

/// Shared configuration of the learning aggregators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatorConfig {
    /// Number of experts.
    pub n: usize,
    /// Horizon `T`, known in advance.
    pub horizon: u64,
    /// Lower bound on `sigma_min(A)`; sets the ball radius.
    pub sigma: f64,
    /// Priors are assumed to lie in `[beta, 1 - beta]`.
    pub beta: f64,
    /// Use the doubling-trick OGD instead of the fixed-horizon step.
    pub doubling: bool,
}

impl AggregatorConfig {
    pub fn new(n: usize, horizon: u64, sigma: f64, beta: f64) -> Result<Self> {
        let c = Self {
            n,
            horizon,
            sigma,
            beta,
            doubling: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("need at least one expert".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(Error::Config(format!("beta must lie in (0, 1/2), got {}", self.beta)));
        }
        if self.n as f64 * self.tau() >= 0.5 {
            return Err(Error::Config(format!(
                "n * tau = {} must be below 1/2; need T > 4 n^2 = {}",
                self.n as f64 * self.tau(),
                4 * self.n * self.n
            )));
        }
        Ok(())
    }

    /// Extremeness threshold `tau = T^{-1/2}`.
    pub fn tau(&self) -> f64 {
        1.0 / (self.horizon as f64).sqrt()
    }

    /// Ball radius `W = sqrt(n) / sigma`.
    pub fn radius(&self) -> f64 {
        (self.n as f64).sqrt() / self.sigma
    }

    /// Bound `Z = sqrt(n) (ln(1/tau) + ln(1/beta))` on `|z~|` for non-extreme profiles.
    pub fn gradient_bound(&self) -> f64 {
        (self.n as f64).sqrt() * ((1.0 / self.tau()).ln() + (1.0 / self.beta).ln())
    }

    /// Phase 1 length of the prior-ignorant aggregator, `ceil(n sqrt(T) / sigma)`.
    pub fn phase1_len(&self) -> u64 {
        (self.n as f64 * (self.horizon as f64).sqrt() / self.sigma).ceil() as u64
    }

    /// Lower end of the interval every learning-aggregator forecast lies in.
    pub fn forecast_floor(&self) -> f64 {
        let mu_tilde_max = ((1.0 - self.beta) / self.beta).ln();
        let learned = crate::loglik::logit_inverse(-(self.radius() * self.gradient_bound() + mu_tilde_max));
        learned.min(self.n as f64 * self.tau())
    }
}

/// Shape of a forecast profile relative to `[tau, 1 - tau]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileClass {
    NonExtreme,
    /// Some forecast below `tau`, none above `1 - tau`.
    ExtremeLow,
    /// Some forecast above `1 - tau`, none below `tau`.
    ExtremeHigh,
    ExtremeBoth,
}

/// Non-extreme means every forecast lies in the closed interval `[tau, 1 - tau]`.
pub fn classify_profile(forecasts: &[f64], tau: f64) -> ProfileClass {
    let low = forecasts.iter().any(|&f| f < tau);
    let high = forecasts.iter().any(|&f| f > 1.0 - tau);
    match (low, high) {
        (false, false) => ProfileClass::NonExtreme,
        (true, false) => ProfileClass::ExtremeLow,
        (false, true) => ProfileClass::ExtremeHigh,
        (true, true) => ProfileClass::ExtremeBoth,
    }
}

/// Forecast issued on extreme profiles without learning: `n tau`, `1 - n tau` or `1/2`.
pub fn extreme_forecast(class: ProfileClass, n: usize, tau: f64) -> Result<f64> {
    let edge = n as f64 * tau;
    if edge >= 0.5 {
        return Err(Error::Config(format!("n * tau = {edge} must be below 1/2")));
    }
    match class {
        ProfileClass::ExtremeLow => Ok(edge),
        ProfileClass::ExtremeHigh => Ok(1.0 - edge),
        ProfileClass::ExtremeBoth => Ok(0.5),
        ProfileClass::NonExtreme => Err(Error::Usage("profile is not extreme".into())),
    }
}

/// Aggregators selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregatorKind {
    Dynamic,
    Static,
    Half,
    Average,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 4] = [Self::Dynamic, Self::Static, Self::Half, Self::Average];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dynamic => "dynamic",
            Self::Static => "static",
            Self::Half => "half",
            Self::Average => "average",
        }
    }

    /// Whether the aggregator uses the learning configuration.
    pub fn learns(self) -> bool {
        matches!(self, Self::Dynamic | Self::Static)
    }

    pub fn build(self, config: &AggregatorConfig) -> Result<Box<dyn Aggregator>> {
        Ok(match self {
            Self::Dynamic => Box::new(DynamicPriorAware::new(*config)?),
            Self::Static => Box::new(StaticPriorIgnorant::new(*config)?),
            Self::Half => Box::new(ConstantHalf),
            Self::Average => Box::new(SimpleAverage),
        })
    }
}

impl FromStr for AggregatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown aggregator `{s}` (dynamic|static|half|average)")))
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
