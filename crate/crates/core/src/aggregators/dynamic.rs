use super::{classify_profile, extreme_forecast, Aggregator, AggregatorConfig, Diagnostics, Observation, PriorMode, ProfileClass};
use crate::error::{Error, Result};
use crate::loglik::{log_odds, logit_inverse, surrogate_gradient, SurrogateLossInstance};
use crate::ogd::{DoublingOgd, OgdState};

#[derive(Debug, Clone, PartialEq)]
enum Learner {
    Fixed(OgdState),
    Doubling(DoublingOgd),
}

impl Learner {
    fn h(&self) -> &[f64] {
        match self {
            Learner::Fixed(s) => s.h(),
            Learner::Doubling(d) => d.h(),
        }
    }

    fn step(&self, gradient: &[f64]) -> Self {
        match self {
            Learner::Fixed(s) => Learner::Fixed(s.step(gradient)),
            Learner::Doubling(d) => Learner::Doubling(d.step(gradient)),
        }
    }

    fn clipped(&self) -> u64 {
        match self {
            Learner::Fixed(s) => s.clipped(),
            Learner::Doubling(d) => d.clipped(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Pending {
    Extreme,
    NonExtreme { z_tilde: Vec<f64>, mu_tilde: f64 },
}

/// Prior-aware aggregator for possibly changing information structures.
///
/// Non-extreme profiles are mapped to `z~ = logit(F) - logit(mu) 1` and
/// forecast as `logistic(h . z~ + logit(mu))`, with `h` learned by OGD on the
/// surrogate log loss. Extreme profiles get a fixed forecast and no update.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicPriorAware {
    config: AggregatorConfig,
    learner: Learner,
    frozen: bool,
    pending: Option<Pending>,
    extreme_rounds: u64,
    non_extreme_rounds: u64,
    prior_clamps: u64,
}

impl DynamicPriorAware {
    pub fn new(config: AggregatorConfig) -> Result<Self> {
        config.validate()?;
        let learner = if config.doubling {
            Learner::Doubling(DoublingOgd::new(config.n, config.radius(), config.gradient_bound())?)
        } else {
            Learner::Fixed(OgdState::new(
                config.n,
                config.radius(),
                config.gradient_bound(),
                config.horizon,
            )?)
        };
        Ok(Self {
            config,
            learner,
            frozen: false,
            pending: None,
            extreme_rounds: 0,
            non_extreme_rounds: 0,
            prior_clamps: 0,
        })
    }

    /// A non-learning variant pinned to `h` (projected onto the ball).
    /// With `h = h*` this reproduces the full-information forecast on
    /// non-extreme rounds.
    pub fn with_fixed_hypothesis(config: AggregatorConfig, h: Vec<f64>) -> Result<Self> {
        let mut agg = Self::new(AggregatorConfig {
            doubling: false,
            ..config
        })?;
        if let Learner::Fixed(s) = agg.learner {
            agg.learner = Learner::Fixed(s.with_h(h)?);
        }
        agg.frozen = true;
        Ok(agg)
    }

    pub fn config(&self) -> &AggregatorConfig {
        &self.config
    }

    pub fn h(&self) -> &[f64] {
        self.learner.h()
    }

    /// Forecast for a profile given the round's prior; stores what the update needs.
    pub fn round(&mut self, forecasts: &[f64], prior: f64) -> Result<f64> {
        if self.pending.is_some() {
            return Err(Error::Usage("forecast requested twice without an update".into()));
        }
        if forecasts.len() != self.config.n {
            return Err(Error::Dimension {
                expected: self.config.n,
                got: forecasts.len(),
            });
        }
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::Domain {
                value: prior,
                domain: "prior in (0, 1)",
            });
        }
        let beta = self.config.beta;
        let prior = if prior < beta || prior > 1.0 - beta {
            self.prior_clamps += 1;
            prior.clamp(beta, 1.0 - beta)
        } else {
            prior
        };

        let tau = self.config.tau();
        match classify_profile(forecasts, tau) {
            ProfileClass::NonExtreme => {
                let mu_tilde = log_odds(prior)?;
                let z_tilde = forecasts
                    .iter()
                    .map(|&f| log_odds(f).map(|v| v - mu_tilde))
                    .collect::<Result<Vec<f64>>>()?;
                let margin: f64 = self
                    .h()
                    .iter()
                    .zip(&z_tilde)
                    .map(|(h, z)| h * z)
                    .sum::<f64>()
                    + mu_tilde;
                self.non_extreme_rounds += 1;
                self.pending = Some(Pending::NonExtreme { z_tilde, mu_tilde });
                Ok(logit_inverse(margin))
            }
            class => {
                self.extreme_rounds += 1;
                self.pending = Some(Pending::Extreme);
                extreme_forecast(class, self.config.n, tau)
            }
        }
    }

    pub fn observe(&mut self, omega: bool) -> Result<()> {
        match self.pending.take() {
            None => Err(Error::Usage("update without a pending forecast".into())),
            Some(Pending::Extreme) => Ok(()),
            Some(Pending::NonExtreme { z_tilde, mu_tilde }) => {
                if !self.frozen {
                    let instance = SurrogateLossInstance::new(z_tilde, omega, mu_tilde);
                    let gradient = surrogate_gradient(&instance, self.h());
                    self.learner = self.learner.step(&gradient);
                }
                Ok(())
            }
        }
    }
}

impl Aggregator for DynamicPriorAware {
    fn name(&self) -> &'static str {
        "dynamic"
    }

    fn prior_mode(&self) -> PriorMode {
        PriorMode::Aware
    }

    fn forecast(&mut self, obs: &Observation<'_>) -> Result<f64> {
        let prior = obs
            .prior
            .ok_or_else(|| Error::Usage("prior-aware aggregator needs the prior".into()))?;
        self.round(obs.forecasts, prior)
    }

    fn update(&mut self, omega: bool) -> Result<()> {
        self.observe(omega)
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            extreme_rounds: self.extreme_rounds,
            non_extreme_rounds: self.non_extreme_rounds,
            clipped_gradients: self.learner.clipped(),
            prior_clamps: self.prior_clamps,
            estimated_prior: None,
        }
    }
}
