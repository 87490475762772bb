use super::{Aggregator, AggregatorConfig, Diagnostics, DynamicPriorAware, Observation, PriorMode};
use crate::error::{Error, Result};

/// Prior-ignorant aggregator for a fixed information structure.
///
/// Phase 1 (the first `ceil(n sqrt(T) / sigma)` rounds) forecasts 1/2 without
/// looking at the profile and counts how often `omega = 1`. The resulting
/// estimate, clamped to `[1/T, 1 - 1/T]`, is then fed as the prior to a
/// [`DynamicPriorAware`] learner for the rest of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticPriorIgnorant {
    config: AggregatorConfig,
    phase1_len: u64,
    phase1_seen: u64,
    ones: u64,
    mu_hat: Option<f64>,
    inner: Option<DynamicPriorAware>,
    pending_phase1: bool,
}

impl StaticPriorIgnorant {
    pub fn new(config: AggregatorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            phase1_len: config.phase1_len(),
            config,
            phase1_seen: 0,
            ones: 0,
            mu_hat: None,
            inner: None,
            pending_phase1: false,
        })
    }

    pub fn phase1_len(&self) -> u64 {
        self.phase1_len
    }

    /// 1 while estimating the prior, 2 afterwards.
    pub fn phase(&self) -> u8 {
        if self.mu_hat.is_some() {
            2
        } else {
            1
        }
    }

    pub fn mu_hat(&self) -> Option<f64> {
        self.mu_hat
    }

    pub fn inner(&self) -> Option<&DynamicPriorAware> {
        self.inner.as_ref()
    }

    fn finish_phase1(&mut self) -> Result<()> {
        let horizon = self.config.horizon as f64;
        let raw = self.ones as f64 / self.phase1_len as f64;
        let mu_hat = raw.clamp(1.0 / horizon, 1.0 - 1.0 / horizon);
        self.mu_hat = Some(mu_hat);
        self.inner = Some(DynamicPriorAware::new(self.config)?);
        Ok(())
    }

    pub fn round(&mut self, forecasts: &[f64]) -> Result<f64> {
        match (&mut self.inner, self.mu_hat) {
            (Some(inner), Some(mu_hat)) => inner.round(forecasts, mu_hat),
            _ => {
                if self.pending_phase1 {
                    return Err(Error::Usage("forecast requested twice without an update".into()));
                }
                self.pending_phase1 = true;
                Ok(0.5)
            }
        }
    }

    pub fn observe(&mut self, omega: bool) -> Result<()> {
        if let Some(inner) = &mut self.inner {
            return inner.observe(omega);
        }
        if !self.pending_phase1 {
            return Err(Error::Usage("update without a pending forecast".into()));
        }
        self.pending_phase1 = false;
        self.phase1_seen += 1;
        self.ones += u64::from(omega);
        if self.phase1_seen == self.phase1_len {
            self.finish_phase1()?;
        }
        Ok(())
    }
}

impl Aggregator for StaticPriorIgnorant {
    fn name(&self) -> &'static str {
        "static"
    }

    fn prior_mode(&self) -> PriorMode {
        PriorMode::Ignorant
    }

    fn forecast(&mut self, obs: &Observation<'_>) -> Result<f64> {
        self.round(obs.forecasts)
    }

    fn update(&mut self, omega: bool) -> Result<()> {
        self.observe(omega)
    }

    fn diagnostics(&self) -> Diagnostics {
        let mut d = self.inner.as_ref().map(|i| i.diagnostics()).unwrap_or_default();
        d.estimated_prior = self.mu_hat;
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_one_ignores_profile() {
        let c = AggregatorConfig::new(2, 10_000, 1.0, 0.1).unwrap();
        let mut agg = StaticPriorIgnorant::new(c).unwrap();
        assert_eq!(agg.phase1_len(), 200);
        for t in 0..200 {
            assert_eq!(agg.round(&[f64::NAN, -3.0]).unwrap(), 0.5);
            agg.observe(t % 4 != 0).unwrap();
        }
        assert_eq!(agg.phase(), 2);
        assert!((agg.mu_hat().unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn counting_estimator() {
        // n sqrt(T) / sigma = 1 * 10 / 2.5 = 4
        let c = AggregatorConfig::new(1, 100, 2.5, 0.1).unwrap();
        let mut agg = StaticPriorIgnorant::new(c).unwrap();
        assert_eq!(agg.phase1_len(), 4);
        for omega in [true, true, false, true] {
            agg.round(&[0.5]).unwrap();
            agg.observe(omega).unwrap();
        }
        assert_eq!(agg.mu_hat(), Some(0.75));
        // phase 2 starts with h = 0, so the forecast is the estimated prior
        assert!((agg.round(&[0.3]).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn phase_one_length_example() {
        let c = AggregatorConfig::new(4, 10_000, 0.5, 0.1).unwrap();
        assert_eq!(StaticPriorIgnorant::new(c).unwrap().phase1_len(), 800);
    }

    #[test]
    fn all_zero_phase_one_is_clamped() {
        let c = AggregatorConfig::new(1, 100, 2.5, 0.1).unwrap();
        let mut agg = StaticPriorIgnorant::new(c).unwrap();
        for _ in 0..4 {
            agg.round(&[0.5]).unwrap();
            agg.observe(false).unwrap();
        }
        assert_eq!(agg.mu_hat(), Some(0.01));
    }

    #[test]
    fn usage_errors() {
        let c = AggregatorConfig::new(1, 100, 2.5, 0.1).unwrap();
        let mut agg = StaticPriorIgnorant::new(c).unwrap();
        assert!(agg.observe(true).is_err());
        agg.round(&[0.5]).unwrap();
        assert!(agg.round(&[0.5]).is_err());
    }
}
