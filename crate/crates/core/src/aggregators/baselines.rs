use super::{Aggregator, Observation, PriorMode};
use crate::error::{Error, Result};
use crate::loglik::realized_log_loss;

/// Always forecasts 1/2; its per-round regret never exceeds `ln 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantHalf;

impl Aggregator for ConstantHalf {
    fn name(&self) -> &'static str {
        "half"
    }

    fn prior_mode(&self) -> PriorMode {
        PriorMode::Ignorant
    }

    fn forecast(&mut self, _obs: &Observation<'_>) -> Result<f64> {
        Ok(0.5)
    }

    fn update(&mut self, _omega: bool) -> Result<()> {
        Ok(())
    }
}

/// Arithmetic mean of the experts' forecasts.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimpleAverage;

impl Aggregator for SimpleAverage {
    fn name(&self) -> &'static str {
        "average"
    }

    fn prior_mode(&self) -> PriorMode {
        PriorMode::Ignorant
    }

    fn forecast(&mut self, obs: &Observation<'_>) -> Result<f64> {
        if obs.forecasts.is_empty() {
            return Err(Error::Usage("empty forecast profile".into()));
        }
        Ok(obs.forecasts.iter().sum::<f64>() / obs.forecasts.len() as f64)
    }

    fn update(&mut self, _omega: bool) -> Result<()> {
        Ok(())
    }
}

/// Expert with the smallest cumulative realized log loss over a finished run.
/// `profiles[t][i]` is expert `i`'s forecast in round `t`.
pub fn best_expert_hindsight(profiles: &[Vec<f64>], outcomes: &[bool]) -> Option<usize> {
    let n = profiles.first()?.len();
    let mut totals = vec![0.0; n];
    for (profile, &omega) in profiles.iter().zip(outcomes) {
        for (total, &f) in totals.iter_mut().zip(profile) {
            *total += realized_log_loss(f, omega);
        }
    }
    totals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}
