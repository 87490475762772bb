//! Log-likelihood (log-odds) space.
//!
//! Under conditional independence the Bayesian aggregate is linear in
//! log-odds: with `y_j = logit(x_j) - logit(mu)` the optimal forecast has
//! log-odds `sum(y) + logit(mu)` and expert `i` reports `sum_{j in A_i} y_j + logit(mu)`.
//! The logarithmic loss of a forecast `logistic(h . z + mu~)` is convex in `h`,
//! which is what the online learner exploits.

use crate::error::{Error, Result};

/// Forecasts are clamped to `[LOSS_CLAMP, 1 - LOSS_CLAMP]` before taking logarithms.
pub const LOSS_CLAMP: f64 = 1e-12;

/// A log-odds value `ln(p / (1 - p))`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct LogOdds(pub f64);

impl LogOdds {
    pub fn from_probability(p: f64) -> Result<Self> {
        log_odds(p).map(LogOdds)
    }

    pub fn probability(self) -> f64 {
        logit_inverse(self.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `ln(p / (1 - p))` for `p` strictly inside `(0, 1)`.
pub fn log_odds(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            value: p,
            domain: "(0, 1)",
        });
    }
    Ok(p.ln() - (-p).ln_1p())
}

/// The logistic function `1 / (1 + exp(-w))`, evaluated without overflow.
pub fn logit_inverse(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))` via `max(x, 0) + ln(1 + exp(-|x|))`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Log-odds of the full-information forecast: `sum(y) + mu~`.
pub fn optimal_log_odds(y_tilde: &[f64], mu_tilde: f64) -> f64 {
    y_tilde.iter().sum::<f64>() + mu_tilde
}

/// One round's surrogate loss data: the prior-shifted log-odds profile
/// `z~ = F~ - mu~ 1`, the realized state and the prior's log-odds.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateLossInstance {
    pub z_tilde: Vec<f64>,
    pub omega: bool,
    pub mu_tilde: f64,
}

impl SurrogateLossInstance {
    pub fn new(z_tilde: Vec<f64>, omega: bool, mu_tilde: f64) -> Self {
        Self {
            z_tilde,
            omega,
            mu_tilde,
        }
    }

    /// Log-odds of the forecast issued by hypothesis `h`.
    pub fn margin(&self, h: &[f64]) -> f64 {
        dot(h, &self.z_tilde) + self.mu_tilde
    }
}

/// `(1 - omega) u + ln(1 + exp(-u))` with `u = h . z~ + mu~`.
///
/// This equals the realized logarithmic loss of the forecast `logistic(u)`,
/// so its expectation over `omega` is the expected logarithmic loss.
pub fn surrogate_loss(instance: &SurrogateLossInstance, h: &[f64]) -> f64 {
    let u = instance.margin(h);
    let linear = if instance.omega { 0.0 } else { u };
    linear + softplus(-u)
}

/// Gradient of [`surrogate_loss`] in `h`: `((1 - omega) - logistic(-u)) z~`.
pub fn surrogate_gradient(instance: &SurrogateLossInstance, h: &[f64]) -> Vec<f64> {
    let u = instance.margin(h);
    let indicator = if instance.omega { 0.0 } else { 1.0 };
    let coef = indicator - logit_inverse(-u);
    instance.z_tilde.iter().map(|z| coef * z).collect()
}

fn clamp_forecast(r: f64) -> f64 {
    r.clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP)
}

/// Realized logarithmic loss `-ln r` if `omega = 1`, `-ln(1 - r)` otherwise.
pub fn realized_log_loss(r: f64, omega: bool) -> f64 {
    let r = clamp_forecast(r);
    if omega {
        -r.ln()
    } else {
        -(-r).ln_1p()
    }
}

/// Cross-entropy `-r* ln r - (1 - r*) ln(1 - r)`.
pub fn expected_log_loss(r: f64, r_star: f64) -> f64 {
    let r = clamp_forecast(r);
    let mut loss = 0.0;
    if r_star > 0.0 {
        loss -= r_star * r.ln();
    }
    if r_star < 1.0 {
        loss -= (1.0 - r_star) * (-r).ln_1p();
    }
    loss
}

/// Per-round expected regret `L(r) - L(r*)`, i.e. the binary divergence `KL(r* || r)`.
pub fn expected_regret(r: f64, r_star: f64) -> f64 {
    let r = clamp_forecast(r);
    let mut kl = 0.0;
    if r_star > 0.0 {
        kl += r_star * (r_star / r).ln();
    }
    if r_star < 1.0 {
        kl += (1.0 - r_star) * ((1.0 - r_star) / (1.0 - r)).ln();
    }
    kl.max(0.0)
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    expected_log_loss(p, p)
}
