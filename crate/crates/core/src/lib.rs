//! Learning to aggregate forecasts from experts who each see part of the
//! evidence.
//!
//! Signals are conditionally independent given a binary state, so the
//! Bayesian aggregate is linear in log-odds space. The aggregators here learn
//! that linear map online with projected gradient descent on a convex
//! surrogate of the logarithmic loss, and the harness measures their regret
//! against the full-information forecast.

pub mod adversarial;
pub mod aggregators;
pub mod error;
pub mod evidence;
pub mod harness;
pub mod loglik;
pub mod ogd;
pub mod spectral;

pub use aggregators::{
    Aggregator, AggregatorConfig, AggregatorKind, DynamicPriorAware, Observation, PriorMode,
    StaticPriorIgnorant,
};
pub use error::{Error, Result};
pub use evidence::{EvidenceMatrix, InformationStructure, RoundSample, SignalDistribution};
pub use harness::{run, RegretTrace, RunConfig};
pub use loglik::{expected_regret, log_odds, logit_inverse, LogOdds, SurrogateLossInstance};
pub use ogd::OgdState;
pub use spectral::SpectralReport;
