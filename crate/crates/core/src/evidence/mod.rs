//! Partial-evidence information structures and round simulation.

mod format;
mod matrix;
mod signal;
mod structure;

pub use format::{parse_structure, write_structure};
pub use matrix::EvidenceMatrix;
pub use signal::{SignalDistribution, SignalOutcome, MEAN_TOL, PROBABILITY_SUM_TOL};
pub use structure::{pool_posteriors, InformationStructure, RoundSample, BRUTE_FORCE_MAX_SIGNALS};
