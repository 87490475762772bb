//! Concrete environments built from an [`EnvironmentSpec`].

use std::cell::Cell;

use rand::Rng;

use super::config::{EnvironmentSpec, MatrixChoice};
use crate::adversarial::{example1, proposition1_instance_scaled, PriorFlipAdversary};
use crate::error::{Error, Result};
use crate::evidence::{EvidenceMatrix, InformationStructure, SignalDistribution};

/// Rejection-sampling budget for random evidence matrices.
pub const MAX_MATRIX_ATTEMPTS: usize = 10_000;

/// Round data the aggregator must not see. Every read is counted so runs
/// can prove that no read happened while the aggregator was active.
#[derive(Debug)]
pub struct SealedOracle {
    r_star: f64,
    omega: bool,
    reads: Cell<u64>,
}

impl SealedOracle {
    fn new(r_star: f64, omega: bool) -> Self {
        Self {
            r_star,
            omega,
            reads: Cell::new(0),
        }
    }

    pub fn r_star(&self) -> f64 {
        self.reads.set(self.reads.get() + 1);
        self.r_star
    }

    pub fn omega(&self) -> bool {
        self.reads.set(self.reads.get() + 1);
        self.omega
    }

    pub fn reads(&self) -> u64 {
        self.reads.get()
    }
}

/// One round as produced by an environment.
#[derive(Debug)]
pub struct EnvRound {
    pub forecasts: Vec<f64>,
    pub prior: f64,
    pub oracle: SealedOracle,
}

/// A source of rounds.
#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    Fixed(InformationStructure),
    /// One structure drawn uniformly per round.
    Switching(Vec<InformationStructure>),
    Flip(PriorFlipAdversary),
}

impl Environment {
    /// Builds the environment; randomness (matrices, signals) comes from `rng`.
    pub fn build<R: Rng + ?Sized>(spec: &EnvironmentSpec, rng: &mut R) -> Result<Self> {
        match spec {
            EnvironmentSpec::Example1 => Ok(Self::Fixed(example1())),
            EnvironmentSpec::Structures(list) => {
                let n = list[0].n();
                if list.iter().any(|s| s.n() != n) {
                    return Err(Error::Config("all structures must have the same number of experts".into()));
                }
                Ok(if list.len() == 1 {
                    Self::Fixed(list[0].clone())
                } else {
                    Self::Switching(list.clone())
                })
            }
            EnvironmentSpec::Random {
                matrix,
                outcomes,
                priors,
                posterior_floor,
            } => {
                if priors.is_empty() {
                    return Err(Error::Config("need at least one prior".into()));
                }
                let evidence = match matrix {
                    MatrixChoice::Identity(n) => EvidenceMatrix::identity(*n)?,
                    MatrixChoice::Given(a) => a.clone(),
                    MatrixChoice::Random { n, m, sigma_floor } => {
                        random_injective_matrix(*n, *m, *sigma_floor, rng)?.0
                    }
                };
                let mut structures = priors
                    .iter()
                    .map(|&mu| random_signals(evidence.clone(), *outcomes, mu, *posterior_floor, rng))
                    .collect::<Result<Vec<_>>>()?;
                Ok(if structures.len() == 1 {
                    Self::Fixed(structures.remove(0))
                } else {
                    Self::Switching(structures)
                })
            }
            EnvironmentSpec::Proposition1 { evidence, scale } => {
                let inst = proposition1_instance_scaled(evidence, *scale)?.ok_or_else(|| {
                    Error::Config("matrix has no kernel vector with nonzero sum".into())
                })?;
                Ok(Self::Fixed(inst.structure))
            }
            EnvironmentSpec::PriorFlip { n, high } => Ok(Self::Flip(PriorFlipAdversary::new(*n, *high)?)),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Fixed(s) => s.n(),
            Self::Switching(list) => list[0].n(),
            Self::Flip(adv) => adv.n(),
        }
    }

    /// Smallest `sigma_min` over the environment's matrices. The prior-flip
    /// environment has no evidence matrix and reports 1.
    pub fn sigma_min(&self) -> f64 {
        match self {
            Self::Fixed(s) => s.evidence().sigma_min(),
            Self::Switching(list) => list
                .iter()
                .map(|s| s.evidence().sigma_min())
                .fold(f64::INFINITY, f64::min),
            Self::Flip(_) => 1.0,
        }
    }

    pub fn next_round<R: Rng + ?Sized>(&self, rng: &mut R) -> EnvRound {
        let from_structure = |s: &InformationStructure, rng: &mut R| {
            let r = s.sample_round(rng);
            EnvRound {
                forecasts: r.expert_forecasts,
                prior: s.prior(),
                oracle: SealedOracle::new(r.r_star, r.omega),
            }
        };
        match self {
            Self::Fixed(s) => from_structure(s, rng),
            Self::Switching(list) => {
                let k = rng.random_range(0..list.len());
                from_structure(&list[k], rng)
            }
            Self::Flip(adv) => {
                let r = adv.sample_round(rng);
                EnvRound {
                    forecasts: r.forecasts,
                    prior: r.prior,
                    oracle: SealedOracle::new(r.r_star, r.omega),
                }
            }
        }
    }
}

/// Rejection-samples `n x m` Bernoulli(1/2) matrices with nonempty rows
/// until `sigma_min >= floor`. Returns the matrix and the attempts used.
pub fn random_injective_matrix<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    floor: f64,
    rng: &mut R,
) -> Result<(EvidenceMatrix, usize)> {
    if m == 0 || m > n {
        return Err(Error::Config(format!("need 1 <= m <= n, got n={n}, m={m}")));
    }
    for attempt in 1..=MAX_MATRIX_ATTEMPTS {
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|_| (0..m).map(|_| u8::from(rng.random::<bool>())).collect())
            .collect();
        if rows.iter().any(|r| r.iter().all(|&x| x == 0)) {
            continue;
        }
        let a = EvidenceMatrix::from_rows(&rows)?;
        if a.sigma_min() >= floor {
            return Ok((a, attempt));
        }
    }
    Err(Error::GaveUp {
        attempts: MAX_MATRIX_ATTEMPTS,
        reason: format!("no {n}x{m} 0/1 matrix with sigma_min >= {floor}"),
    })
}

/// Random signals on a given matrix: each signal has `outcomes` posteriors
/// drawn in `[floor, 1 - floor]` with random weights, then shrunk towards
/// their mean and shifted so the mean is exactly `mu`.
pub fn random_signals<R: Rng + ?Sized>(
    evidence: EvidenceMatrix,
    outcomes: usize,
    mu: f64,
    floor: f64,
    rng: &mut R,
) -> Result<InformationStructure> {
    if outcomes == 0 {
        return Err(Error::Config("signals need at least one outcome".into()));
    }
    if !(floor > 0.0 && floor < mu && mu < 1.0 - floor) {
        return Err(Error::Config(format!(
            "prior {mu} must lie strictly inside [{floor}, {}]",
            1.0 - floor
        )));
    }
    let (lo, hi) = (floor, 1.0 - floor);
    let signals = (0..evidence.m())
        .map(|_| {
            let xs: Vec<f64> = (0..outcomes).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
            let raw: Vec<f64> = (0..outcomes).map(|_| 0.1 + rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let ws: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let mean: f64 = xs.iter().zip(&ws).map(|(x, w)| x * w).sum();
            // x' = mu + s (x - mean), with s <= 1 keeping every x' in [lo, hi]
            let s = xs.iter().fold(1.0f64, |s, &x| {
                let d = x - mean;
                if d > 0.0 {
                    s.min((hi - mu) / d)
                } else if d < 0.0 {
                    s.min((lo - mu) / d)
                } else {
                    s
                }
            });
            let support: Vec<(f64, f64)> = xs
                .iter()
                .zip(&ws)
                .map(|(&x, &w)| (mu + s * (x - mean), w))
                .collect();
            SignalDistribution::from_posteriors(mu, &support)
        })
        .collect::<Result<Vec<_>>>()?;
    InformationStructure::new(mu, signals, evidence)
}

/// A random structure over a rejection-sampled matrix with `sigma_min >= floor`.
pub fn random_injective_environment<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    outcomes: usize,
    floor: f64,
    mu: f64,
    rng: &mut R,
) -> Result<InformationStructure> {
    let (a, _) = random_injective_matrix(n, m, floor, rng)?;
    random_signals(a, outcomes, mu, super::config::DEFAULT_POSTERIOR_FLOOR, rng)
}
