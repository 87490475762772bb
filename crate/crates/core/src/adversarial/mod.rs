//! Hard instances: the non-injective three-signal example, kernel-vector
//! counterexamples, a prior-flip demonstration, and an exact checker for the
//! extreme-forecast bounds.

mod lemmas;
mod prior_flip;

use std::collections::BTreeMap;

use rand::Rng;

pub use lemmas::{extreme_lemma_oracle, near_extremal_structure, BinaryJointStructure, LemmaCheck};
pub use prior_flip::{FlipRound, PriorFlipAdversary};

use crate::error::{Error, Result};
use crate::evidence::{EvidenceMatrix, InformationStructure, SignalDistribution};
use crate::loglik::{expected_regret, logit_inverse};
use crate::spectral::kernel_vector_nonzero_sum;

/// Largest profile space `regret_floor` enumerates.
pub const MAX_ENUMERATED_PROFILES: f64 = 1e6;

/// Forecast profiles are grouped after rounding to this grid.
const PROFILE_GRID: f64 = 1e9;

/// Three i.i.d. binary signals that match the state with probability 3/4,
/// prior 1/2; expert 1 sees signals 1 and 2, expert 2 sees signals 2 and 3.
/// Outcome 0 of each signal points to `omega = 0`.
pub fn example1() -> InformationStructure {
    let signal = SignalDistribution::from_pairs(0.5, &[(0.25, 0.75), (0.75, 0.25)])
        .expect("valid signal");
    let evidence = EvidenceMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]).expect("valid rows");
    InformationStructure::new(0.5, vec![signal; 3], evidence).expect("valid structure")
}

/// Counterexample built from a kernel vector of a non-injective evidence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposition1Instance {
    pub structure: InformationStructure,
    /// Unscaled kernel vector (`|z|_inf = 1`, positive sum).
    pub kernel: Vec<f64>,
    pub scale: f64,
}

impl Proposition1Instance {
    /// The two prior-adjusted log-likelihood profiles that every expert sees
    /// identically: all zeros and `scale * kernel`.
    pub fn confounded_profiles(&self) -> (Vec<f64>, Vec<f64>) {
        let zero = vec![0.0; self.kernel.len()];
        let shifted = self.kernel.iter().map(|z| self.scale * z).collect();
        (zero, shifted)
    }

    /// Signal outcomes realizing the two confounded profiles.
    /// Outcome 1 is the uninformative posterior 1/2; outcome 0 is
    /// `logistic(c z_j)` (absent when `z_j = 0`).
    pub fn confounded_outcomes(&self) -> (Vec<usize>, Vec<usize>) {
        let neutral = self
            .structure
            .signals()
            .iter()
            .map(|s| if s.len() == 1 { 0 } else { 1 })
            .collect();
        (neutral, vec![0; self.kernel.len()])
    }
}

/// [`proposition1_instance_scaled`] with `c = 1`.
pub fn proposition1_instance(evidence: &EvidenceMatrix) -> Option<Proposition1Instance> {
    proposition1_instance_scaled(evidence, 1.0).ok().flatten()
}

/// Prior 1/2; signal `j` has posterior support `{logistic(c z_j), 1/2, 1 - logistic(c z_j)}`
/// with weights `{1/4, 1/2, 1/4}`, where `z` is a kernel vector with nonzero sum.
///
/// `Ok(None)` when no such kernel vector exists. Scales that push any
/// `|c z_j|` above 2 are rejected.
pub fn proposition1_instance_scaled(
    evidence: &EvidenceMatrix,
    scale: f64,
) -> Result<Option<Proposition1Instance>> {
    let Some(kernel) = kernel_vector_nonzero_sum(evidence.dense()) else {
        return Ok(None);
    };
    let max = kernel.iter().fold(0.0f64, |acc, z| acc.max(z.abs()));
    if !(scale > 0.0) || scale * max > 2.0 + 1e-12 {
        return Err(Error::Config(format!(
            "kernel scale {scale} must be positive with max |c z| <= 2"
        )));
    }
    let supports: Vec<Vec<(f64, f64)>> = kernel
        .iter()
        .map(|&z| {
            if (scale * z).abs() < 1e-12 {
                vec![(0.5, 1.0)]
            } else {
                let x = logit_inverse(scale * z);
                vec![(x, 0.25), (0.5, 0.5), (1.0 - x, 0.25)]
            }
        })
        .collect();
    let structure = InformationStructure::from_posteriors(0.5, &supports, evidence.clone())?;
    Ok(Some(Proposition1Instance {
        structure,
        kernel,
        scale,
    }))
}

fn profile_key(forecasts: &[f64]) -> Vec<i64> {
    forecasts
        .iter()
        .map(|f| (f * PROFILE_GRID).round() as i64)
        .collect()
}

/// Smallest per-round expected regret any aggregator that sees only the
/// forecast profile can achieve on `structure`.
///
/// Enumerates every signal profile, groups them by the forecast profile
/// they induce, and charges each group the regret of its best response
/// (the probability-weighted mean of `r*`).
pub fn regret_floor(structure: &InformationStructure) -> Result<f64> {
    if structure.profile_count() > MAX_ENUMERATED_PROFILES {
        return Err(Error::Config(format!(
            "{} signal profiles exceed the enumeration limit",
            structure.profile_count()
        )));
    }
    // group key -> (mass, mass * r*, members (p, r*))
    let mut groups: BTreeMap<Vec<i64>, (f64, f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for (profile, p) in structure.enumerate_profiles() {
        let round = structure.round_from_outcomes(false, profile);
        let entry = groups
            .entry(profile_key(&round.expert_forecasts))
            .or_insert((0.0, 0.0, Vec::new()));
        entry.0 += p;
        entry.1 += p * round.r_star;
        entry.2.push((p, round.r_star));
    }
    Ok(groups
        .values()
        .map(|(mass, weighted, members)| {
            let best = weighted / mass;
            members
                .iter()
                .map(|&(p, r_star)| p * expected_regret(best, r_star))
                .sum::<f64>()
        })
        .sum())
}

/// Sampling estimate of [`regret_floor`]: best responses are the empirical
/// mean of `r*` per observed forecast profile. Biased slightly low.
pub fn regret_floor_sampled<R: Rng + ?Sized>(
    structure: &InformationStructure,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let mut groups: BTreeMap<Vec<i64>, Vec<f64>> = BTreeMap::new();
    for _ in 0..samples {
        let round = structure.sample_round(rng);
        groups
            .entry(profile_key(&round.expert_forecasts))
            .or_default()
            .push(round.r_star);
    }
    let total: f64 = groups
        .values()
        .map(|rs| {
            let best = rs.iter().sum::<f64>() / rs.len() as f64;
            rs.iter().map(|&r| expected_regret(best, r)).sum::<f64>()
        })
        .sum();
    total / samples.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loglik::binary_entropy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example_one_floor() {
        let floor = regret_floor(&example1()).unwrap();
        let expected = 6.0 / 32.0 * (2f64.ln() - binary_entropy(0.25));
        assert!((floor - expected).abs() < 1e-12);
        assert!((floor - 0.024527256738963187).abs() < 1e-12);
        assert!(example1().evidence().sigma_min() < 1e-10);
    }

    #[test]
    fn injective_floor_is_zero() {
        let sig = SignalDistribution::from_posteriors(0.4, &[(0.2, 0.5), (0.6, 0.5)]).unwrap();
        let s = InformationStructure::new(0.4, vec![sig; 2], EvidenceMatrix::identity(2).unwrap()).unwrap();
        assert!(regret_floor(&s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn proposition_one_instance() {
        let a = EvidenceMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let inst = proposition1_instance(&a).unwrap();
        for (k, want) in inst.kernel.iter().zip([1.0, -1.0, 1.0]) {
            assert!((k - want).abs() < 1e-12);
        }
        for s in inst.structure.signals() {
            assert!((s.posterior_mean() - 0.5).abs() < 1e-12);
        }
        let (zero, shifted) = inst.confounded_profiles();
        assert_eq!(zero, vec![0.0; 3]);
        let (neutral, moved) = inst.confounded_outcomes();
        let r0 = inst.structure.round_from_outcomes(true, neutral);
        let r1 = inst.structure.round_from_outcomes(true, moved);
        assert_eq!(r0.expert_forecasts, r1.expert_forecasts);
        assert!((r0.r_star - 0.5).abs() < 1e-15);
        assert!((r1.r_star - logit_inverse(shifted.iter().sum())).abs() < 1e-12);

        let floor = regret_floor(&inst.structure).unwrap();
        assert!((floor - 0.014310577491056095).abs() < 1e-12, "{floor}");
        let doubled = proposition1_instance_scaled(&a, 2.0).unwrap().unwrap();
        let floor2 = regret_floor(&doubled.structure).unwrap();
        assert!((floor2 - 0.026349579114288507).abs() < 1e-12, "{floor2}");
        assert!(proposition1_instance_scaled(&a, 2.5).is_err());
    }

    #[test]
    fn injective_matrix_has_no_counterexample() {
        assert!(proposition1_instance(&EvidenceMatrix::identity(3).unwrap()).is_none());
    }

    #[test]
    fn sampled_floor_tracks_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let est = regret_floor_sampled(&example1(), 200_000, &mut rng);
        assert!((est - 0.024527256738963187).abs() < 2e-3, "{est}");
    }
}
