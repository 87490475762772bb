//! Fixtures shared by the benchmarks.

use logagg::harness::{random_injective_environment, random_injective_matrix};
use logagg::{EvidenceMatrix, InformationStructure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed generator so every benchmark sees the same inputs.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random `n x m` 0/1 matrix with `sigma_min >= 0.1`.
pub fn matrix(n: usize, m: usize) -> EvidenceMatrix {
    random_injective_matrix(n, m, 0.1, &mut rng(n as u64 * 1000 + m as u64))
        .expect("injective matrix")
        .0
}

/// Random three-outcome signals on a random injective `n x m` matrix, prior 0.4.
pub fn structure(n: usize, m: usize) -> InformationStructure {
    random_injective_environment(n, m, 3, 0.1, 0.4, &mut rng(7)).expect("environment")
}
