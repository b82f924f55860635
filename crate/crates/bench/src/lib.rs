//! Shared fixtures for the benchmarks.

use parabell_core::QuantumState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded random states on the two-qutrit space.
pub fn states(count: usize, seed: u64) -> Vec<QuantumState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| QuantumState::random(&mut rng, 9)).collect()
}
