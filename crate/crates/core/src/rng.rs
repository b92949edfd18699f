//! Seeded random sources.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random source used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Stream reserved for action selection and other policy draws.
pub const POLICY_STREAM: u64 = 0;
/// Stream reserved for device switching latencies.
pub const DEVICE_STREAM: u64 = 1;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream derived from one master seed. Two streams of the same
/// seed never share draws, so consuming one does not perturb the other.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
