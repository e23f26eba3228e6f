//! Deterministic RNG substreams.
//!
//! Every random draw in a run comes from a stream derived by hashing
//! (master seed, agent, round, purpose) into a ChaCha seed. Agent i's
//! draws are therefore untouched by how many draws other agents make,
//! which keeps traces comparable across adversary strategies.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Private signal observation.
    Signal,
    /// Adversary message crafting.
    Adversary,
    /// Random faulty-set selection at run start.
    FaultSelection,
    /// Scenario-level auxiliary draws (e.g. consensus input generation).
    Input,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Signal => 1,
            Purpose::Adversary => 2,
            Purpose::FaultSelection => 3,
            Purpose::Input => 4,
        }
    }
}

/// The substream for (seed, agent, round, purpose).
pub fn substream(master_seed: u64, agent: usize, round: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut seed_bytes = [0u8; 32];
    seed_bytes[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed_bytes[8..16].copy_from_slice(&(agent as u64).to_le_bytes());
    seed_bytes[16..24].copy_from_slice(&(round as u64).to_le_bytes());
    seed_bytes[24..32].copy_from_slice(&purpose.tag().to_le_bytes());
    ChaCha8Rng::from_seed(seed_bytes)
}
