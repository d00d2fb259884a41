//! Keyed random streams.
//!
//! Every random variate is addressed by `(seed, experiment, replica, channel)`
//! plus its position inside the channel. The first three form the ChaCha key,
//! the channel selects the ChaCha stream, so distinct addresses never share
//! output and a replica's draws do not depend on which thread runs it.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Address of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamKey {
    pub seed: u64,
    pub experiment: u64,
    pub replica: u64,
    pub channel: u64,
}

impl StreamKey {
    pub fn new(seed: u64, experiment: u64, replica: u64, channel: u64) -> Self {
        StreamKey {
            seed,
            experiment,
            replica,
            channel,
        }
    }

    pub fn with_channel(self, channel: u64) -> Self {
        StreamKey { channel, ..self }
    }

    pub fn rng(&self) -> StreamRng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.experiment.to_le_bytes());
        key[16..24].copy_from_slice(&self.replica.to_le_bytes());
        key[24..].copy_from_slice(&0x6e65_6172_656c_6173u64.to_le_bytes());
        let mut rng = StreamRng::from_seed(key);
        rng.set_stream(self.channel);
        rng
    }
}

/// Experiment tags used by the library's own Monte Carlo drivers.
pub mod experiment {
    pub const INIT_NOISE: u64 = 1;
    pub const DYN_NOISE: u64 = 2;
    pub const WALK: u64 = 3;
    pub const LIMIT_PATH: u64 = 4;
    pub const BILLIARD: u64 = 5;
    pub const BILLIARD_CHAIN: u64 = 6;

    /// FNV-1a hash of a name, for experiments defined outside the crate.
    pub const fn named(name: &str) -> u64 {
        let bytes = name.as_bytes();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut i = 0;
        while i < bytes.len() {
            h ^= bytes[i] as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
            i += 1;
        }
        h
    }
}

/// Channel numbers. Wall `i` of a 1D model uses channel `i`.
pub mod channel {
    pub const INITIAL: u64 = 1 << 40;
    pub const DIFFUSION: u64 = (1 << 40) + 1;
    pub const ODD_STEPS: u64 = (1 << 40) + 2;
    pub const EVEN_STEPS: u64 = (1 << 40) + 3;
    pub const BRANCH: u64 = (1 << 40) + 4;

    pub const fn wall(index: usize) -> u64 {
        index as u64
    }
}
