//! Reproducible random streams.
//!
//! A [`RngSeed`] names one stream of a ChaCha8 generator: the root seed keys
//! the cipher and the stream id selects one of its 2^64 independent counter
//! streams. Work items derive their own seeds from indices, so results do not
//! depend on which thread runs which item.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub root_seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(root_seed: u64) -> Self {
        Self {
            root_seed,
            stream_id: 0,
        }
    }

    /// Child seed for the work item identified by `path`.
    pub fn derive(&self, path: &[u64]) -> Self {
        let mut h = mix64(self.stream_id ^ 0x243f_6a88_85a3_08d3);
        for &k in path {
            h = mix64(h ^ mix64(k.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        Self {
            root_seed: self.root_seed,
            stream_id: h,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
