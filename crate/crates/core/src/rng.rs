//! Seeded randomness.
//!
//! A run owns one root [`Seed`]. Every consumer forks a labelled child seed
//! from it, so adding a new consumer (or another Monte Carlo run) never shifts
//! the streams seen by existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every simulated random stream.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Seed(pub u64);

impl Seed {
    /// Child seed for a named substream.
    pub fn fork(self, label: &str) -> Seed {
        Seed(splitmix64(self.0 ^ fnv1a(label.as_bytes())))
    }

    /// Child seed for the `index`-th member of a named family of substreams.
    pub fn fork_indexed(self, label: &str, index: u64) -> Seed {
        let base = self.fork(label).0;
        Seed(splitmix64(
            base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        ))
    }

    pub fn rng(self) -> SimRng {
        SimRng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
