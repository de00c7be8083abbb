//! Named random streams.
//!
//! Every consumer of randomness asks for a stream keyed by
//! `(seed, purpose, index)`. Streams are independent of each other and of the
//! order in which they are requested, so work can be split across threads
//! without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Root of a family of deterministic random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The stream for `purpose` with one index.
    pub fn stream(&self, purpose: &str, index: u64) -> StreamRng {
        self.stream2(purpose, index, 0)
    }

    /// The stream for `purpose` with a pair index, e.g. a graph pair.
    pub fn stream2(&self, purpose: &str, i: u64, j: u64) -> StreamRng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update((purpose.len() as u64).to_le_bytes());
        h.update(purpose.as_bytes());
        h.update(i.to_le_bytes());
        h.update(j.to_le_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    /// A stream keyed by arbitrary bytes, e.g. a digest of the input data.
    pub fn stream_keyed(&self, purpose: &str, key: &[u8], index: u64) -> StreamRng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update((purpose.len() as u64).to_le_bytes());
        h.update(purpose.as_bytes());
        h.update((key.len() as u64).to_le_bytes());
        h.update(key);
        h.update(index.to_le_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }
}

/// SHA-256 digest of a per-color point list, used to key query streams.
pub fn digest_points(points: &[Vec<crate::geom::Point>]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((points.len() as u64).to_le_bytes());
    for ps in points {
        h.update((ps.len() as u64).to_le_bytes());
        for p in ps {
            h.update(p.x.to_bits().to_le_bytes());
            h.update(p.y.to_bits().to_le_bytes());
        }
    }
    h.finalize().into()
}
