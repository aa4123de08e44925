//! Reproducible random streams.
//!
//! Every stochastic routine takes an [`RngStream`], a ChaCha8 generator keyed by a
//! 64-bit seed and a 64-bit stream id. ChaCha8 output is specified bit-for-bit, so a
//! given `(seed, stream)` pair yields the same draws on every platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent child stream, keyed off this stream's seed.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(self.seed ^ self.stream.rotate_left(32), stream)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
