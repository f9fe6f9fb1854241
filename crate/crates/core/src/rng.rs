//! Seedable, per-carrier random streams.
//!
//! Every carrier of a run draws from its own ChaCha stream keyed by
//! `(seed, stream_id)`, so CA, PCC-only and SCC-only runs with the same seed
//! see the same fading sequence on each carrier.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifies one independent stream inside a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamId(pub u64);

impl StreamId {
    pub const PCC: StreamId = StreamId(0);
    /// Streams for policies that randomise (ε-greedy exploration).
    pub const POLICY: StreamId = StreamId(1 << 32);

    /// SCC `index` is 1-based, matching carrier numbering in traces.
    pub const fn scc(index: usize) -> StreamId {
        StreamId(index as u64)
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: StreamId,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: StreamId) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id.0);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> StreamId {
        self.stream_id
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
