//! Keyed random streams.
//!
//! Every random quantity in a simulation is drawn from a stream addressed by
//! `(master_seed, StreamId)`. The stream depends only on its key, never on the
//! order in which other streams were consumed, so results do not change with
//! the number of worker threads.

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// What a stream is used for. Part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Placement = 1,
    ProcessNoise = 2,
    MeasurementNoise = 3,
    FadingCoefficient = 4,
    EstimationError = 5,
    AdditiveNoise = 6,
    InfoLink = 7,
    DiffusionLink = 8,
    LinkQuality = 9,
    LinkPower = 10,
    /// Free-form streams for tests and verification drivers.
    Auxiliary = 255,
}

/// Sentinel used in a [`StreamId`] slot that does not apply.
pub const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub run: u32,
    pub step: u32,
    pub node: u32,
    /// Second endpoint of a directed link (`node` is the sender), or [`NONE`].
    pub peer: u32,
    pub purpose: Purpose,
}

impl StreamId {
    pub fn new(purpose: Purpose) -> Self {
        Self {
            run: NONE,
            step: NONE,
            node: NONE,
            peer: NONE,
            purpose,
        }
    }

    pub fn run(mut self, run: usize) -> Self {
        self.run = run as u32;
        self
    }

    pub fn step(mut self, step: usize) -> Self {
        self.step = step as u32;
        self
    }

    pub fn node(mut self, node: usize) -> Self {
        self.node = node as u32;
        self
    }

    pub fn link(mut self, from: usize, to: usize) -> Self {
        self.node = from as u32;
        self.peer = to as u32;
        self
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_key(master_seed: u64, id: &StreamId) -> [u8; 32] {
    let words = [
        id.run as u64,
        id.step as u64,
        id.node as u64,
        id.peer as u64,
        id.purpose as u64,
    ];
    let mut h = splitmix64(master_seed);
    for w in words {
        h = splitmix64(h ^ w);
    }
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        h = splitmix64(h.wrapping_add(i as u64));
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    seed
}

/// A deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, id: StreamId) -> Self {
        Self {
            inner: ChaCha8Rng::from_seed(stream_key(master_seed, &id)),
        }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw in `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        self.inner.sample(Open01)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Bernoulli draw with success probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_sequence() {
        let id = StreamId::new(Purpose::FadingCoefficient).run(3).step(7).node(2);
        let mut a = RngStream::new(42, id);
        let mut b = RngStream::new(42, id);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn keys_are_distinct() {
        let base = StreamId::new(Purpose::InfoLink).run(0).step(1);
        let mut a = RngStream::new(1, base.link(0, 1));
        let mut b = RngStream::new(1, base.link(1, 0));
        let mut c = RngStream::new(2, base.link(0, 1));
        let x = a.next_u64();
        assert_ne!(x, b.next_u64());
        assert_ne!(x, c.next_u64());
    }

    #[test]
    fn purpose_changes_stream() {
        let id = StreamId::new(Purpose::InfoLink).run(0).step(1).link(2, 3);
        let other = StreamId {
            purpose: Purpose::DiffusionLink,
            ..id
        };
        assert_ne!(
            RngStream::new(9, id).next_u64(),
            RngStream::new(9, other).next_u64()
        );
    }
}
