//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, domain, stream, counter)`: the
//! seed and domain form the ChaCha key, the stream id selects the ChaCha
//! nonce and the counter is the block position inside that stream. Monte
//! Carlo loops give replication `r` its own stream `r`, so results never
//! depend on how replications are scheduled across threads.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Well-known domains so independent consumers never share a stream.
pub mod domain {
    pub const PATHS: u64 = 1;
    pub const LIMIT: u64 = 2;
    pub const COEFFS: u64 = 3;
    pub const AUX: u64 = 4;
    pub const TILT_INDEX: u64 = 5;
    pub const RHO_PILOT: u64 = 6;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A family of independent streams keyed by `(seed, domain)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
    domain: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { seed, domain: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive a sub-family; `tag` values compose, so nested derivations stay
    /// distinct from each other.
    pub fn domain(&self, tag: u64) -> Streams {
        Streams {
            seed: self.seed,
            domain: splitmix64(self.domain ^ splitmix64(tag)),
        }
    }

    pub fn stream(&self, id: u64) -> StreamRng {
        self.stream_at(id, 0)
    }

    /// Stream `id` positioned at 32-bit word `counter`.
    pub fn stream_at(&self, id: u64, counter: u128) -> StreamRng {
        let mut key = [0u8; 32];
        let words = [
            splitmix64(self.seed),
            splitmix64(self.seed ^ 0xA5A5_A5A5_A5A5_A5A5),
            splitmix64(self.domain),
            splitmix64(self.domain ^ 0x5A5A_5A5A_5A5A_5A5A),
        ];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(id);
        inner.set_word_pos(counter);
        StreamRng { inner }
    }
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Uniform on the open interval (0, 1), never 0 or 1.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` (n > 0), by rejection so there is no modulo bias.
    pub fn index(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.inner.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }
}

impl RngCore for StreamRng {
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
    fn same_triple_same_draws() {
        let s = Streams::new(7);
        let mut a = s.stream(3);
        let mut b = s.stream(3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn counter_positions_the_stream() {
        let s = Streams::new(11).domain(domain::PATHS);
        let mut a = s.stream(5);
        for _ in 0..10 {
            a.next_u64();
        }
        let mut b = s.stream_at(5, a.word_pos());
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn streams_and_domains_differ() {
        let s = Streams::new(1);
        let x = s.stream(0).next_u64();
        assert_ne!(x, s.stream(1).next_u64());
        assert_ne!(x, s.domain(domain::PATHS).stream(0).next_u64());
        assert_ne!(
            s.domain(1).domain(2).stream(0).next_u64(),
            s.domain(2).domain(1).stream(0).next_u64()
        );
    }

    #[test]
    fn open_uniform_in_range() {
        let mut r = Streams::new(0).stream(0);
        for _ in 0..10_000 {
            let u = r.uniform_open();
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
