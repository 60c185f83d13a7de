//! Counter-based random streams keyed by (master seed, method, replication).
//!
//! Every replication owns a ChaCha8 key; each particle gets its own 64-bit
//! stream id under that key, so the numbers a particle sees depend only on
//! its coordinates and never on thread scheduling or on how many other
//! replications were requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engines::Method;

/// Stream ids at or above this value are reserved for per-step auxiliary
/// draws (resampling), so they never collide with particle ids.
const AUX_STREAM_BASE: u64 = 1 << 63;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamFactory {
    key: [u8; 32],
    replication_seed: u64,
}

impl StreamFactory {
    pub fn new(master_seed: u64, method: Method, replication: u64) -> Self {
        let mut state = master_seed;
        let a = splitmix64(&mut state);
        let mut state = a ^ method.stream_tag();
        let b = splitmix64(&mut state);
        let mut state = b ^ replication.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        let replication_seed = splitmix64(&mut state);

        let mut key = [0u8; 32];
        let mut expand = replication_seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut expand).to_le_bytes());
        }
        Self { key, replication_seed }
    }

    /// 64-bit digest of the replication key, reported alongside estimates.
    pub fn replication_seed(&self) -> u64 {
        self.replication_seed
    }

    /// Independent stream for particle (or path) `id`.
    pub fn particle(&self, id: u64) -> ChaCha8Rng {
        assert!(id < AUX_STREAM_BASE, "particle id {id} collides with auxiliary streams");
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(id);
        rng
    }

    /// Stream for replication-level draws such as the resampling at step `id`.
    pub fn auxiliary(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(AUX_STREAM_BASE | id);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn head(mut rng: ChaCha8Rng) -> [u64; 4] {
        [rng.random(), rng.random(), rng.random(), rng.random()]
    }

    #[test]
    fn same_coordinates_same_stream() {
        let a = StreamFactory::new(7, Method::Mc, 3);
        let b = StreamFactory::new(7, Method::Mc, 3);
        assert_eq!(a, b);
        assert_eq!(head(a.particle(11)), head(b.particle(11)));
        assert_eq!(head(a.auxiliary(2)), head(b.auxiliary(2)));
    }

    #[test]
    fn coordinates_separate_streams() {
        let base = StreamFactory::new(7, Method::Mc, 3);
        let others = [
            StreamFactory::new(8, Method::Mc, 3),
            StreamFactory::new(7, Method::Ips, 3),
            StreamFactory::new(7, Method::Hfmc, 3),
            StreamFactory::new(7, Method::Mc, 4),
        ];
        for other in &others {
            assert_ne!(base.replication_seed(), other.replication_seed());
            assert_ne!(head(base.particle(0)), head(other.particle(0)));
        }
        assert_ne!(head(base.particle(0)), head(base.particle(1)));
        assert_ne!(head(base.particle(5)), head(base.auxiliary(5)));
    }
}
