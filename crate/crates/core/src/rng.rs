//! Seeded random streams.
//!
//! Every consumer of randomness derives its own stream from a parent seed,
//! a domain tag and an index, so that the value drawn by (say) bootstrap
//! replicate 17 does not depend on how many replicates run, or on which
//! thread runs them. Streams are ChaCha8; normals use the Box–Muller
//! transform, and uniform indices use a 64x64->128 bit multiply, so the
//! sequences are fixed independently of `rand`'s distribution code.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams for different purposes apart.
pub mod domain {
    pub const GAUSSIAN_COLUMN: u64 = 0x6761_7573_735f_636f;
    pub const ROW_SAMPLE: u64 = 0x726f_775f_7361_6d70;
    pub const REPLICATE: u64 = 0x7265_706c_6963_6174;
    pub const TRIAL: u64 = 0x7472_6961_6c5f_5f5f;
    pub const TRIAL_SKETCH: u64 = 0x736b_6574_6368_5f5f;
    pub const TRIAL_BOOTSTRAP: u64 = 0x626f_6f74_7374_7270;
    pub const HAAR_LEFT: u64 = 0x6861_6172_5f6c_6566;
    pub const HAAR_RIGHT: u64 = 0x6861_6172_5f72_6967;
    pub const ELLIPTICAL: u64 = 0x656c_6c69_7074_6963;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `index` within `domain`.
pub fn derive_seed(parent: u64, domain: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(domain ^ splitmix64(index)))
}

/// A seeded stream with the samplers the crate needs.
pub struct Stream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = seed;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        Stream {
            rng: ChaCha8Rng::from_seed(key),
            spare_normal: None,
        }
    }

    pub fn derived(parent: u64, domain: u64, index: u64) -> Self {
        Self::new(derive_seed(parent, domain, index))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal via Box–Muller; values are produced in pairs.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - U lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }
}
