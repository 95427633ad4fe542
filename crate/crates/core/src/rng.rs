//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, key...)`, so streams for
//! different particles, pair slots or grid cells never interact and results
//! do not depend on iteration order or thread scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags, so that different consumers never share keys.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const MOTION: u64 = 2;
    pub const LINK: u64 = 3;
    pub const DENSITY_INIT: u64 = 4;
    pub const MASK_BAND: u64 = 5;
    pub const DISK_JITTER: u64 = 6;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed: mix(seed ^ GOLDEN) }
    }

    #[inline]
    pub fn bits(&self, keys: &[u64]) -> u64 {
        let mut h = self.seed;
        for &k in keys {
            h = mix(h.wrapping_add(GOLDEN) ^ mix(k.wrapping_add(GOLDEN)));
        }
        h
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform(&self, keys: &[u64]) -> f64 {
        ((self.bits(keys) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// A pair of independent standard normals (Box-Muller).
    #[inline]
    pub fn normal_pair(&self, keys: &[u64]) -> (f64, f64) {
        let h = self.bits(keys);
        let u1 = ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        let u2 = ((mix(h ^ GOLDEN) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let th = std::f64::consts::TAU * u2;
        (r * th.cos(), r * th.sin())
    }
}
