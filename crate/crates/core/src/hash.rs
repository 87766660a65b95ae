//! Keyed 64-bit hashing.
//!
//! Everything here is a fixed function of `(input, salt)` so that hashed keys
//! are stable across runs, platforms and crate versions.

/// Salt used when turning text trace tokens into 64-bit keys.
pub const TOKEN_SALT: u64 = 0x5157_4944_7472_6163;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finalizer applied to `x ^ salt`.
#[inline]
pub fn mix64(x: u64, salt: u64) -> u64 {
    let mut z = (x ^ salt).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over `bytes`, seeded with `salt`, then mixed.
pub fn hash_bytes(bytes: &[u8], salt: u64) -> u64 {
    let mut h = FNV_OFFSET ^ salt;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    mix64(h, salt)
}

/// Maps a 64-bit hash to a uniform real in `(0, 1]`.
#[inline]
pub fn unit_interval(h: u64) -> f64 {
    ((h >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A pair of bucket hash functions derived from one keyed mixer with two salts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketHasher {
    salts: [u64; 2],
    buckets: u64,
}

impl BucketHasher {
    pub fn new(seed: u64, buckets: usize) -> Self {
        assert!(buckets > 0, "bucket count must be positive");
        Self {
            salts: [mix64(seed, 0x6831), mix64(seed, 0x6832)],
            buckets: buckets as u64,
        }
    }

    #[inline]
    fn reduce(&self, h: u64) -> usize {
        // Lemire's multiply-shift range reduction.
        ((u128::from(h) * u128::from(self.buckets)) >> 64) as usize
    }

    #[inline]
    pub fn first(&self, key: u64) -> usize {
        self.reduce(mix64(key, self.salts[0]))
    }

    #[inline]
    pub fn second(&self, key: u64) -> usize {
        self.reduce(mix64(key, self.salts[1]))
    }

    /// The bucket `key` would move to when displaced from `current`.
    #[inline]
    pub fn alternate(&self, key: u64, current: usize) -> usize {
        let first = self.first(key);
        if first == current {
            self.second(key)
        } else {
            first
        }
    }
}
