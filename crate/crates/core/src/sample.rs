//! Seeded sample clouds for numeric identity checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed used whenever the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x006e_6f6e_686f_6c6f;

/// Points drawn per identity check.
pub const CLOUD_SIZE: usize = 100;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` points uniform in `[-1, 1]^dim`.
pub fn cloud(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| r.gen_range(-1.0..=1.0)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_bounded() {
        let a = cloud(3, CLOUD_SIZE, DEFAULT_SEED);
        assert_eq!(a, cloud(3, CLOUD_SIZE, DEFAULT_SEED));
        assert_ne!(a, cloud(3, CLOUD_SIZE, 1));
        assert!(a.iter().flatten().all(|v| v.abs() <= 1.0));
    }
}
