//! The single random source of a run.
//!
//! ChaCha8 seeded through `SeedableRng::seed_from_u64` (PCG32-expanded seed).
//! The stream is specified by the algorithm, not the platform, so the same
//! seed yields the same deployment and traffic on every build.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn stream_is_pinned() {
        // Changing the generator or seeding scheme changes every recorded output.
        let mut rng = seeded_rng(42);
        assert_eq!(rng.gen::<u64>(), 12578764544318200737);
        assert_eq!(rng.gen::<f64>(), 0.950275407672484);
        assert_ne!(seeded_rng(42).gen::<u64>(), seeded_rng(43).gen::<u64>());
    }
}
