//! Seeded randomness. Queues are shuffled with Fisher-Yates over a splitmix64 stream.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

/// splitmix64 generator whose state starts at `seed`.
pub fn splitmix(seed: u64) -> SplitMix64 {
    SplitMix64::from_seed(seed.to_le_bytes())
}

/// Fisher-Yates shuffle driven by `splitmix(seed)`.
pub fn shuffle_seeded<T>(items: &mut [T], seed: u64) {
    let mut rng = splitmix(seed);
    items.shuffle(&mut rng);
}

/// A uniformly random permutation of `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    shuffle_seeded(&mut v, seed);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn splitmix_reference_stream() {
        // Reference output of splitmix64 from state 0.
        let mut r = splitmix(0);
        assert_eq!(r.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(r.next_u64(), 0x6e789e6aa1b965f4);
    }

    #[test]
    fn same_seed_same_permutation() {
        assert_eq!(permutation(10, 42), permutation(10, 42));
        let mut p = permutation(10, 7);
        p.sort();
        assert_eq!(p, (0..10).collect::<Vec<_>>());
    }
}
