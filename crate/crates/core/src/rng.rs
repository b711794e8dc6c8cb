//! The pinned bit source shared by encoder and decoder.
//!
//! A 64-bit seed is expanded by SplitMix64 into xoshiro256** state. Binary
//! patterns take the top bit of successive outputs; bounded integers use
//! rejection sampling on the full 64-bit output.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

pub struct KeyStream(Xoshiro256StarStar);

impl KeyStream {
    pub fn new(seed: u64) -> Self {
        // seed_from_u64 fills the state with SplitMix64 outputs.
        Self(Xoshiro256StarStar::seed_from_u64(seed))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Uniform integer in `[0, n)`. Outputs at or above the largest
    /// multiple of `n` are rejected.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let limit = n * (u64::MAX / n);
        loop {
            let v = self.next_u64();
            if v < limit {
                return v % n;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_outputs_for_seed_zero() {
        let mut ks = KeyStream::new(0);
        assert_eq!(ks.next_u64(), 0x99ec5f36cb75f2b4);
        assert_eq!(ks.next_u64(), 0xbf6e1f784956452a);
        assert_eq!(ks.next_u64(), 0x1a5f849d4933e6e0);
    }

    #[test]
    fn below_stays_in_range() {
        let mut ks = KeyStream::new(9);
        for n in [1u64, 2, 3, 7, 1000] {
            for _ in 0..200 {
                assert!(ks.below(n) < n);
            }
        }
    }
}
