//! Sources of protocol randomness.
//!
//! Protocols only ever ask for "a uniform value below `bound`". Seeded runs
//! answer from a ChaCha stream; exhaustive audits answer from a
//! [`TapeRandomness`] that walks every possible sequence of answers.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};

/// Deterministic generator used for seeded runs.
pub type SeededRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Mixes a base seed with a stream index (SplitMix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub trait Randomness {
    /// Uniform value in `[0, bound)`. `bound` is at least 1.
    fn below(&mut self, bound: u32) -> u32;
}

impl<R: RngCore> Randomness for R {
    fn below(&mut self, bound: u32) -> u32 {
        self.gen_range(0..bound)
    }
}

/// Replays one fixed sequence of draws and steps to the next sequence in
/// lexicographic (odometer) order.
///
/// Enumeration is exact only when the sequence of requested bounds does not
/// depend on the values drawn. Every protocol here has that property and the
/// tape checks it on each replay.
#[derive(Clone, Debug, Default)]
pub struct TapeRandomness {
    values: Vec<u32>,
    radices: Vec<u32>,
    cursor: usize,
    first_space: Option<u128>,
    schedule_violation: bool,
}

impl TapeRandomness {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rewinds for a replay of the current tape.
    pub fn rewind(&mut self) {
        self.cursor = 0;
    }

    /// Number of draws consumed by the last replay.
    pub fn draws(&self) -> usize {
        self.cursor
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// True if replays disagreed on the sequence of requested bounds, which
    /// would make the visited tapes unequally likely.
    pub fn schedule_violated(&self) -> bool {
        self.schedule_violation
    }

    /// Number of distinct tapes with the current schedule, if it fits in u128.
    pub fn space_size(&self) -> Option<u128> {
        self.radices
            .iter()
            .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
    }

    /// Call after a replay. Moves to the next tape; false once all tapes
    /// have been visited.
    pub fn advance(&mut self) -> bool {
        if self.cursor != self.values.len() {
            self.schedule_violation = true;
            self.values.truncate(self.cursor);
            self.radices.truncate(self.cursor);
        }
        let space = self
            .radices
            .iter()
            .fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
        match self.first_space {
            None => self.first_space = Some(space),
            Some(s) if s != space => self.schedule_violation = true,
            _ => {}
        }
        self.cursor = 0;
        while let Some(last) = self.values.last_mut() {
            let radix = *self.radices.last().unwrap();
            if *last + 1 < radix {
                *last += 1;
                return true;
            }
            self.values.pop();
            self.radices.pop();
        }
        false
    }
}

impl Randomness for TapeRandomness {
    fn below(&mut self, bound: u32) -> u32 {
        assert!(bound >= 1, "empty range");
        let v = if self.cursor < self.values.len() {
            if self.radices[self.cursor] != bound {
                self.schedule_violation = true;
            }
            self.values[self.cursor].min(bound - 1)
        } else {
            self.values.push(0);
            self.radices.push(bound);
            0
        };
        self.cursor += 1;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tape_walks_the_full_product_space() {
        let mut tape = TapeRandomness::new();
        let mut seen = Vec::new();
        loop {
            let a = tape.below(2);
            let b = tape.below(3);
            seen.push((a, b));
            if !tape.advance() {
                break;
            }
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], (0, 0));
        assert_eq!(seen[5], (1, 2));
        assert!(!tape.schedule_violated());
    }

    #[test]
    fn tape_detects_value_dependent_schedules() {
        let mut tape = TapeRandomness::new();
        loop {
            let a = tape.below(2);
            if a == 0 {
                tape.below(2);
            }
            if !tape.advance() {
                break;
            }
        }
        assert!(tape.schedule_violated());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }
}
