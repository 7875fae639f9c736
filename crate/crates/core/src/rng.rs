//! Seeded randomness, random permutations, and exhaustive permutation
//! enumeration.
//!
//! All randomness in the crate flows through [`Seed`] and [`trial_rng`]: trial
//! `i` of an experiment gets an independent ChaCha8 stream derived from the
//! master seed and the trial index, so runs reproduce bit-identically no
//! matter how trials are scheduled across threads.
//!
//! [`all_permutations`] enumerates every order of a tiny ground set in
//! lexicographic order. It is the ground-truth oracle behind the exact
//! expectation and martingale tests and is deliberately capped at `n <= 10`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest `n` for which exhaustive permutation enumeration is allowed (10! is
/// ~3.6M orders; anything beyond that is factorial suicide).
pub const MAX_ENUM_N: usize = 10;

/// Master seed for an experiment. Same seed + same parameters means
/// bit-identical output everywhere in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    /// Derives the seed for one trial. SplitMix64 over (master, index) keeps
    /// the per-trial streams decorrelated while staying a pure function of
    /// the pair, so disjoint trial ranges can run anywhere and merge.
    pub fn for_trial(self, trial: u64) -> u64 {
        splitmix64(splitmix64(self.0) ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// SplitMix64 mixer (Vigna 2017); used to turn (seed, counter) pairs into
/// well-separated stream seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// RNG for a single trial: an independent, portable ChaCha8 stream.
pub fn trial_rng(seed: Seed, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.for_trial(trial))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermError {
    #[error("exhaustive enumeration limited to n <= {MAX_ENUM_N}, got n = {0}")]
    TooLarge(usize),
    #[error("exact oracle limited to n <= {limit}, got n = {n}")]
    OracleTooLarge { n: usize, limit: usize },
}

/// A random insertion order: a permutation of object indices `0..n`.
///
/// This is the operational form of the filtration in the martingale view of
/// RIC: `prefix(k)` is the information revealed after `k` insertions, and the
/// reversed order reads as a deletion sequence for backward analysis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InsertionOrder {
    items: Vec<usize>,
}

impl InsertionOrder {
    /// Wraps an explicit permutation. Panics if `items` is not a permutation
    /// of `0..items.len()`.
    pub fn new(items: Vec<usize>) -> Self {
        let n = items.len();
        let mut seen = vec![false; n];
        for &x in &items {
            assert!(x < n && !seen[x], "not a permutation of 0..{n}: {items:?}");
            seen[x] = true;
        }
        Self { items }
    }

    /// The identity order `0, 1, .., n-1`.
    pub fn identity(n: usize) -> Self {
        Self {
            items: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    /// First `k` inserted objects (`0 <= k <= n`).
    pub fn prefix(&self, k: usize) -> &[usize] {
        &self.items[..k]
    }

    /// The same sequence read backwards: a deletion order starting from the
    /// full set.
    pub fn reversed(&self) -> Self {
        let mut items = self.items.clone();
        items.reverse();
        Self { items }
    }
}

/// Uniformly random permutation of `0..n` (Fisher–Yates via the trial stream).
pub fn random_permutation(n: usize, seed: Seed) -> InsertionOrder {
    random_permutation_with(n, &mut trial_rng(seed, 0))
}

/// As [`random_permutation`] but drawing from a caller-owned stream, for use
/// inside multi-trial experiments.
pub fn random_permutation_with<R: rand::Rng>(n: usize, rng: &mut R) -> InsertionOrder {
    let mut items: Vec<usize> = (0..n).collect();
    items.shuffle(rng);
    InsertionOrder { items }
}

/// Iterator over all `n!` permutations of `0..n` in lexicographic order.
///
/// Rejects `n > 10`. The first order is the identity, the last is the full
/// reversal; the fixed ordering keeps oracle results stable across runs.
pub fn all_permutations(n: usize) -> Result<Permutations, PermError> {
    if n > MAX_ENUM_N {
        return Err(PermError::TooLarge(n));
    }
    Ok(Permutations {
        next: Some((0..n).collect()),
    })
}

#[derive(Debug)]
pub struct Permutations {
    next: Option<Vec<usize>>,
}

impl Iterator for Permutations {
    type Item = InsertionOrder;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.next.take()?;
        self.next = lex_successor(&cur);
        Some(InsertionOrder { items: cur })
    }
}

/// Next permutation in lexicographic order, or `None` after the reversal.
fn lex_successor(p: &[usize]) -> Option<Vec<usize>> {
    let mut q = p.to_vec();
    let n = q.len();
    if n < 2 {
        return None;
    }
    let mut i = n - 1;
    while i > 0 && q[i - 1] >= q[i] {
        i -= 1;
    }
    if i == 0 {
        return None;
    }
    let mut j = n - 1;
    while q[j] <= q[i - 1] {
        j -= 1;
    }
    q.swap(i - 1, j);
    q[i..].reverse();
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn empty_and_singleton_orders() {
        assert_eq!(random_permutation(0, Seed(7)).items(), &[] as &[usize]);
        assert_eq!(random_permutation(1, Seed(7)).items(), &[0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = random_permutation(64, Seed(42));
        let b = random_permutation(64, Seed(42));
        assert_eq!(a, b);
        let c = random_permutation(64, Seed(43));
        assert_ne!(a, c);
    }

    #[test]
    fn trial_streams_are_independent_and_reproducible() {
        let s = Seed(9001);
        let p0 = random_permutation_with(32, &mut trial_rng(s, 0));
        let p1 = random_permutation_with(32, &mut trial_rng(s, 1));
        assert_ne!(p0, p1);
        assert_eq!(p0, random_permutation_with(32, &mut trial_rng(s, 0)));
    }

    #[test]
    fn prefix_nesting() {
        let p = random_permutation(16, Seed(3));
        for j in 0..=16 {
            for k in 0..=j {
                assert_eq!(&p.prefix(j)[..k], p.prefix(k));
            }
        }
    }

    #[test]
    fn reversed_is_valid_deletion_order() {
        let p = random_permutation(9, Seed(11));
        let d = p.reversed();
        assert_eq!(d.n(), 9);
        let mut items = d.items().to_vec();
        items.sort_unstable();
        assert_eq!(items, (0..9).collect::<Vec<_>>());
        assert_eq!(d.reversed(), p);
    }

    #[test]
    fn enumeration_n3_is_lexicographic() {
        let all: Vec<_> = all_permutations(3).unwrap().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].items(), &[0, 1, 2]);
        assert_eq!(all[5].items(), &[2, 1, 0]);
        let expect = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for (got, want) in all.iter().zip(expect.iter()) {
            assert_eq!(got.items(), want);
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(all_permutations(1).unwrap().count(), 1);
        assert_eq!(all_permutations(8).unwrap().count(), 40320);
    }

    #[test]
    fn enumeration_yields_distinct_orders() {
        let mut seen = std::collections::HashSet::new();
        for p in all_permutations(6).unwrap() {
            assert!(seen.insert(p.items().to_vec()));
        }
        assert_eq!(seen.len(), 720);
    }

    #[test]
    fn enumeration_rejects_large_n() {
        assert_eq!(all_permutations(11).unwrap_err(), PermError::TooLarge(11));
    }

    /// Frequency test from the module contract: 120k samples of S_5, every
    /// permutation within 5 binomial standard deviations of 1/120.
    #[test]
    fn uniformity_n5_frequency() {
        let samples = 120_000u32;
        let mut counts: HashMap<Vec<usize>, u32> = HashMap::new();
        let seed = Seed(0xA5A5);
        for t in 0..samples {
            let p = random_permutation_with(5, &mut trial_rng(seed, t as u64));
            *counts.entry(p.items().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 120, "every permutation should appear");
        let p = 1.0 / 120.0;
        let mean = samples as f64 * p;
        let sd = (samples as f64 * p * (1.0 - p)).sqrt();
        for (perm, &c) in &counts {
            let dev = (c as f64 - mean).abs();
            assert!(
                dev <= 5.0 * sd,
                "permutation {perm:?} count {c} deviates {dev:.1} > 5sd ({sd:.1})"
            );
        }
    }

    /// Same check at n = 3 and 4 (module invariant).
    #[test]
    fn uniformity_small_n_frequency() {
        for (n, samples) in [(3usize, 60_000u32), (4, 96_000)] {
            let perms = (1..=n).product::<usize>();
            let mut counts: HashMap<Vec<usize>, u32> = HashMap::new();
            for t in 0..samples {
                let p = random_permutation_with(n, &mut trial_rng(Seed(77), t as u64));
                *counts.entry(p.items().to_vec()).or_default() += 1;
            }
            assert_eq!(counts.len(), perms);
            let prob = 1.0 / perms as f64;
            let mean = samples as f64 * prob;
            let sd = (samples as f64 * prob * (1.0 - prob)).sqrt();
            for &c in counts.values() {
                assert!((c as f64 - mean).abs() <= 5.0 * sd);
            }
        }
    }
}
