//! The dart-throwing minimum game.
//!
//! Darts hit n distinct ordered locations in a random order (a permutation —
//! the backward-analysis argument needs distinct values, so sampling is
//! without replacement). S(i) is the smallest location among the first i
//! darts and Z(n) counts the steps where the running minimum changes, with
//! the first dart counting as a change. E[Z(n)] = H_n exactly, and the
//! Freedman corollary bounds Pr[|Z - H_n| >= 0.9 ln n] by n^{-0.7}.
//!
//! All logarithms in the deviation checks are natural logs, matching
//! H_n ~ ln n.

use crate::rng::InsertionOrder;

/// Running minima and change count of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct DartTrace {
    /// S(1)..S(n): the running minimum location.
    pub mins: Vec<usize>,
    /// Z(n): number of i with S(i) != S(i-1), counting i = 1.
    pub z: usize,
}

/// Plays the game along `order` (locations are the order's items).
pub fn play_darts(order: &InsertionOrder) -> DartTrace {
    let mut mins = Vec::with_capacity(order.n());
    let mut z = 0usize;
    let mut best = usize::MAX;
    for &loc in order.items() {
        if loc < best {
            best = loc;
            z += 1;
        }
        mins.push(best);
    }
    DartTrace { mins, z }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{all_permutations, random_permutation, Seed};
    use num_rational::Ratio;

    type Rat = Ratio<i128>;

    fn exact_mean_z(n: usize) -> Rat {
        let mut sum = Rat::from(0);
        let mut count = 0i128;
        for order in all_permutations(n).unwrap() {
            sum += Rat::from(play_darts(&order).z as i128);
            count += 1;
        }
        sum / Rat::from(count)
    }

    fn harmonic_rat(n: usize) -> Rat {
        (1..=n as i128).map(|i| Rat::new(1, i)).sum()
    }

    #[test]
    fn single_dart_changes_once() {
        assert_eq!(play_darts(&InsertionOrder::identity(1)).z, 1);
    }

    #[test]
    fn sorted_order_changes_once() {
        let t = play_darts(&InsertionOrder::identity(6));
        assert_eq!(t.z, 1);
        assert_eq!(t.mins, vec![0; 6]);
    }

    #[test]
    fn reversed_order_changes_every_step() {
        let t = play_darts(&InsertionOrder::new(vec![4, 3, 2, 1, 0]));
        assert_eq!(t.z, 5);
    }

    #[test]
    fn mins_nonincreasing_and_z_consistent() {
        for seed in 0..10u64 {
            let t = play_darts(&random_permutation(40, Seed(seed)));
            assert!(t.mins.windows(2).all(|w| w[1] <= w[0]));
            let changes = 1 + t.mins.windows(2).filter(|w| w[1] < w[0]).count();
            assert_eq!(t.z, changes);
            assert!(1 <= t.z && t.z <= 40);
        }
    }

    #[test]
    fn n2_distribution_is_half_half() {
        let zs: Vec<usize> = all_permutations(2)
            .unwrap()
            .map(|o| play_darts(&o).z)
            .collect();
        let mut sorted = zs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 2]);
    }

    #[test]
    fn exact_mean_is_harmonic() {
        // n = 3: 11/6; n = 8: 761/280; and everything between.
        assert_eq!(exact_mean_z(3), Rat::new(11, 6));
        for n in 1..=8 {
            assert_eq!(exact_mean_z(n), harmonic_rat(n), "n = {n}");
        }
    }

    /// Z only depends on the relative order of locations: counting running-
    /// minimum changes over any order-preserving relabeling of the locations
    /// gives the same Z.
    #[test]
    fn relabel_invariance() {
        let maps: [fn(usize) -> i64; 2] = [|x| 3 * x as i64 + 7, |x| (x as i64).pow(3) - 100];
        for seed in 0..10u64 {
            let order = random_permutation(12, Seed(40 + seed));
            let z = play_darts(&order).z;
            for map in maps {
                let mut best = i64::MAX;
                let mut changes = 0usize;
                for &loc in order.items() {
                    if map(loc) < best {
                        best = map(loc);
                        changes += 1;
                    }
                }
                assert_eq!(changes, z);
            }
        }
    }

    /// Monte Carlo mean within 3 standard errors of H_n across sizes.
    #[test]
    fn monte_carlo_mean_tracks_harmonic() {
        for n in [64usize, 1024, 16384] {
            let trials = 2000u32;
            let seed = Seed(0xDA27);
            let mut sum = 0.0;
            let mut sq = 0.0;
            for t in 0..trials {
                let order = crate::rng::random_permutation_with(
                    n,
                    &mut crate::rng::trial_rng(seed, (n as u64) << 32 | t as u64),
                );
                let z = play_darts(&order).z as f64;
                sum += z;
                sq += z * z;
            }
            let mean = sum / trials as f64;
            let var = sq / trials as f64 - mean * mean;
            let se = (var / trials as f64).sqrt();
            let h = crate::bounds::harmonic(n);
            assert!(
                (mean - h).abs() <= 3.0 * se,
                "n = {n}: mean {mean} vs H_n {h} (se {se})"
            );
        }
    }

    /// Doob oracle: the dart cost function is an exact martingale and its
    /// root value is H_n.
    #[test]
    fn doob_root_is_harmonic() {
        let cost = |o: &InsertionOrder| Rat::from(play_darts(o).z as i128);
        let m = crate::doob::exact_doob(5, cost, &InsertionOrder::identity(5)).unwrap();
        assert_eq!(m.y0(), harmonic_rat(5));
        assert!(crate::doob::martingale_property_check(5, cost).unwrap());
    }
}
