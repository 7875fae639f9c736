//! Exact Doob martingale oracle for tiny ground sets.
//!
//! For a cost function over insertion orders, Y_j is the average cost over
//! all permutations sharing a given length-j prefix. Computed exhaustively in
//! rational arithmetic, this is the ground truth that validates the trace
//! instrumentation: Y_0 is the exact expected cost, Y_n the realized cost,
//! and the tower property E[Y_{j+1} | prefix] = Y_j must hold with exact
//! equality at every node of the prefix tree.
//!
//! The oracle is capped at n <= 8 (40320 permutations); the full-tree
//! property check at n <= 7. That is small enough to stay instant and large
//! enough to catch off-by-one instrumentation bugs.

use crate::rng::{all_permutations, InsertionOrder, PermError};
use num_rational::Ratio;
use std::collections::HashMap;

pub type Rat = Ratio<i128>;

/// Cap for [`exact_doob`].
pub const MAX_EXACT_N: usize = 8;
/// Cap for [`martingale_property_check`] (walks every tree node).
pub const MAX_CHECK_N: usize = 7;

/// Exact martingale values Y_0..Y_n along one insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleExact {
    pub y: Vec<Rat>,
}

impl MartingaleExact {
    pub fn y0(&self) -> Rat {
        self.y[0]
    }

    pub fn yn(&self) -> Rat {
        *self.y.last().unwrap()
    }
}

/// The full Doob table: Y(prefix) for every prefix of every permutation of
/// `0..n`, keyed by packed prefix.
#[derive(Debug, Clone)]
pub struct DoobTable {
    n: usize,
    y: HashMap<u64, Rat>,
}

/// Packs a prefix (items < 16, length <= 15) into a u64 key.
fn pack(prefix: &[usize]) -> u64 {
    let mut key = prefix.len() as u64;
    for (i, &x) in prefix.iter().enumerate() {
        key |= (x as u64 + 1) << (4 * (i + 1));
    }
    key
}

fn factorial(n: usize) -> i128 {
    (1..=n as i128).product()
}

impl DoobTable {
    /// Builds the table by one pass over all n! permutations, evaluating the
    /// cost once per permutation and accumulating prefix sums.
    pub fn build<F>(n: usize, costs: F) -> Result<Self, PermError>
    where
        F: Fn(&InsertionOrder) -> Rat,
    {
        if n > MAX_EXACT_N {
            return Err(PermError::OracleTooLarge {
                n,
                limit: MAX_EXACT_N,
            });
        }
        let mut sums: HashMap<u64, Rat> = HashMap::new();
        for order in all_permutations(n)? {
            let c = costs(&order);
            for j in 0..=n {
                *sums.entry(pack(order.prefix(j))).or_insert_with(|| Rat::from(0)) += c;
            }
        }
        // Y(prefix of length j) = sum / (n-j)! since each prefix extends to
        // exactly (n-j)! permutations.
        let y = sums
            .into_iter()
            .map(|(key, sum)| {
                let len = (key & 0xF) as usize;
                (key, sum / Rat::from(factorial(n - len)))
            })
            .collect();
        Ok(Self { n, y })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn y(&self, prefix: &[usize]) -> Rat {
        self.y[&pack(prefix)]
    }

    /// Overwrites one node's value; used as a negative control to show the
    /// property check actually bites.
    pub fn corrupt(&mut self, prefix: &[usize], delta: Rat) {
        let v = self.y.get_mut(&pack(prefix)).expect("prefix not in table");
        *v += delta;
    }

    /// Exact tower-property verification: at every internal node, the average
    /// of the children's Y equals the node's Y.
    pub fn verify(&self) -> bool {
        self.verify_from(&mut Vec::with_capacity(self.n))
    }

    fn verify_from(&self, prefix: &mut Vec<usize>) -> bool {
        let j = prefix.len();
        if j == self.n {
            return true;
        }
        let mut child_sum = Rat::from(0);
        let mut children = 0i128;
        for x in 0..self.n {
            if prefix.contains(&x) {
                continue;
            }
            prefix.push(x);
            child_sum += self.y(prefix);
            children += 1;
            let ok = self.verify_from(prefix);
            prefix.pop();
            if !ok {
                return false;
            }
        }
        child_sum / Rat::from(children) == self.y(prefix)
    }
}

/// Exact Doob martingale Y_0..Y_n along `order`, by exhaustive enumeration.
pub fn exact_doob<F>(n: usize, costs: F, order: &InsertionOrder) -> Result<MartingaleExact, PermError>
where
    F: Fn(&InsertionOrder) -> Rat,
{
    assert_eq!(order.n(), n, "order length must match n");
    let table = DoobTable::build(n, costs)?;
    let y = (0..=n).map(|j| table.y(order.prefix(j))).collect();
    Ok(MartingaleExact { y })
}

/// True iff the cost function's Doob table satisfies the tower property
/// exactly at every node. Capped at n <= 7.
pub fn martingale_property_check<F>(n: usize, costs: F) -> Result<bool, PermError>
where
    F: Fn(&InsertionOrder) -> Rat,
{
    if n > MAX_CHECK_N {
        return Err(PermError::OracleTooLarge {
            n,
            limit: MAX_CHECK_N,
        });
    }
    Ok(DoobTable::build(n, costs)?.verify())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_permutation, Seed};

    #[test]
    fn singleton_is_constant() {
        let m = exact_doob(1, |_| Rat::new(7, 2), &InsertionOrder::identity(1)).unwrap();
        assert_eq!(m.y, vec![Rat::new(7, 2); 2]);
    }

    #[test]
    fn constant_cost_is_flat() {
        let c = Rat::new(5, 3);
        for seed in 0..3u64 {
            let order = random_permutation(5, Seed(seed));
            let m = exact_doob(5, |_| c, &order).unwrap();
            assert!(m.y.iter().all(|&y| y == c));
        }
        assert!(martingale_property_check(5, |_| c).unwrap());
    }

    /// A cost that depends only on the first inserted item: Y_1 must equal it
    /// and Y_0 its average.
    #[test]
    fn first_item_cost() {
        let cost = |o: &InsertionOrder| Rat::from(o.items()[0] as i128);
        let order = InsertionOrder::new(vec![2, 0, 1, 3]);
        let m = exact_doob(4, cost, &order).unwrap();
        assert_eq!(m.y0(), Rat::new(3, 2)); // mean of 0..4
        assert_eq!(m.y[1], Rat::from(2));
        assert_eq!(m.yn(), Rat::from(2));
        assert!(martingale_property_check(4, cost).unwrap());
    }

    #[test]
    fn yn_is_realized_cost_and_y0_is_order_free() {
        let cost = |o: &InsertionOrder| {
            // Number of inversions, as an arbitrary nonconstant cost.
            let it = o.items();
            let mut inv = 0i128;
            for i in 0..it.len() {
                for j in i + 1..it.len() {
                    if it[i] > it[j] {
                        inv += 1;
                    }
                }
            }
            Rat::from(inv)
        };
        let mut y0s = Vec::new();
        for seed in 0..5u64 {
            let order = random_permutation(5, Seed(100 + seed));
            let m = exact_doob(5, cost, &order).unwrap();
            assert_eq!(m.yn(), cost(&order));
            y0s.push(m.y0());
        }
        assert!(y0s.windows(2).all(|w| w[0] == w[1]));
        // Expected inversion count of a random 5-permutation: C(5,2)/2 = 5.
        assert_eq!(y0s[0], Rat::from(5));
    }

    #[test]
    fn corrupted_table_fails_check() {
        let cost = |o: &InsertionOrder| Rat::from(o.items()[0] as i128);
        let mut table = DoobTable::build(4, cost).unwrap();
        assert!(table.verify());
        table.corrupt(&[1, 2], Rat::from(1));
        assert!(!table.verify());
    }

    #[test]
    fn size_caps_enforced() {
        let c = |_: &InsertionOrder| Rat::from(0);
        assert!(matches!(
            exact_doob(9, c, &InsertionOrder::identity(9)),
            Err(PermError::OracleTooLarge { n: 9, limit: 8 })
        ));
        assert!(matches!(
            martingale_property_check(8, c),
            Err(PermError::OracleTooLarge { n: 8, limit: 7 })
        ));
    }
}
