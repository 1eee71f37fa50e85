//! Set partition instances and the brute-force cost machinery.
//!
//! An instance of `n` values is searched over a database of `2^(n-1)`
//! assignments: the smallest value (the *anchor*, position 0) always sits in
//! the subset `s`, which removes the complement symmetry of the cost. Bit `i`
//! of an [`Assignment`] refers to `values[i + 1]`; a set bit places that value
//! in the opposite group from the anchor.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest number of free bits the dense enumerations will accept by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Largest value precision accepted by [`generate_instance`].
pub const MAX_BITS: u32 = 40;

/// Default precision for generated instances. High enough that instances up
/// to n = 17 almost never have more than one optimal split.
pub const DEFAULT_BITS: u32 = 20;

pub type Cost = u64;

/// Index of one database item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Assignment(pub u64);

impl Assignment {
    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    /// True when free element `i` (i.e. `values[i + 1]`) is outside `s`.
    #[inline]
    pub fn is_out(self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }

    #[inline]
    pub fn popcount(self) -> u32 {
        self.0.count_ones()
    }

    /// Binary string, least-significant bit first, `width` characters.
    pub fn lsb_first(self, width: usize) -> String {
        (0..width)
            .map(|i| if self.is_out(i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for Assignment {
    fn from(bits: u64) -> Self {
        Assignment(bits)
    }
}

/// Parity of the number of set bits.
#[inline]
pub fn parity(x: u64) -> bool {
    x.count_ones() & 1 == 1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionInstance {
    values: Vec<u64>,
    bits: u32,
}

impl PartitionInstance {
    /// Builds an instance, sorting `values` ascending (stable, so ties keep
    /// their input order).
    pub fn new(mut values: Vec<u64>, bits: u32) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "an instance needs at least 2 values, got {}",
                values.len()
            )));
        }
        if bits == 0 || bits > MAX_BITS + 8 {
            return Err(Error::invalid(format!("bit precision {bits} out of range")));
        }
        values.sort();
        Ok(PartitionInstance { values, bits })
    }

    /// Builds an instance with the smallest precision that holds every value.
    pub fn from_values(values: Vec<u64>) -> Result<Self> {
        let max = values.iter().copied().max().unwrap_or(0);
        let bits = (u64::BITS - max.leading_zeros()).max(1);
        PartitionInstance::new(values, bits)
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of values, `n`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn anchor(&self) -> u64 {
        self.values[0]
    }

    /// Number of free assignment bits, `n - 1`.
    pub fn free_count(&self) -> usize {
        self.values.len() - 1
    }

    /// Database size `2^(n-1)`.
    pub fn database_size(&self) -> u64 {
        1u64 << self.free_count()
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    /// Second-register modulus `n * 2^b`, an upper bound on any cost of a
    /// freshly generated instance.
    pub fn register_modulus(&self) -> u64 {
        (self.values.len() as u64) << self.bits
    }

    /// `|sum in s - sum not in s|`.
    pub fn cost(&self, a: Assignment) -> Result<Cost> {
        if self.free_count() < 64 && a.0 >= self.database_size() {
            return Err(Error::invalid(format!(
                "assignment {} out of range for {} free bits",
                a.0,
                self.free_count()
            )));
        }
        Ok(self.cost_unchecked(a))
    }

    pub(crate) fn cost_unchecked(&self, a: Assignment) -> Cost {
        let out: u64 = self.values[1..]
            .iter()
            .enumerate()
            .filter(|&(i, _)| a.is_out(i))
            .map(|(_, &v)| v)
            .sum();
        self.total().abs_diff(2 * out)
    }

    /// Cost of every assignment, indexed by assignment bits.
    pub fn all_costs(&self) -> Result<Vec<Cost>> {
        self.all_costs_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn all_costs_with_cap(&self, cap: usize) -> Result<Vec<Cost>> {
        let m = self.free_count();
        if m > cap {
            return Err(Error::Capacity { free_count: m, cap });
        }
        let size = 1usize << m;
        let total = self.total();
        // out_sum[k] = out_sum[k without its lowest bit] + value of that bit
        let mut out_sum = vec![0u64; size];
        for k in 1..size {
            let low = k.trailing_zeros() as usize;
            out_sum[k] = out_sum[k & (k - 1)] + self.values[low + 1];
        }
        Ok(out_sum.into_iter().map(|o| total.abs_diff(2 * o)).collect())
    }

    /// Minimum cost and every assignment attaining it.
    pub fn optima(&self) -> Result<(Cost, Vec<Assignment>)> {
        Ok(optima_of(&self.all_costs()?))
    }

    /// Cheapest lower bound on any cost: the parity of the total.
    pub fn parity_bound(&self) -> Cost {
        self.total() % 2
    }
}

/// Minimum of a dense cost table and all indices attaining it, ascending.
pub fn optima_of(costs: &[Cost]) -> (Cost, Vec<Assignment>) {
    let best = costs.iter().copied().min().unwrap_or(0);
    let at = costs
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c == best)
        .map(|(k, _)| Assignment(k as u64))
        .collect();
    (best, at)
}

/// Draws `n` values uniformly from `[1, 2^bits - 1]`, sorted ascending.
pub fn generate_instance(n: usize, bits: u32, seed: u64) -> Result<PartitionInstance> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {n}")));
    }
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::invalid(format!(
            "bits must be in 1..={MAX_BITS}, got {bits}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = (1u64 << bits) - 1;
    let values = (0..n).map(|_| rng.gen_range(1..=hi)).collect();
    PartitionInstance::new(values, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(v: &[u64]) -> PartitionInstance {
        PartitionInstance::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn cost_examples() {
        assert_eq!(inst(&[4, 7]).cost(Assignment(0)).unwrap(), 11);
        // only 3 out
        assert_eq!(inst(&[1, 2, 3]).cost(Assignment(0b10)).unwrap(), 0);
        assert_eq!(inst(&[3, 5, 8]).cost(Assignment(0b10)).unwrap(), 0);
    }

    #[test]
    fn cost_rejects_out_of_range() {
        let i = inst(&[3, 5, 8]);
        assert!(matches!(
            i.cost(Assignment(4)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn all_costs_examples() {
        assert_eq!(inst(&[3, 5, 8]).all_costs().unwrap(), vec![16, 6, 0, 10]);
        assert_eq!(inst(&[1, 2]).all_costs().unwrap(), vec![3, 1]);
    }

    #[test]
    fn all_costs_cap() {
        let i = inst(&[1, 2, 3, 4, 5, 6]);
        assert!(matches!(
            i.all_costs_with_cap(4),
            Err(Error::Capacity {
                free_count: 5,
                cap: 4
            })
        ));
        assert_eq!(i.all_costs_with_cap(5).unwrap().len(), 32);
    }

    #[test]
    fn optima_examples() {
        assert_eq!(
            inst(&[3, 5, 8]).optima().unwrap(),
            (0, vec![Assignment(0b10)])
        );
        let (best, at) = inst(&[4, 5, 6, 7, 8]).optima().unwrap();
        assert_eq!(best, 0);
        // {4,5,6} | {7,8}: free bits for 7 and 8 are 2 and 3
        assert!(at.contains(&Assignment(0b1100)));
        assert_eq!(inst(&[1, 1]).optima().unwrap(), (0, vec![Assignment(1)]));
    }

    #[test]
    fn sorts_and_anchors() {
        let i = PartitionInstance::new(vec![9, 2, 5], 4).unwrap();
        assert_eq!(i.values(), &[2, 5, 9]);
        assert_eq!(i.anchor(), 2);
        assert_eq!(i.free_count(), 2);
        assert!(PartitionInstance::new(vec![1], 4).is_err());
    }

    #[test]
    fn generate_contract() {
        let a = generate_instance(5, 10, 42).unwrap();
        assert_eq!(a.len(), 5);
        assert!(a.values().iter().all(|&v| (1..=1023).contains(&v)));
        assert_eq!(a, generate_instance(5, 10, 42).unwrap());
        assert!(generate_instance(1, 10, 0).is_err());
        assert!(generate_instance(5, 0, 0).is_err());
    }

    #[test]
    fn neighbouring_seeds_differ() {
        let differ = (0..100u64)
            .filter(|&s| {
                generate_instance(5, 10, s).unwrap() != generate_instance(5, 10, s + 1).unwrap()
            })
            .count();
        assert!(differ >= 95, "only {differ} of 100 seed pairs differ");
    }

    #[test]
    fn lsb_first_string() {
        assert_eq!(Assignment(0b110).lsb_first(4), "0110");
    }

    proptest! {
        #[test]
        fn dense_table_matches_pointwise(values in prop::collection::vec(0u64..1000, 2..10)) {
            let i = PartitionInstance::new(values, 10).unwrap();
            let costs = i.all_costs().unwrap();
            prop_assert_eq!(costs[0], i.total());
            for (k, &c) in costs.iter().enumerate() {
                prop_assert_eq!(c, i.cost(Assignment(k as u64)).unwrap());
            }
            let (best, at) = i.optima().unwrap();
            prop_assert_eq!(best, *costs.iter().min().unwrap());
            prop_assert!(!at.is_empty());
        }

        #[test]
        fn full_sign_patterns_pair_up(values in prop::collection::vec(0u64..1000, 2..9)) {
            // Over all 2^n sign patterns, a pattern and its complement share a
            // cost, so every cost value occurs an even number of times.
            let n = values.len();
            let mut counts = std::collections::HashMap::new();
            for p in 0u64..(1 << n) {
                let signed: i64 = values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if (p >> i) & 1 == 1 { -(v as i64) } else { v as i64 })
                    .sum();
                *counts.entry(signed.unsigned_abs()).or_insert(0usize) += 1;
            }
            prop_assert!(counts.values().all(|c| c % 2 == 0));
        }

        #[test]
        fn generated_costs_fit_register(n in 2usize..12, bits in 1u32..16, seed: u64) {
            let i = generate_instance(n, bits, seed).unwrap();
            let max = i.all_costs().unwrap().into_iter().max().unwrap();
            prop_assert!(max <= i.register_modulus());
            prop_assert!(max < i.register_modulus());
        }
    }
}
