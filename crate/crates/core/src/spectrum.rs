//! Good/nogood sign vectors and the exact one-shot measurement distribution.
//!
//! Seen from the first register, `D = W · oracle · W`, so the amplitude of
//! outcome `x` after one application to `|0>` is the Walsh-Hadamard transform
//! of the sign vector `Θ` divided by `2^m`. For `x != 0` this equals
//! `(F - N) / 2^(m-1)` where `F` and `N` count good states with odd and even
//! `parity(k & x)`. Everything here is carried in exact integers; the
//! floating-point views are derived.

use rand::Rng;

use crate::error::{Error, Result};
use crate::partition::{parity, Assignment, Cost};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaMode {
    /// Exactly the best half of the database is flipped.
    IdealizedHalf,
    /// States with cost `<= epsilon` are flipped.
    Epsilon(f64),
    /// Built directly from a sign pattern.
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector {
    signs: Vec<i8>,
    good_count: usize,
    mode: ThetaMode,
}

fn check_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "database length {len} is not a power of two >= 2"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

impl ThetaVector {
    /// Flips the best half: keys `(cost, index)` ascending, first `2^(m-1)`.
    pub fn idealized(costs: &[Cost]) -> Result<Self> {
        check_len(costs.len())?;
        let mut order: Vec<usize> = (0..costs.len()).collect();
        order.sort_by_key(|&k| (costs[k], k));
        let mut signs = vec![1i8; costs.len()];
        for &k in &order[..costs.len() / 2] {
            signs[k] = -1;
        }
        Ok(ThetaVector {
            signs,
            good_count: costs.len() / 2,
            mode: ThetaMode::IdealizedHalf,
        })
    }

    /// Flips every state with `cost <= epsilon`.
    pub fn epsilon(costs: &[Cost], epsilon: f64) -> Result<Self> {
        check_len(costs.len())?;
        let signs: Vec<i8> = costs
            .iter()
            .map(|&c| if (c as f64) <= epsilon { -1 } else { 1 })
            .collect();
        Self::with_mode(signs, ThetaMode::Epsilon(epsilon))
    }

    /// Builds from explicit `±1` signs.
    pub fn from_signs(signs: Vec<i8>) -> Result<Self> {
        check_len(signs.len())?;
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid("signs must be +1 or -1"));
        }
        Self::with_mode(signs, ThetaMode::Explicit)
    }

    /// Marks as good exactly the states `k` with odd `parity(k & x)`, the sign
    /// pattern of `W|x>`. One application of `D` then yields `x` with
    /// certainty.
    pub fn odd_parity_set(free_count: usize, x: Assignment) -> Result<Self> {
        if x.0 == 0 || x.0 >= 1u64 << free_count {
            return Err(Error::invalid(format!(
                "x = {} must be nonzero and below 2^{free_count}",
                x.0
            )));
        }
        let signs = (0..1u64 << free_count)
            .map(|k| if parity(k & x.0) { -1 } else { 1 })
            .collect();
        Self::with_mode(signs, ThetaMode::Explicit)
    }

    fn with_mode(signs: Vec<i8>, mode: ThetaMode) -> Result<Self> {
        let good_count = signs.iter().filter(|&&s| s < 0).count();
        if good_count == 0 || good_count == signs.len() {
            return Err(Error::DegenerateOracle {
                good: good_count,
                total: signs.len(),
            });
        }
        Ok(ThetaVector {
            signs,
            good_count,
            mode,
        })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn is_good(&self, k: usize) -> bool {
        self.signs[k] < 0
    }

    pub fn good_count(&self) -> usize {
        self.good_count
    }

    pub fn mode(&self) -> ThetaMode {
        self.mode
    }

    pub fn free_count(&self) -> usize {
        self.signs.len().trailing_zeros() as usize
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// Exact distribution after one application of `D` to `|0>`.
    pub fn distribution(&self) -> MeasurementDistribution {
        MeasurementDistribution::from_theta(self)
    }

    /// `(F, N)`: good states with odd and even `parity(k & x)`.
    pub fn fn_counts(&self, x: Assignment) -> Result<(u64, u64)> {
        if x.0 == 0 {
            return Err(Error::invalid(
                "the F/N form does not hold at x = 0".to_string(),
            ));
        }
        if x.0 >= self.signs.len() as u64 {
            return Err(Error::invalid(format!("x = {} out of range", x.0)));
        }
        let (mut f, mut n) = (0u64, 0u64);
        for (k, &s) in self.signs.iter().enumerate() {
            if s < 0 {
                if parity(k as u64 & x.0) {
                    f += 1;
                } else {
                    n += 1;
                }
            }
        }
        Ok((f, n))
    }
}

/// Unnormalized in-place Walsh-Hadamard transform:
/// `out[x] = sum_k (-1)^parity(k & x) * data[k]`.
pub fn fwht(data: &mut [i64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in (0..len).step_by(2 * half) {
            for i in block..block + half {
                let (a, b) = (data[i], data[i + half]);
                data[i] = a + b;
                data[i + half] = a - b;
            }
        }
        half *= 2;
    }
}

/// Outcome probabilities of one measurement of `D|0>`.
///
/// Amplitudes are kept as integer numerators over `2^(m-1)`, so probabilities
/// are integer weights over `4^(m-1)` and normalization is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDistribution {
    free_count: usize,
    numerators: Vec<i64>,
    cumulative: Vec<u64>,
}

impl MeasurementDistribution {
    fn from_theta(theta: &ThetaVector) -> Self {
        let mut data: Vec<i64> = theta.signs.iter().map(|&s| s as i64).collect();
        fwht(&mut data);
        // every transform entry is even: 2^m - 2G at 0, 2(F - N) elsewhere
        let numerators: Vec<i64> = data.into_iter().map(|w| w / 2).collect();
        let mut acc = 0u64;
        let cumulative = numerators
            .iter()
            .map(|&a| {
                acc += a.unsigned_abs().pow(2);
                acc
            })
            .collect();
        MeasurementDistribution {
            free_count: theta.free_count(),
            numerators,
            cumulative,
        }
    }

    pub fn free_count(&self) -> usize {
        self.free_count
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// Common denominator of every amplitude, `2^(m-1)`.
    pub fn denominator(&self) -> u64 {
        1u64 << (self.free_count - 1)
    }

    /// Integer amplitude numerators; `amplitude(x) = numerators[x] / 2^(m-1)`.
    pub fn numerators(&self) -> &[i64] {
        &self.numerators
    }

    /// Exact probability weight of `x` over [`Self::total_weight`].
    pub fn weight(&self, x: usize) -> u64 {
        self.numerators[x].unsigned_abs().pow(2)
    }

    /// Sum of all weights; always `4^(m-1)`.
    pub fn total_weight(&self) -> u64 {
        *self.cumulative.last().unwrap_or(&0)
    }

    pub fn amplitude(&self, x: usize) -> f64 {
        self.numerators[x] as f64 / self.denominator() as f64
    }

    pub fn probability(&self, x: usize) -> f64 {
        let d = self.denominator() as f64;
        self.weight(x) as f64 / (d * d)
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        (0..self.len()).map(|x| self.amplitude(x)).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.len()).map(|x| self.probability(x)).collect()
    }

    /// Exact probability mass of the outcomes selected by `accept`, as a
    /// weight over [`Self::total_weight`].
    pub fn weight_where(&self, mut accept: impl FnMut(usize) -> bool) -> u64 {
        (0..self.len())
            .filter(|&x| accept(x))
            .map(|x| self.weight(x))
            .sum()
    }

    /// Draws one outcome by inverse CDF over the exact integer weights.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Assignment {
        let r = rng.gen_range(0..self.total_weight());
        let x = self.cumulative.partition_point(|&c| c <= r);
        Assignment(x as u64)
    }
}
