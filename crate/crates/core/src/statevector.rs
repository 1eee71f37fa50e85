//! Exact two-register simulation of the search operator.
//!
//! Register 1 holds an `m`-bit database index, register 2 a counter modulo
//! `N` (not padded to a power of two). All operators involved are real and
//! orthogonal, so amplitudes are stored as `f64`. This is a verifier for the
//! one-register closed form in [`crate::spectrum`], sized for small cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partition::{generate_instance, parity, Cost};
use crate::seed::instance_seed;
use crate::spectrum::ThetaVector;

pub const MAX_FIRST_BITS: usize = 8;
pub const MAX_MODULUS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoRegisterState {
    first_bits: usize,
    modulus: usize,
    /// Row-major: index `i * modulus + j`.
    amps: Vec<f64>,
}

/// Addend used by the work-bit construction of the phase flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkBitAddend {
    /// `N - 1 - floor(eps)`: overflow exactly when `j > eps`, so flipping on
    /// the inverted work bit negates `j <= eps`.
    Corrected,
    /// `N - floor(eps)` as the recipe is usually stated; the inverted work
    /// bit then negates only `j < eps`.
    Literal,
}

impl TwoRegisterState {
    /// `|0>|0>`.
    pub fn zero(first_bits: usize, modulus: usize) -> Result<Self> {
        Self::check_dims(first_bits, modulus)?;
        let mut amps = vec![0.0; (1 << first_bits) * modulus];
        amps[0] = 1.0;
        Ok(TwoRegisterState {
            first_bits,
            modulus,
            amps,
        })
    }

    pub fn basis(first_bits: usize, modulus: usize, i: usize, j: usize) -> Result<Self> {
        let mut s = Self::zero(first_bits, modulus)?;
        if i >= 1 << first_bits || j >= modulus {
            return Err(Error::invalid(format!(
                "basis state |{i}>|{j}> out of range"
            )));
        }
        s.amps[0] = 0.0;
        s.amps[i * modulus + j] = 1.0;
        Ok(s)
    }

    pub fn from_amplitudes(first_bits: usize, modulus: usize, amps: Vec<f64>) -> Result<Self> {
        Self::check_dims(first_bits, modulus)?;
        if amps.len() != (1 << first_bits) * modulus {
            return Err(Error::invalid(format!(
                "expected {} amplitudes, got {}",
                (1 << first_bits) * modulus,
                amps.len()
            )));
        }
        Ok(TwoRegisterState {
            first_bits,
            modulus,
            amps,
        })
    }

    /// A normalized state with uniformly random real amplitudes.
    pub fn random<R: Rng + ?Sized>(first_bits: usize, modulus: usize, rng: &mut R) -> Result<Self> {
        Self::check_dims(first_bits, modulus)?;
        let mut amps: Vec<f64> = (0..(1 << first_bits) * modulus)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(TwoRegisterState {
            first_bits,
            modulus,
            amps,
        })
    }

    fn check_dims(first_bits: usize, modulus: usize) -> Result<()> {
        if first_bits == 0 || first_bits > MAX_FIRST_BITS {
            return Err(Error::invalid(format!(
                "first register must have 1..={MAX_FIRST_BITS} bits, got {first_bits}"
            )));
        }
        if !(2..=MAX_MODULUS).contains(&modulus) {
            return Err(Error::invalid(format!(
                "second register modulus must be in 2..={MAX_MODULUS}, got {modulus}"
            )));
        }
        Ok(())
    }

    pub fn first_bits(&self) -> usize {
        self.first_bits
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn amplitude(&self, i: usize, j: usize) -> f64 {
        self.amps[i * self.modulus + j]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum()
    }

    /// Register-1 amplitudes on the slice where register 2 holds `j`.
    pub fn first_register_at(&self, j: usize) -> Vec<f64> {
        (0..1 << self.first_bits)
            .map(|i| self.amplitude(i, j))
            .collect()
    }

    /// Probability that register 2 reads 0.
    pub fn second_register_zero_probability(&self) -> f64 {
        self.first_register_at(0).iter().map(|a| a * a).sum()
    }

    /// Largest absolute amplitude difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Normalized Walsh-Hadamard transform on register 1 only.
    pub fn apply_walsh_first(&mut self) {
        let rows = 1usize << self.first_bits;
        let n = self.modulus;
        let mut half = 1;
        while half < rows {
            for block in (0..rows).step_by(2 * half) {
                for i in block..block + half {
                    let (lo, hi) = (i * n, (i + half) * n);
                    for j in 0..n {
                        let (a, b) = (self.amps[lo + j], self.amps[hi + j]);
                        self.amps[lo + j] = a + b;
                        self.amps[hi + j] = a - b;
                    }
                }
            }
            half *= 2;
        }
        let scale = (-(self.first_bits as f64) / 2.0).exp2();
        self.amps.iter_mut().for_each(|a| *a *= scale);
    }

    fn check_costs(&self, costs: &[Cost]) -> Result<()> {
        if costs.len() != 1 << self.first_bits {
            return Err(Error::invalid(format!(
                "expected {} costs, got {}",
                1usize << self.first_bits,
                costs.len()
            )));
        }
        if let Some(&c) = costs.iter().find(|&&c| c >= self.modulus as u64) {
            return Err(Error::invalid(format!(
                "cost {c} does not fit a register of modulus {}",
                self.modulus
            )));
        }
        Ok(())
    }

    /// Shifts register 2 by `shift(i)` modulo `N`, row by row.
    fn rotate_rows(&mut self, shift: impl Fn(usize) -> usize) {
        let n = self.modulus;
        for (i, row) in self.amps.chunks_exact_mut(n).enumerate() {
            row.rotate_right(shift(i) % n);
        }
    }

    /// `|i>|j> -> |i>|(j + P(i)) mod N>`.
    pub fn apply_p(&mut self, costs: &[Cost]) -> Result<()> {
        self.check_costs(costs)?;
        self.rotate_rows(|i| costs[i] as usize);
        Ok(())
    }

    /// `|i>|j> -> |i>|(j + N - P(i)) mod N>`.
    pub fn apply_p_inv(&mut self, costs: &[Cost]) -> Result<()> {
        self.check_costs(costs)?;
        let n = self.modulus;
        self.rotate_rows(|i| n - costs[i] as usize);
        Ok(())
    }

    fn check_epsilon(&self, epsilon: f64) -> Result<usize> {
        if !(epsilon >= 0.0 && epsilon < self.modulus as f64) {
            return Err(Error::invalid(format!(
                "epsilon {epsilon} must lie in [0, {})",
                self.modulus
            )));
        }
        Ok(epsilon.floor() as usize)
    }

    /// Negates every component whose register-2 value is `<= epsilon`.
    pub fn apply_s(&mut self, epsilon: f64) -> Result<()> {
        let limit = self.check_epsilon(epsilon)?;
        let n = self.modulus;
        for row in self.amps.chunks_exact_mut(n) {
            row[..=limit].iter_mut().for_each(|a| *a = -*a);
        }
        Ok(())
    }

    /// Phase flip through an explicit work bit: add a constant to register 2
    /// recording overflow in the work bit, invert the work bit, flip the phase
    /// where it is set, invert back, and uncompute the addition.
    ///
    /// Returns the probability left on work bit 1 afterwards, which is zero
    /// whenever the uncomputation is correct.
    pub fn apply_s_work_bit(&mut self, epsilon: f64, addend: WorkBitAddend) -> Result<f64> {
        let floor = self.check_epsilon(epsilon)?;
        let n = self.modulus;
        let c = match addend {
            WorkBitAddend::Corrected => n - 1 - floor,
            WorkBitAddend::Literal => n - floor,
        };
        let rows = self.amps.len() / n;
        let mut plane = [std::mem::take(&mut self.amps), vec![0.0; rows * n]];

        // (j, w) -> ((j + c) mod N, w ^ [j + c >= N])
        let mut next = [vec![0.0; rows * n], vec![0.0; rows * n]];
        for w in 0..2 {
            for i in 0..rows {
                for j in 0..n {
                    let overflow = (j + c >= n) as usize;
                    next[w ^ overflow][i * n + (j + c) % n] = plane[w][i * n + j];
                }
            }
        }
        plane = next;

        plane.swap(0, 1);
        plane[1].iter_mut().for_each(|a| *a = -*a);
        plane.swap(0, 1);

        // inverse: overflow happened exactly when the shifted value is below c
        let mut next = [vec![0.0; rows * n], vec![0.0; rows * n]];
        for w in 0..2 {
            for i in 0..rows {
                for j in 0..n {
                    let overflow = (j < c) as usize;
                    next[w ^ overflow][i * n + (j + n - c % n) % n] = plane[w][i * n + j];
                }
            }
        }
        let [zero, one] = next;
        self.amps = zero;
        Ok(one.iter().map(|a| a * a).sum())
    }

    /// `W_s · P^-1 · S · P · W_s`.
    pub fn apply_d(&mut self, costs: &[Cost], epsilon: f64) -> Result<()> {
        self.check_costs(costs)?;
        self.check_epsilon(epsilon)?;
        self.apply_walsh_first();
        self.apply_p(costs)?;
        self.apply_s(epsilon)?;
        self.apply_p_inv(costs)?;
        self.apply_walsh_first();
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub worst_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &'static str, errors: impl IntoIterator<Item = f64>, tol: f64) {
        let mut cases = 0;
        let mut worst: f64 = 0.0;
        for e in errors {
            cases += 1;
            worst = worst.max(e);
        }
        self.checks.push(CheckResult {
            name,
            cases,
            worst_error: worst,
            passed: worst <= tol,
        });
    }
}

pub const INSTANCES_PER_SIZE: u64 = 10;

/// Compares `D|0>|0>` with the closed form for one cost table and threshold.
/// Returns `(max amplitude error, 1 - P(register 2 = 0))`.
pub fn compare_with_closed_form(
    costs: &[Cost],
    modulus: usize,
    epsilon: f64,
) -> Result<(f64, f64)> {
    let first_bits = costs.len().trailing_zeros() as usize;
    let mut state = TwoRegisterState::zero(first_bits, modulus)?;
    state.apply_d(costs, epsilon)?;
    let expected = match ThetaVector::epsilon(costs, epsilon) {
        Ok(theta) => theta.distribution().amplitudes(),
        // nothing marked: D acts as the identity on |0>|0>
        Err(e) if e.is_degenerate_oracle() && costs.iter().all(|&c| c as f64 > epsilon) => {
            let mut v = vec![0.0; costs.len()];
            v[0] = 1.0;
            v
        }
        Err(e) if e.is_degenerate_oracle() => {
            let mut v = vec![0.0; costs.len()];
            v[0] = -1.0;
            v
        }
        Err(e) => return Err(e),
    };
    let got = state.first_register_at(0);
    let err = got
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((err, (1.0 - state.second_register_zero_probability()).abs()))
}

/// Runs every operator identity on random instances with `2..=max_n` values
/// of `bits`-bit precision.
pub fn verify_identities(max_n: usize, bits: u32, seed: u64) -> Result<VerifyReport> {
    if !(2..=MAX_FIRST_BITS + 1).contains(&max_n) {
        return Err(Error::invalid(format!(
            "max_n must be in 2..={}, got {max_n}",
            MAX_FIRST_BITS + 1
        )));
    }
    if bits == 0 || ((max_n as u64) << bits) > MAX_MODULUS as u64 {
        return Err(Error::invalid(format!(
            "modulus {max_n} * 2^{bits} exceeds {MAX_MODULUS}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport::default();

    let mut walsh = Vec::new();
    let mut round_trip = Vec::new();
    let mut unitarity = Vec::new();
    let mut prepare = Vec::new();
    let mut phase = Vec::new();
    let mut closed_form = Vec::new();
    let mut uncompute = Vec::new();

    for n in 2..=max_n {
        let m = n - 1;
        let modulus = n << bits;
        for idx in 0..INSTANCES_PER_SIZE {
            let inst = generate_instance(n, bits, instance_seed(seed, n, idx))?;
            let costs = inst.all_costs()?;
            let eps = 0.29 * inst.total() as f64;

            let psi = TwoRegisterState::random(m, modulus, &mut rng)?;
            let mut s = psi.clone();
            s.apply_walsh_first();
            unitarity.push((s.norm_sqr() - 1.0).abs());
            s.apply_walsh_first();
            walsh.push(s.max_abs_diff(&psi));

            let mut s = psi.clone();
            s.apply_p(&costs)?;
            unitarity.push((s.norm_sqr() - 1.0).abs());
            s.apply_p_inv(&costs)?;
            round_trip.push(s.max_abs_diff(&psi));

            // A|0>|0> = 2^(-m/2) sum_s |s>|P(s)>
            let mut s = TwoRegisterState::zero(m, modulus)?;
            s.apply_walsh_first();
            s.apply_p(&costs)?;
            let amp = (-(m as f64) / 2.0).exp2();
            let mut expect = vec![0.0; s.amplitudes().len()];
            for (k, &c) in costs.iter().enumerate() {
                expect[k * modulus + c as usize] = amp;
            }
            prepare.push(s.max_abs_diff(&TwoRegisterState::from_amplitudes(m, modulus, expect)?));

            let mut direct = psi.clone();
            direct.apply_s(eps)?;
            unitarity.push((direct.norm_sqr() - 1.0).abs());
            let mut via_work = psi.clone();
            let residual = via_work.apply_s_work_bit(eps, WorkBitAddend::Corrected)?;
            phase.push(direct.max_abs_diff(&via_work).max(residual));

            let (err, leak) = compare_with_closed_form(&costs, modulus, eps)?;
            closed_form.push(err);
            uncompute.push(leak);
        }
    }
    report.record("walsh transform is an involution", walsh, 1e-12);
    report.record("cost addition round-trips", round_trip, 1e-12);
    report.record("operators preserve the norm", unitarity, 1e-12);
    report.record(
        "preparation gives uniform superposition of costs",
        prepare,
        1e-12,
    );
    report.record("work-bit phase flip matches direct flip", phase, 1e-12);
    report.record(
        "register 1 matches closed-form amplitudes",
        closed_form,
        1e-9,
    );
    report.record("register 2 returns to zero", uncompute, 1e-12);

    let mut deterministic = Vec::new();
    for m in 1..max_n {
        for x in 1u64..1 << m {
            // cost 0 on the odd-parity set of x, 1 elsewhere; flip at 0
            let costs: Vec<Cost> = (0..1u64 << m)
                .map(|k| if parity(k & x) { 0 } else { 1 })
                .collect();
            let mut s = TwoRegisterState::zero(m, 2)?;
            s.apply_d(&costs, 0.0)?;
            let target = TwoRegisterState::basis(m, 2, x as usize, 0)?;
            let mut flipped = target.clone();
            flipped.amps.iter_mut().for_each(|a| *a = -*a);
            deterministic.push(s.max_abs_diff(&target).min(s.max_abs_diff(&flipped)));
        }
    }
    report.record(
        "odd-parity oracle gives a certain outcome",
        deterministic,
        1e-12,
    );
    Ok(report)
}
