//! Per-size reduction probabilities and the expected-cost model built on them.
//!
//! For each instance the probability that one accepted measurement keeps an
//! optimum (`p_good`) or discards every optimum (`p_bad`) is computed exactly
//! by enumerating all outcomes. Averaged over instances these give `p_G(n)`
//! and `p_B(n)`, from which
//!
//! * `N0 = sum_{i=5..n} 1 / (p_G(i) + p_B(i))`, the expected calls per run,
//! * `Pc = prod_{i=5..n} p_G(i)`, the chance a run ends optimal,
//! * `N0 * Pc * sum_{k>=1} k (1 - Pc)^(k-1)`, the expected calls until the
//!   first optimal run (closed form `N0 / Pc`).

use rayon::prelude::*;

use crate::driver::{Scheme, SchemeConfig, ThetaKind};
use crate::error::{Error, Result};
use crate::partition::{generate_instance, optima_of, parity, PartitionInstance};
use crate::seed::instance_seed;

/// Smallest size the search measures at; smaller instances are enumerated.
pub const FIRST_MEASURED_SIZE: usize = 5;

pub const DEFAULT_THRESHOLD: f64 = 1e-4;

/// Exact one-iteration probabilities for a single instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionProbabilities {
    pub p_good: f64,
    pub p_bad: f64,
}

/// Sums the exact outcome probabilities of scheme-accepted measurements,
/// split by whether an optimum survives.
pub fn reduction_probabilities(
    instance: &PartitionInstance,
    cfg: &SchemeConfig,
) -> Result<ReductionProbabilities> {
    let costs = instance.all_costs()?;
    let dist = cfg.theta(instance, &costs)?.distribution();
    let (_, optima) = optima_of(&costs);
    let (mut good, mut bad) = (0u64, 0u64);
    for x in 1..dist.len() as u64 {
        if !cfg.scheme.accepts(x) {
            continue;
        }
        let w = dist.weight(x as usize);
        if optima.iter().any(|k| parity(k.0 & x)) {
            good += w;
        } else {
            bad += w;
        }
    }
    let total = dist.total_weight() as f64;
    Ok(ReductionProbabilities {
        p_good: good as f64 / total,
        p_bad: bad as f64 / total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub instances: usize,
    pub bits: u32,
    pub base_seed: u64,
    pub search: SchemeConfig,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < FIRST_MEASURED_SIZE || self.n_min > self.n_max {
            return Err(Error::invalid(format!(
                "size range {}..={} must satisfy {FIRST_MEASURED_SIZE} <= n_min <= n_max",
                self.n_min, self.n_max
            )));
        }
        if self.n_max - 1 > crate::partition::DEFAULT_ENUMERATION_CAP {
            return Err(Error::Capacity {
                free_count: self.n_max - 1,
                cap: crate::partition::DEFAULT_ENUMERATION_CAP,
            });
        }
        if self.instances == 0 {
            return Err(Error::invalid("instances must be at least 1"));
        }
        self.search.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeStats {
    pub n: usize,
    /// Instances generated, including degenerate ones.
    pub instances: usize,
    /// Instances whose oracle marked nothing or everything; excluded from
    /// the means.
    pub degenerate_count: usize,
    pub p_good_mean: f64,
    pub p_good_std: f64,
    pub p_bad_mean: f64,
    pub p_bad_std: f64,
}

impl SizeStats {
    pub fn expected_calls_per_iteration(&self) -> f64 {
        1.0 / (self.p_good_mean + self.p_bad_mean)
    }

    /// Probability that an accepted measurement keeps an optimum:
    /// `p_good_mean / (p_good_mean + p_bad_mean)`.
    pub fn success_probability(&self) -> f64 {
        let accepted = self.p_good_mean + self.p_bad_mean;
        if accepted > 0.0 {
            self.p_good_mean / accepted
        } else {
            0.0
        }
    }

    fn from_samples(n: usize, instances: usize, samples: &[ReductionProbabilities]) -> Self {
        let (gm, gs) = mean_std(samples.iter().map(|p| p.p_good));
        let (bm, bs) = mean_std(samples.iter().map(|p| p.p_bad));
        SizeStats {
            n,
            instances,
            degenerate_count: instances - samples.len(),
            p_good_mean: gm,
            p_good_std: gs,
            p_bad_mean: bm,
            p_bad_std: bs,
        }
    }
}

/// Mean and population standard deviation, folded in input order.
fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = xs.clone().count();
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / count as f64;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / count as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStats {
    pub scheme: Scheme,
    pub theta: ThetaKind,
    pub epsilon_fraction: f64,
    pub bits: u32,
    pub rows: Vec<SizeStats>,
}

impl SweepStats {
    pub fn row(&self, n: usize) -> Option<&SizeStats> {
        self.rows.iter().find(|r| r.n == n)
    }

    fn rows_through(&self, n: usize) -> Result<Vec<&SizeStats>> {
        if n < FIRST_MEASURED_SIZE {
            return Err(Error::invalid(format!(
                "n = {n} is below the first measured size {FIRST_MEASURED_SIZE}"
            )));
        }
        (FIRST_MEASURED_SIZE..=n)
            .map(|i| {
                self.row(i)
                    .ok_or_else(|| Error::invalid(format!("sweep has no data for n = {i}")))
            })
            .collect()
    }

    /// Sizes `n` for which every size from 5 through `n` is present.
    pub fn covered_sizes(&self) -> Vec<usize> {
        (FIRST_MEASURED_SIZE..)
            .take_while(|&i| self.row(i).is_some())
            .collect()
    }
}

/// Evaluates fresh random instances at every size in the range. Instances
/// are processed in parallel; aggregation is in instance order, so the
/// result does not depend on the thread count.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepStats> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.n_max - cfg.n_min + 1);
    for n in cfg.n_min..=cfg.n_max {
        let results: Vec<Result<ReductionProbabilities>> = (0..cfg.instances as u64)
            .into_par_iter()
            .map(|i| {
                let inst = generate_instance(n, cfg.bits, instance_seed(cfg.base_seed, n, i))?;
                reduction_probabilities(&inst, &cfg.search)
            })
            .collect();
        let mut samples = Vec::with_capacity(results.len());
        for r in results {
            match r {
                Ok(p) => samples.push(p),
                Err(e) if e.is_degenerate_oracle() => {}
                Err(e) => return Err(e),
            }
        }
        rows.push(SizeStats::from_samples(n, cfg.instances, &samples));
    }
    Ok(SweepStats {
        scheme: cfg.search.scheme,
        theta: cfg.search.theta,
        epsilon_fraction: cfg.search.epsilon_fraction,
        bits: cfg.bits,
        rows,
    })
}

/// Product over sizes `5..=n` of the per-iteration success probability.
pub fn pc(stats: &SweepStats, n: usize) -> Result<f64> {
    Ok(stats
        .rows_through(n)?
        .iter()
        .map(|r| r.success_probability())
        .product())
}

/// `sum_{i=5..n} 1 / (p_G(i) + p_B(i))`.
pub fn n0(stats: &SweepStats, n: usize) -> Result<f64> {
    weighted_n0(stats, n, 0.0)
}

fn weighted_n0(stats: &SweepStats, n: usize, w: f64) -> Result<f64> {
    let rows = stats.rows_through(n)?;
    let mut total = 0.0;
    for r in rows {
        let accepted = r.p_good_mean + r.p_bad_mean;
        if accepted.is_nan() || accepted <= 0.0 {
            return Err(Error::Divergence(format!(
                "no accepted measurement mass at n = {}",
                r.n
            )));
        }
        total += (r.n as f64 / n as f64).powf(w) / accepted;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityEstimate {
    /// Series summed until a term drops below the threshold.
    pub truncated: f64,
    /// `N0 / Pc`.
    pub closed: f64,
}

/// `sum_{k>=1} k q^(k-1)`, adding terms until one falls below `threshold`.
pub fn truncated_series(q: f64, threshold: f64) -> f64 {
    let mut sum = 0.0;
    let mut qpow = 1.0;
    let mut k = 1.0;
    loop {
        let term = k * qpow;
        if term < threshold {
            return sum;
        }
        sum += term;
        qpow *= q;
        k += 1.0;
    }
}

/// Expected calls until the first optimal run, given calls per run `n0` and
/// per-run success probability `pc`.
pub fn expected_total_calls(n0: f64, pc: f64, threshold: f64) -> Result<ComplexityEstimate> {
    if !(pc > 0.0 && pc <= 1.0) {
        return Err(Error::Divergence(format!(
            "run success probability {pc} not in (0, 1]"
        )));
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::invalid(format!(
            "threshold {threshold} must be positive"
        )));
    }
    Ok(ComplexityEstimate {
        truncated: n0 * pc * truncated_series(1.0 - pc, threshold),
        closed: n0 / pc,
    })
}

pub fn complexity(stats: &SweepStats, n: usize, threshold: f64) -> Result<ComplexityEstimate> {
    expected_total_calls(n0(stats, n)?, pc(stats, n)?, threshold)
}

/// As [`complexity`], with each size-`i` call counted as `(i / n)^w` of a call.
pub fn weighted_complexity(
    stats: &SweepStats,
    n: usize,
    w: f64,
    threshold: f64,
) -> Result<ComplexityEstimate> {
    expected_total_calls(weighted_n0(stats, n, w)?, pc(stats, n)?, threshold)
}

/// `(2^(n-1), 2^((n-1)/2))`: mean random classical tries and unstructured
/// Grover calls.
pub fn baselines(n: usize) -> (f64, f64) {
    let e = n as f64 - 1.0;
    (e.exp2(), (e / 2.0).exp2())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub n: usize,
    pub n0: f64,
    pub pc: f64,
    pub complexity: f64,
    pub complexity_closed: f64,
    pub classical: f64,
    pub grover: f64,
    pub weighted_complexity: f64,
    /// `(1 / p(n_last))^n`, `p` the success probability and `n_last` the largest size in the sweep.
    pub asymptotic_estimate: f64,
}

/// One row for every size `n` whose prefix `5..=n` is fully covered.
pub fn complexity_table(stats: &SweepStats, threshold: f64, w: f64) -> Result<Vec<ComplexityRow>> {
    let sizes = stats.covered_sizes();
    let last = *sizes
        .last()
        .ok_or_else(|| Error::invalid("sweep has no data starting at n = 5"))?;
    let p_last = stats.row(last).expect("covered").success_probability();
    sizes
        .into_iter()
        .map(|n| {
            let c = complexity(stats, n, threshold)?;
            let wc = weighted_complexity(stats, n, w, threshold)?;
            let (classical, grover) = baselines(n);
            Ok(ComplexityRow {
                n,
                n0: n0(stats, n)?,
                pc: pc(stats, n)?,
                complexity: c.truncated,
                complexity_closed: c.closed,
                classical,
                grover,
                weighted_complexity: wc.truncated,
                asymptotic_estimate: (1.0 / p_last).powi(n as i32),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(p_good: f64, p_bad: f64, sizes: std::ops::RangeInclusive<usize>) -> SweepStats {
        SweepStats {
            scheme: Scheme::L2,
            theta: ThetaKind::Epsilon,
            epsilon_fraction: 0.29,
            bits: 10,
            rows: sizes
                .map(|n| SizeStats {
                    n,
                    instances: 1,
                    degenerate_count: 0,
                    p_good_mean: p_good,
                    p_good_std: 0.0,
                    p_bad_mean: p_bad,
                    p_bad_std: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn toy_probabilities() {
        let i = PartitionInstance::from_values(vec![3, 5, 8]).unwrap();
        let cfg = SchemeConfig::new(Scheme::L2, ThetaKind::Epsilon);
        let p = reduction_probabilities(&i, &cfg).unwrap();
        assert_eq!(
            p,
            ReductionProbabilities {
                p_good: 0.25,
                p_bad: 0.0
            }
        );
    }

    #[test]
    fn idealized_any_scheme_accepts_everything() {
        let cfg = SchemeConfig::new(Scheme::Any, ThetaKind::Ideal);
        for seed in 0..30 {
            let i = generate_instance(8, 10, seed).unwrap();
            let p = reduction_probabilities(&i, &cfg).unwrap();
            assert_eq!(p.p_good + p.p_bad, 1.0);
        }
    }

    #[test]
    fn pc_and_n0_examples() {
        let s = uniform(1.0, 0.0, 5..=7);
        assert_eq!(pc(&s, 7).unwrap(), 1.0);
        assert_eq!(n0(&s, 7).unwrap(), 3.0);
        let s = uniform(0.5, 0.5, 5..=6);
        assert_eq!(pc(&s, 6).unwrap(), 0.25);
        assert_eq!(n0(&s, 6).unwrap(), 2.0);
        assert!(pc(&s, 7).is_err());
        assert!(pc(&s, 4).is_err());

        // rejected mass does not count against the run
        let s = uniform(0.3, 0.1, 5..=6);
        assert!((pc(&s, 6).unwrap() - 0.5625).abs() < 1e-15);

        let s = uniform(0.7, 0.1, 5..=9);
        for n in 6..=9 {
            assert!(pc(&s, n).unwrap() < pc(&s, n - 1).unwrap());
        }
    }

    #[test]
    fn series_examples() {
        let one = expected_total_calls(3.0, 1.0, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(one.truncated, 3.0);
        let c = expected_total_calls(2.0, 0.25, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(c.closed, 8.0);
        assert!((c.truncated - 8.0).abs() / 8.0 <= 1e-3);
        let fine = expected_total_calls(2.0, 0.25, 1e-6).unwrap();
        assert!((fine.truncated - c.truncated).abs() / fine.truncated < 1e-3);
        assert!(matches!(
            expected_total_calls(2.0, 0.0, DEFAULT_THRESHOLD),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn truncation_tracks_closed_form() {
        for pc in [1.0, 0.5, 0.25, 0.1, 0.05, 0.01] {
            let c = expected_total_calls(1.0, pc, DEFAULT_THRESHOLD).unwrap();
            let rel = (c.truncated - c.closed).abs() / c.closed;
            assert!(rel <= 1e-3, "pc {pc}: rel {rel}");
            assert!(c.truncated >= 1.0);
        }
    }

    #[test]
    fn baseline_examples() {
        assert_eq!(baselines(11), (1024.0, 32.0));
        assert_eq!(baselines(5), (16.0, 4.0));
        for n in 1..30 {
            let (c, g) = baselines(n);
            assert!((c / g - ((n as f64 - 1.0) / 2.0).exp2()).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn weighting() {
        let s = uniform(0.8, 0.1, 5..=15);
        for n in 5..=15 {
            let plain = complexity(&s, n, DEFAULT_THRESHOLD).unwrap();
            let w0 = weighted_complexity(&s, n, 0.0, DEFAULT_THRESHOLD).unwrap();
            assert_eq!(plain, w0);
            let w2 = weighted_complexity(&s, n, 2.0, DEFAULT_THRESHOLD).unwrap();
            if n == 5 {
                // the only iteration runs at full size
                assert_eq!(w2, plain);
            } else {
                assert!(w2.truncated < plain.truncated);
            }
        }
    }

    #[test]
    fn single_instance_has_zero_spread() {
        let cfg = SweepConfig {
            n_min: 5,
            n_max: 6,
            instances: 1,
            bits: 10,
            base_seed: 1,
            search: SchemeConfig::new(Scheme::L2, ThetaKind::Ideal),
        };
        let s = sweep(&cfg).unwrap();
        assert!(s
            .rows
            .iter()
            .all(|r| r.p_good_std == 0.0 && r.p_bad_std == 0.0));
    }

    #[test]
    fn sweep_validation() {
        let mut cfg = SweepConfig {
            n_min: 4,
            n_max: 6,
            instances: 3,
            bits: 10,
            base_seed: 0,
            search: SchemeConfig::default(),
        };
        assert!(sweep(&cfg).is_err());
        cfg.n_min = 7;
        assert!(sweep(&cfg).is_err());
        cfg.n_min = 5;
        cfg.instances = 0;
        assert!(sweep(&cfg).is_err());
    }

    #[test]
    fn table_rows_cover_prefix() {
        let s = uniform(0.75, 0.05, 5..=9);
        let rows = complexity_table(&s, DEFAULT_THRESHOLD, 2.0).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.n).collect::<Vec<_>>(),
            vec![5, 6, 7, 8, 9]
        );
        for r in &rows {
            assert!(r.complexity >= r.n0);
            assert!(r.weighted_complexity <= r.complexity);
            assert!((r.asymptotic_estimate - (0.8f64 / 0.75).powi(r.n as i32)).abs() < 1e-9);
        }
        let gap = uniform(0.75, 0.05, 6..=9);
        assert!(complexity_table(&gap, DEFAULT_THRESHOLD, 2.0).is_err());
    }
}
