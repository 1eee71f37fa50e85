//! The measure-and-halve loop.
//!
//! Each iteration builds the sign vector for the current instance, samples
//! the exact outcome distribution until the measurement scheme accepts an
//! outcome (every sample is one oracle call), and reduces the instance by
//! one value. At four values the remaining 8 assignments are brute-forced
//! and the answer is lifted back through every reduction.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{optima_of, Assignment, Cost, PartitionInstance};
use crate::reduction::{classify_against, reduce, MeasurementVerdict, ReductionRecord};
use crate::spectrum::{MeasurementDistribution, ThetaVector};

/// Size at which the search stops measuring and enumerates.
pub const BASE_CASE_SIZE: usize = 4;

/// Which measured outcomes are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Exactly two set bits: the two values are split between the groups.
    L2,
    /// Any nonzero outcome.
    Any,
}

impl Scheme {
    #[inline]
    pub fn accepts(self, m: u64) -> bool {
        match self {
            Scheme::L2 => m.count_ones() == 2,
            Scheme::Any => m != 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::L2 => "l2",
            Scheme::Any => "any",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaKind {
    /// Flip exactly the best half.
    Ideal,
    /// Flip costs at or below `epsilon_fraction * sum(values)`.
    Epsilon,
}

impl ThetaKind {
    pub fn name(self) -> &'static str {
        match self {
            ThetaKind::Ideal => "ideal",
            ThetaKind::Epsilon => "epsilon",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub theta: ThetaKind,
    pub epsilon_fraction: f64,
    pub max_calls_per_iteration: u64,
    /// Exponent `w` in the `(size / n)^w` weighting of each call.
    pub weight_exponent: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            scheme: Scheme::L2,
            theta: ThetaKind::Epsilon,
            epsilon_fraction: 0.29,
            max_calls_per_iteration: 10_000,
            weight_exponent: 2.0,
        }
    }
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, theta: ThetaKind) -> Self {
        SchemeConfig {
            scheme,
            theta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_fraction > 0.0 && self.epsilon_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon fraction {} not in (0, 1)",
                self.epsilon_fraction
            )));
        }
        if self.max_calls_per_iteration == 0 {
            return Err(Error::invalid("per-iteration call cap must be at least 1"));
        }
        if !self.weight_exponent.is_finite() || self.weight_exponent < 0.0 {
            return Err(Error::invalid(format!(
                "weight exponent {} must be finite and non-negative",
                self.weight_exponent
            )));
        }
        Ok(())
    }

    /// Sign vector for a dense cost table of `instance`.
    pub fn theta(&self, instance: &PartitionInstance, costs: &[Cost]) -> Result<ThetaVector> {
        match self.theta {
            ThetaKind::Ideal => ThetaVector::idealized(costs),
            ThetaKind::Epsilon => {
                ThetaVector::epsilon(costs, self.epsilon_fraction * instance.total() as f64)
            }
        }
    }
}

/// Result of one accepted measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationOutcome {
    pub measured: Assignment,
    pub calls: u64,
}

/// Samples `dist` until `scheme` accepts; every sample counts as a call.
pub fn sample_until_accepted<R: Rng + ?Sized>(
    dist: &MeasurementDistribution,
    cfg: &SchemeConfig,
    rng: &mut R,
) -> Result<IterationOutcome> {
    if dist.weight_where(|x| cfg.scheme.accepts(x as u64)) == 0 {
        return Err(Error::IterationBudget {
            cap: cfg.max_calls_per_iteration,
        });
    }
    for calls in 1..=cfg.max_calls_per_iteration {
        let m = dist.sample(rng);
        if cfg.scheme.accepts(m.0) {
            return Ok(IterationOutcome { measured: m, calls });
        }
    }
    Err(Error::IterationBudget {
        cap: cfg.max_calls_per_iteration,
    })
}

/// One measurement step on `instance`: build the oracle, sample until the
/// scheme accepts.
pub fn run_iteration<R: Rng + ?Sized>(
    instance: &PartitionInstance,
    cfg: &SchemeConfig,
    rng: &mut R,
) -> Result<IterationOutcome> {
    let costs = instance.all_costs()?;
    let theta = cfg.theta(instance, &costs)?;
    sample_until_accepted(&theta.distribution(), cfg, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub size_before: usize,
    pub calls: u64,
    pub measured: u64,
    pub flagged_positions: Vec<usize>,
    /// Whether some optimum of this step's instance survived the reduction.
    pub good: Option<bool>,
    pub reduced_values: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub original: PartitionInstance,
    pub steps: Vec<TraceStep>,
    pub final_assignment: Assignment,
    pub solution_cost: Cost,
    pub total_calls: u64,
    pub weighted_calls: f64,
}

impl RunTrace {
    /// True if every reduction kept an optimum (the run ends optimal).
    pub fn all_steps_good(&self) -> bool {
        self.steps.iter().all(|s| s.good == Some(true))
    }
}

/// A run stopped by an iteration error, with the steps completed so far.
#[derive(Debug, thiserror::Error)]
#[error("run aborted after {} reductions", steps.len())]
pub struct RunAborted {
    #[source]
    pub error: Error,
    pub steps: Vec<TraceStep>,
}

/// Full search from `instance` down to the base case, then lift back.
pub fn run_instance<R: Rng + ?Sized>(
    instance: &PartitionInstance,
    cfg: &SchemeConfig,
    rng: &mut R,
) -> std::result::Result<RunTrace, RunAborted> {
    let abort = |error, steps| RunAborted { error, steps };
    if let Err(e) = cfg.validate() {
        return Err(abort(e, Vec::new()));
    }
    if instance.len() <= BASE_CASE_SIZE {
        return Err(abort(
            Error::invalid(format!(
                "the search needs more than {BASE_CASE_SIZE} values, got {}",
                instance.len()
            )),
            Vec::new(),
        ));
    }
    let n = instance.len() as f64;
    let mut steps = Vec::with_capacity(instance.len() - BASE_CASE_SIZE);
    let mut records: Vec<ReductionRecord> = Vec::with_capacity(steps.capacity());
    let mut current = instance.clone();
    let mut total_calls = 0u64;
    let mut weighted_calls = 0.0;

    while current.len() > BASE_CASE_SIZE {
        let step = (|| -> Result<(TraceStep, PartitionInstance, ReductionRecord)> {
            let costs = current.all_costs()?;
            let theta = cfg.theta(&current, &costs)?;
            let outcome = sample_until_accepted(&theta.distribution(), cfg, rng)?;
            let (_, optima) = optima_of(&costs);
            let MeasurementVerdict { good, .. } = classify_against(outcome.measured, &optima)?;
            let (next, record) = reduce(&current, outcome.measured)?;
            let step = TraceStep {
                size_before: current.len(),
                calls: outcome.calls,
                measured: outcome.measured.0,
                flagged_positions: record.flagged().to_vec(),
                good: Some(good),
                reduced_values: next.values().to_vec(),
            };
            Ok((step, next, record))
        })();
        match step {
            Ok((step, next, record)) => {
                total_calls += step.calls;
                weighted_calls +=
                    step.calls as f64 * (step.size_before as f64 / n).powf(cfg.weight_exponent);
                steps.push(step);
                records.push(record);
                current = next;
            }
            Err(e) => return Err(abort(e, steps)),
        }
    }

    let base_costs = current.all_costs().expect("base case is tiny");
    let (_, base_optima) = optima_of(&base_costs);
    let mut assignment = base_optima[0];
    for record in records.iter().rev() {
        assignment = record
            .lift(assignment)
            .expect("records chain by construction");
    }
    let solution_cost = instance
        .cost(assignment)
        .expect("lifted assignment fits the original instance");
    Ok(RunTrace {
        original: instance.clone(),
        steps,
        final_assignment: assignment,
        solution_cost,
        total_calls,
        weighted_calls,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub best_assignment: Assignment,
    pub best_cost: Cost,
    pub runs_used: usize,
    pub total_calls: u64,
    /// Runs stopped by a degenerate oracle or exhausted call budget.
    pub aborted_runs: usize,
}

/// Repeats independent runs, keeping the cheapest lifted solution. Stops as
/// soon as a run reaches the parity lower bound. Instances at or below the
/// base-case size are enumerated directly with no oracle calls.
pub fn solve<R: Rng + ?Sized>(
    instance: &PartitionInstance,
    cfg: &SchemeConfig,
    rng: &mut R,
    max_runs: usize,
) -> Result<SolveOutcome> {
    if max_runs == 0 {
        return Err(Error::invalid("max_runs must be at least 1"));
    }
    cfg.validate()?;
    if instance.len() <= BASE_CASE_SIZE {
        let (best_cost, optima) = instance.optima()?;
        return Ok(SolveOutcome {
            best_assignment: optima[0],
            best_cost,
            runs_used: 1,
            total_calls: 0,
            aborted_runs: 0,
        });
    }
    let bound = instance.parity_bound();
    let mut best: Option<(Assignment, Cost)> = None;
    let mut total_calls = 0;
    let mut aborted_runs = 0;
    let mut last_error = None;
    let mut runs_used = 0;
    for _ in 0..max_runs {
        runs_used += 1;
        match run_instance(instance, cfg, rng) {
            Ok(trace) => {
                total_calls += trace.total_calls;
                if best.is_none_or(|(_, c)| trace.solution_cost < c) {
                    best = Some((trace.final_assignment, trace.solution_cost));
                }
                if trace.solution_cost <= bound {
                    break;
                }
            }
            Err(aborted) => {
                total_calls += aborted.steps.iter().map(|s| s.calls).sum::<u64>();
                aborted_runs += 1;
                last_error = Some(aborted.error);
            }
        }
    }
    match best {
        Some((best_assignment, best_cost)) => Ok(SolveOutcome {
            best_assignment,
            best_cost,
            runs_used,
            total_calls,
            aborted_runs,
        }),
        None => Err(last_error.expect("at least one run was attempted")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::generate_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst(v: &[u64]) -> PartitionInstance {
        PartitionInstance::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn scheme_acceptance() {
        assert!(Scheme::L2.accepts(0b101));
        assert!(!Scheme::L2.accepts(0b111));
        assert!(!Scheme::L2.accepts(0));
        assert!(Scheme::Any.accepts(0b111));
        assert!(!Scheme::Any.accepts(0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SchemeConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.epsilon_fraction = 1.0;
        assert!(cfg.validate().is_err());
        cfg.epsilon_fraction = 0.29;
        cfg.max_calls_per_iteration = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn point_mass_accepted_immediately() {
        let theta = ThetaVector::odd_parity_set(4, Assignment(0b0110)).unwrap();
        let cfg = SchemeConfig::new(Scheme::L2, ThetaKind::Ideal);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = sample_until_accepted(&theta.distribution(), &cfg, &mut rng).unwrap();
        assert_eq!(
            out,
            IterationOutcome {
                measured: Assignment(6),
                calls: 1
            }
        );
    }

    #[test]
    fn any_scheme_with_no_mass_at_zero_takes_one_call() {
        // idealized oracle: G = 2^(m-1) so the amplitude at 0 vanishes
        let cfg = SchemeConfig::new(Scheme::Any, ThetaKind::Ideal);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20 {
            let i = generate_instance(7, 10, seed).unwrap();
            assert_eq!(run_iteration(&i, &cfg, &mut rng).unwrap().calls, 1);
        }
    }

    #[test]
    fn geometric_call_count_on_toy_instance() {
        // {3,5,8}, epsilon = 4.64: uniform over 4 outcomes, only m = 3 has two bits
        let i = inst(&[3, 5, 8]);
        let cfg = SchemeConfig::new(Scheme::L2, ThetaKind::Epsilon);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let runs = 10_000;
        let calls: Vec<f64> = (0..runs)
            .map(|_| {
                let out = run_iteration(&i, &cfg, &mut rng).unwrap();
                assert_eq!(out.measured, Assignment(3));
                out.calls as f64
            })
            .collect();
        let mean = calls.iter().sum::<f64>() / runs as f64;
        // geometric with p = 1/4: variance (1 - p) / p^2 = 12
        let sigma = (12.0f64 / runs as f64).sqrt();
        assert!((mean - 4.0).abs() <= 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn expected_calls_match_accepted_mass() {
        let cfg = SchemeConfig::new(Scheme::L2, ThetaKind::Epsilon);
        for seed in [5u64, 6] {
            let i = generate_instance(7, 10, seed).unwrap();
            let costs = i.all_costs().unwrap();
            let dist = cfg.theta(&i, &costs).unwrap().distribution();
            let p = dist.weight_where(|x| Scheme::L2.accepts(x as u64)) as f64
                / dist.total_weight() as f64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let runs = 10_000;
            let mean = (0..runs)
                .map(|_| sample_until_accepted(&dist, &cfg, &mut rng).unwrap().calls as f64)
                .sum::<f64>()
                / runs as f64;
            let sigma = ((1.0 - p) / (p * p) / runs as f64).sqrt();
            assert!(
                (mean - 1.0 / p).abs() <= 3.0 * sigma,
                "mean {mean} vs {}",
                1.0 / p
            );
        }
    }

    #[test]
    fn unreachable_scheme_is_a_budget_error() {
        // one free bit: no outcome has two set bits
        let i = inst(&[1, 2]);
        let cfg = SchemeConfig::new(Scheme::L2, ThetaKind::Ideal);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            run_iteration(&i, &cfg, &mut rng),
            Err(Error::IterationBudget { .. })
        ));
    }

    #[test]
    fn run_step_counts_and_cost_consistency() {
        let cfg = SchemeConfig::new(Scheme::L2, ThetaKind::Ideal);
        for n in 5..=10 {
            let i = generate_instance(n, 10, n as u64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let t = run_instance(&i, &cfg, &mut rng).unwrap();
            assert_eq!(t.steps.len(), n - 4);
            assert!(t.total_calls >= t.steps.len() as u64);
            assert_eq!(t.solution_cost, i.cost(t.final_assignment).unwrap());
            for (k, s) in t.steps.iter().enumerate() {
                assert_eq!(s.size_before, n - k);
                assert_eq!(s.reduced_values.len(), n - k - 1);
            }
            if t.all_steps_good() {
                assert_eq!(t.solution_cost, i.optima().unwrap().0);
            }
        }
    }

    #[test]
    fn run_is_deterministic() {
        let i = generate_instance(8, 10, 17).unwrap();
        let cfg = SchemeConfig::default();
        let a = run_instance(&i, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let b = run_instance(&i, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn weighted_calls_below_raw() {
        let cfg = SchemeConfig::new(Scheme::L2, ThetaKind::Ideal);
        let i = generate_instance(9, 10, 3).unwrap();
        let t = run_instance(&i, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert!(t.weighted_calls < t.total_calls as f64);

        let five = generate_instance(5, 10, 3).unwrap();
        let t = run_instance(&five, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.weighted_calls, t.total_calls as f64);
    }

    #[test]
    fn run_rejects_small_instances() {
        let i = inst(&[1, 2, 3, 4]);
        let err = run_instance(
            &i,
            &SchemeConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap_err();
        assert!(matches!(err.error, Error::InvalidArgument(_)));
    }

    #[test]
    fn degenerate_oracle_aborts_with_partial_trace() {
        // one dominant value: every cost exceeds 0.29 * total
        let i = inst(&[1, 1, 1, 1, 100]);
        let err = run_instance(
            &i,
            &SchemeConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap_err();
        assert!(err.error.is_degenerate_oracle());
        assert!(err.steps.is_empty());
    }

    #[test]
    fn solve_finds_perfect_partitions() {
        let cfg = SchemeConfig::default();
        let mut checked = 0;
        for seed in 0..400u64 {
            // small values make perfect partitions common
            let i = generate_instance(8, 5, seed).unwrap();
            if i.optima().unwrap().0 != 0 {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = solve(&i, &cfg, &mut rng, 50).unwrap();
            assert_eq!(out.best_cost, 0, "seed {seed}");
            assert!(out.runs_used <= 50);
            checked += 1;
            if checked == 20 {
                break;
            }
        }
        assert_eq!(checked, 20);
    }

    #[test]
    fn solve_single_run_and_parity_bound() {
        let cfg = SchemeConfig::default();
        let i = generate_instance(9, 10, 12).unwrap();
        let single = solve(&i, &cfg, &mut ChaCha8Rng::seed_from_u64(1), 1).unwrap();
        let trace = run_instance(&i, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(single.runs_used, 1);
        assert_eq!(single.best_cost, trace.solution_cost);
        assert_eq!(single.total_calls, trace.total_calls);
        for seed in 0..20 {
            let i = generate_instance(7, 10, seed).unwrap();
            let out = solve(&i, &cfg, &mut ChaCha8Rng::seed_from_u64(seed), 10).unwrap();
            assert!(out.best_cost >= i.total() % 2);
            assert_eq!(out.best_cost, i.cost(out.best_assignment).unwrap());
        }
        assert!(solve(&i, &cfg, &mut ChaCha8Rng::seed_from_u64(1), 0).is_err());
    }

    #[test]
    fn solve_small_instance_enumerates() {
        let out = solve(
            &inst(&[3, 5, 8]),
            &SchemeConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
            5,
        )
        .unwrap();
        assert_eq!((out.best_cost, out.total_calls), (0, 0));
    }
}
