//! Database halving from a measured outcome.
//!
//! A nonzero outcome `m` keeps the `2^(m-1)` assignments `k` with odd
//! `parity(k & m)`. For the partition problem the flagged positions `T` (set
//! bits of `m`, plus the anchor when their count is odd) are constrained to
//! be split between the groups; the smallest flagged value `t` is removed and
//! every other flagged value is replaced by its difference with `t`. When
//! `|T| = 2` that substitution is an exact cost-preserving bijection between
//! the kept half and the reduced database; for larger `T` it is a heuristic.

use crate::error::{Error, Result};
use crate::partition::{parity, Assignment, Cost, PartitionInstance};

/// Whether assignment `k` lies in the half kept after measuring `m`.
pub fn kept_subspace_contains(m: Assignment, k: Assignment) -> Result<bool> {
    if m.0 == 0 {
        return Err(Error::invalid("measurement 0 selects no subspace"));
    }
    Ok(parity(m.0 & k.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementVerdict {
    /// Some global optimum survives in the kept half.
    pub good: bool,
    pub surviving_optima: usize,
}

impl MeasurementVerdict {
    pub fn kept_contains_optimum(&self) -> bool {
        self.surviving_optima > 0
    }
}

/// Classifies `m` against a precomputed list of optimal assignments.
pub fn classify_against(m: Assignment, optima: &[Assignment]) -> Result<MeasurementVerdict> {
    if m.0 == 0 {
        return Err(Error::invalid("measurement 0 cannot be classified"));
    }
    let surviving_optima = optima.iter().filter(|k| parity(m.0 & k.0)).count();
    Ok(MeasurementVerdict {
        good: surviving_optima > 0,
        surviving_optima,
    })
}

pub fn classify(m: Assignment, instance: &PartitionInstance) -> Result<MeasurementVerdict> {
    if m.0 == 0 {
        return Err(Error::invalid("measurement 0 cannot be classified"));
    }
    let (_, optima) = instance.optima()?;
    classify_against(m, &optima)
}

/// Everything needed to map a reduced assignment back onto its parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionRecord {
    measured: Assignment,
    flagged: Vec<usize>,
    removed_position: usize,
    removed_value: u64,
    substitutions: Vec<(usize, u64)>,
    passthrough: Vec<usize>,
    parent_values: Vec<u64>,
    /// Parent position of each reduced position.
    origin: Vec<usize>,
}

impl ReductionRecord {
    pub fn measured(&self) -> Assignment {
        self.measured
    }

    /// Flagged parent positions, ascending; includes the anchor (position 0)
    /// when the outcome had an odd number of set bits.
    pub fn flagged(&self) -> &[usize] {
        &self.flagged
    }

    pub fn removed_position(&self) -> usize {
        self.removed_position
    }

    pub fn removed_value(&self) -> u64 {
        self.removed_value
    }

    /// `(parent position, a_i - t)` for each flagged position other than `t`'s.
    pub fn substitutions(&self) -> &[(usize, u64)] {
        &self.substitutions
    }

    pub fn passthrough(&self) -> &[usize] {
        &self.passthrough
    }

    pub fn parent_anchor(&self) -> u64 {
        self.parent_values[0]
    }

    pub fn parent_len(&self) -> usize {
        self.parent_values.len()
    }

    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    /// True for the exact, pair-constraint case.
    pub fn is_pair(&self) -> bool {
        self.flagged.len() == 2
    }

    /// Maps a reduced-instance assignment to a parent assignment.
    ///
    /// Each surviving value keeps the group its reduced counterpart has. The
    /// removed `t` goes opposite the other flagged value when `|T| = 2`;
    /// otherwise it takes whichever group gives the lower parent cost, `s` on
    /// ties. The result is complemented if the parent anchor ended up out of
    /// `s`.
    pub fn lift(&self, reduced: Assignment) -> Result<Assignment> {
        let reduced_free = self.origin.len() - 1;
        if reduced.0 >= 1u64 << reduced_free {
            return Err(Error::invalid(format!(
                "assignment {} does not fit a reduced instance with {} free bits",
                reduced.0, reduced_free
            )));
        }
        let mut out = vec![false; self.parent_values.len()];
        for (r, &p) in self.origin.iter().enumerate() {
            out[p] = r > 0 && reduced.is_out(r - 1);
        }
        let t = self.removed_position;
        out[t] = if self.is_pair() {
            let other = self.flagged.iter().copied().find(|&p| p != t).unwrap();
            !out[other]
        } else {
            out[t] = false;
            let in_s = signed_cost(&self.parent_values, &out);
            out[t] = true;
            let out_s = signed_cost(&self.parent_values, &out);
            out_s < in_s
        };
        if out[0] {
            out.iter_mut().for_each(|g| *g = !*g);
        }
        let bits = out
            .iter()
            .skip(1)
            .enumerate()
            .filter(|&(_, &g)| g)
            .fold(0u64, |acc, (i, _)| acc | 1 << i);
        Ok(Assignment(bits))
    }
}

fn signed_cost(values: &[u64], out: &[bool]) -> Cost {
    let (mut a, mut b) = (0u64, 0u64);
    for (&v, &o) in values.iter().zip(out) {
        if o {
            b += v;
        } else {
            a += v;
        }
    }
    a.abs_diff(b)
}

/// Halves the database according to `m`, returning the `(n-1)`-value
/// instance and the record needed to lift its solutions.
pub fn reduce(
    instance: &PartitionInstance,
    m: Assignment,
) -> Result<(PartitionInstance, ReductionRecord)> {
    if m.0 == 0 {
        return Err(Error::invalid("measurement 0 cannot reduce the database"));
    }
    if instance.len() < 3 {
        return Err(Error::invalid(format!(
            "cannot reduce an instance of {} values",
            instance.len()
        )));
    }
    if m.0 >= instance.database_size() {
        return Err(Error::invalid(format!(
            "measurement {} out of range for {} free bits",
            m.0,
            instance.free_count()
        )));
    }
    let values = instance.values();
    let mut flagged: Vec<usize> = (0..instance.free_count())
        .filter(|&i| m.is_out(i))
        .map(|i| i + 1)
        .collect();
    if flagged.len() % 2 == 1 {
        flagged.insert(0, 0);
    }
    let t = *flagged
        .iter()
        .min_by_key(|&&p| (values[p], p))
        .expect("flagged set is never empty");
    let tv = values[t];

    let mut substitutions = Vec::new();
    let mut passthrough = Vec::new();
    let mut entries: Vec<(u64, usize)> = Vec::with_capacity(values.len() - 1);
    for (p, &v) in values.iter().enumerate() {
        if p == t {
            continue;
        }
        if flagged.contains(&p) {
            substitutions.push((p, v - tv));
            entries.push((v - tv, p));
        } else {
            passthrough.push(p);
            entries.push((v, p));
        }
    }
    entries.sort_by_key(|&(v, _)| v);
    let reduced = PartitionInstance::new(entries.iter().map(|e| e.0).collect(), instance.bits())?;
    let record = ReductionRecord {
        measured: m,
        flagged,
        removed_position: t,
        removed_value: tv,
        substitutions,
        passthrough,
        parent_values: values.to_vec(),
        origin: entries.iter().map(|e| e.1).collect(),
    };
    Ok((reduced, record))
}
