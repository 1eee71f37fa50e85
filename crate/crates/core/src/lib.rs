//! Measurement-driven structured database search, applied to set partition.
//!
//! One oracle call prepares `D|0>|0>`, where `D = W · oracle · W` flips the
//! phase of every low-cost assignment. Measuring the first register gives an
//! outcome `m` that selects half of the database (the assignments with odd
//! `parity(k & m)`); for set partition that half is realized classically by
//! replacing two values with their difference. Repeating down to four values
//! and lifting the base-case optimum back produces a full solution.
//!
//! Modules:
//!
//! * [`partition`]: instances, the cost function, brute-force optima.
//! * [`spectrum`]: sign vectors and the exact measurement distribution.
//! * [`reduction`]: kept-half classification, differencing, lifting.
//! * [`driver`]: the iterate-measure-reduce loop and repeated solving.
//! * [`stats`]: per-size reduction probabilities and expected-cost model.
//! * [`statevector`]: two-register simulation that checks the closed form.
//! * [`report`]: CSV schemas.

pub mod driver;
pub mod error;
pub mod partition;
pub mod reduction;
pub mod report;
pub mod seed;
pub mod spectrum;
pub mod statevector;
pub mod stats;

pub use driver::{
    run_instance, run_iteration, solve, RunAborted, RunTrace, Scheme, SchemeConfig, ThetaKind,
    TraceStep,
};
pub use error::{Error, Result};
pub use partition::{generate_instance, Assignment, Cost, PartitionInstance, DEFAULT_BITS};
pub use reduction::{
    classify, kept_subspace_contains, reduce, MeasurementVerdict, ReductionRecord,
};
pub use spectrum::{MeasurementDistribution, ThetaMode, ThetaVector};
pub use stats::{ComplexityRow, SizeStats, SweepConfig, SweepStats};
