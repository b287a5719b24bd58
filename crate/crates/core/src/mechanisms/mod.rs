//! Differential privacy mechanisms written against the [`NoiseSource`] port.
//!
//! Every mechanism obtains noise and reports its privacy cost only through
//! the port, so the same code runs with real samples ([`SampledNoise`]) and
//! under the verifier's enumerating interpreter.

mod above_threshold;
mod adaptive_count;
mod auto_avg;
mod cache;
mod database;
mod noise;
mod noisy_max;
mod sparse_vector;

use thiserror::Error;

use crate::budget::BudgetError;
use crate::dist::DistError;

pub use above_threshold::{at_list, AboveThreshold, HaltingAboveThreshold};
pub use adaptive_count::{adaptive_count, CountEntry};
pub use auto_avg::{auto_avg, clip_bound, AverageOutcome};
pub use cache::{map_cache, AddNoise, LaplaceRelease, QueryCache};
pub use database::{clip_sum, Adjacency, Database, Query};
pub use noise::{NoiseSource, ReplayNoise, SampledNoise};
pub use noisy_max::report_noisy_max;
pub use sparse_vector::{svt_stream, AfterExhaustion, SparseVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("query {key:?} declares sensitivity {declared}, mechanism accepts at most {limit}")]
    Sensitivity { key: String, declared: String, limit: String },
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("query family is empty")]
    EmptyQueryFamily,
    #[error("sparse vector exhausted its releases")]
    Exhausted,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
