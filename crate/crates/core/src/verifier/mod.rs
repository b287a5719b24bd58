//! Exhaustive privacy certification on small universes.
//!
//! Mechanisms run under an enumerating [`NoiseSource`](crate::mechanisms::NoiseSource)
//! that branches over every outcome of each truncated Laplace draw, which
//! yields exact output subdistributions. On top of that sit the hockey-stick
//! DP check, an approximate-coupling oracle, and executable forms of the
//! composition laws.

mod composition;
mod coupling;
mod divergence;
mod dp;
mod enumerate;
mod laplace_choice;
mod svt_adaptive;

use thiserror::Error;

use crate::dist::DistError;
use crate::mechanisms::MechanismError;

pub use composition::{
    check_bind_lifting, check_choice_composition, check_metric_composition,
    check_post_processing, check_seq_composition, choice_composition_suite, bind_lifting_suite,
    post_processing_suite, random_bind_instance, random_choice_instance, seq_composition_suite,
    BindInstance, ChoiceInstance, ChoiceOutcome, Kernel, MetricOutcome, PostProcessing, Predicate,
    Relation, SuiteSummary,
};
pub use coupling::{
    coupling_deficit, coupling_exists, coupling_exists_any_size, coupling_monotone_check,
    deficit_by_flow, deficit_by_subsets, min_delta, CouplingClaim, SUBSET_LIMIT,
};
pub use divergence::{hockey_stick, hockey_stick_rational};
pub use dp::{check_dp, check_dp_enumerated, enumerate_distinct, validate_pairs, DpReport, PairRecord};
pub use enumerate::{enumerate, enumerate_mechanism, EnumConfig, Enumeration, DEFAULT_MAX_BRANCHES};
pub use laplace_choice::{check_laplace_choice, check_laplace_choice_at, LaplaceChoiceReport};
pub use svt_adaptive::{
    adversary_count, check_svt_adaptive, check_svt_adaptive_budgets, Adversary, SvtAdaptiveReport,
};

/// Numerical tolerance added to every comparison against a budget.
pub const ETA: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("enumeration exceeded the branch cap of {limit}")]
    BranchCap { limit: u64 },
    #[error("support of size {size} exceeds the subset-enumeration bound {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("{count} cases exceed the combinatorial cap {limit}")]
    CombinatorialCap { count: u128, limit: u128 },
    #[error("mechanism is not deterministic given its noise: Laplace call {call} changed parameters on replay")]
    Nondeterministic { call: usize },
    #[error("pair ({0}) is not adjacent under the configured relation")]
    NotAdjacent(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Dist(#[from] DistError),
}
