//! The Laplace choice rule on truncated Laplacians.
//!
//! With `z ~ Laplace(eps, m)` and `z' ~ Laplace(eps, m')`, `|m - m'| <= 1`,
//! a budget of `2 eps` buys the relation
//! `(T <= z and T+1 <= z') or (z < T and z' < T+1)` where the second case
//! hands the whole budget back. Four things are checked:
//!
//! 1. the shift coupling `z' = z + 1` at the budget,
//! 2. the shift coupling `z' = z + (m' - m)` at no cost,
//! 3. the choice relation itself as a coupling at the budget,
//! 4. choice composition splitting on `T <= z`, with continuations that
//!    report "above" in the first case and spend the recovered budget on a
//!    further Laplace release in the second; the composed programs are then
//!    also compared directly at the concluded cost.

use std::sync::Arc;

use serde::Serialize;

use super::composition::{check_choice_composition, ChoiceInstance, ChoiceOutcome, Kernel, Relation};
use super::{coupling_deficit, CouplingClaim, VerifyError, ETA};
use crate::dist::{laplace_truncated, LaplaceParams, SubDist};
use crate::rational::{to_f64, Rational};

/// Continuation output standing for "the first draw was above threshold".
const ABOVE: i64 = i64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceChoiceReport {
    pub eps: f64,
    pub budget: f64,
    /// Truncation allowance used as `delta` for every coupling.
    pub slack: f64,
    /// Deficit of the `+1` shift at the budget; absent for degenerate noise.
    pub shift_above: Option<f64>,
    /// Deficit of the `m' - m` shift at cost 0; absent for degenerate noise.
    pub shift_below: Option<f64>,
    /// Deficit of the choice relation at the budget.
    pub direct: f64,
    /// Absent for degenerate noise.
    pub composition: Option<ChoiceOutcome>,
    /// Deficit of equal outputs of the composed programs at the budget;
    /// absent for degenerate noise.
    pub end_to_end: Option<f64>,
    /// The `delta` the composition rule concludes with.
    pub end_to_end_slack: f64,
}

impl LaplaceChoiceReport {
    pub fn passed(&self) -> bool {
        let ok = |d: f64| d <= self.slack + ETA;
        self.shift_above.is_none_or(ok)
            && self.shift_below.is_none_or(ok)
            && ok(self.direct)
            && self.composition.as_ref().is_none_or(ChoiceOutcome::holds)
            && self.end_to_end.is_none_or(|d| d <= self.end_to_end_slack + ETA)
    }
}

fn deficit(mu1: &SubDist<i64>, mu2: &SubDist<i64>, rel: impl Fn(i64, i64) -> bool, eps: f64) -> f64 {
    coupling_deficit(&CouplingClaim::new(mu1, mu2, |a: &i64, b: &i64| rel(*a, *b), eps, 0.0))
}

/// Checks the rule at `budget` (the rule itself claims `2 eps`).
pub fn check_laplace_choice_at(
    eps: Rational,
    threshold: i64,
    m: i64,
    m2: i64,
    radius: u64,
    budget: f64,
) -> Result<LaplaceChoiceReport, VerifyError> {
    if m.abs_diff(m2) > 1 {
        return Err(VerifyError::InvalidParameter(format!("|m - m'| must be at most 1, got {m} and {m2}")));
    }
    let p1 = LaplaceParams::new(eps, m);
    let p2 = LaplaceParams::new(eps, m2);
    let (mu1, t1) = laplace_truncated(p1, radius)?;
    let (mu2, t2) = laplace_truncated(p2, radius)?;
    let slack = budget.max(0.0).exp() * (t1.get() + t2.get());
    let choice = move |z: i64, w: i64| (threshold <= z && threshold < w) || (z < threshold && w < threshold + 1);
    let direct = deficit(&mu1, &mu2, choice, budget);
    let e = to_f64(&eps);
    if p1.is_degenerate() {
        return Ok(LaplaceChoiceReport {
            eps: e,
            budget,
            slack,
            shift_above: None,
            shift_below: None,
            direct,
            composition: None,
            end_to_end: None,
            end_to_end_slack: slack,
        });
    }
    let k = m2 - m;
    let shift_above = deficit(&mu1, &mu2, |z, w| w == z + 1, budget);
    let shift_below = deficit(&mu1, &mu2, move |z, w| w == z + k, 0.0);

    let (below_left, tl) = laplace_truncated(LaplaceParams::new(eps, 0), radius)?;
    let (below_right, tr) = laplace_truncated(LaplaceParams::new(eps, 2), radius)?;
    let cont_slack = budget.max(0.0).exp() * (tl.get() + tr.get());
    let f: Kernel = Arc::new(move |z| if threshold <= z { SubDist::point(ABOVE) } else { below_left.clone() });
    let g: Kernel = Arc::new(move |w| if threshold < w { SubDist::point(ABOVE) } else { below_right.clone() });
    let phi1: Relation = Arc::new(|z, w| w == z + 1);
    let phi2: Relation = Arc::new(move |z, w| w == z + k);
    let inst = ChoiceInstance {
        mu1,
        mu2,
        f,
        g,
        xi: Arc::new(move |z| threshold <= z),
        phi1,
        phi2,
        psi: Arc::new(|a, b| a == b),
        eps1: budget,
        delta1: slack,
        eps2: 0.0,
        delta2: slack,
        eps1_cont: 0.0,
        delta1_cont: cont_slack,
        eps2_cont: budget,
        delta2_cont: cont_slack,
    };
    let composition = check_choice_composition(&inst);
    let left = inst.mu1.bind(|z| (inst.f)(*z));
    let right = inst.mu2.bind(|w| (inst.g)(*w));
    let end_to_end = deficit(&left, &right, |a, b| a == b, budget);
    Ok(LaplaceChoiceReport {
        eps: e,
        budget,
        slack,
        shift_above: Some(shift_above),
        shift_below: Some(shift_below),
        direct,
        composition: Some(composition),
        end_to_end: Some(end_to_end),
        end_to_end_slack: inst.conclusion_delta(),
    })
}

/// Checks the rule at its claimed budget of `2 eps`.
pub fn check_laplace_choice(
    eps: Rational,
    threshold: i64,
    m: i64,
    m2: i64,
    radius: u64,
) -> Result<LaplaceChoiceReport, VerifyError> {
    check_laplace_choice_at(eps, threshold, m, m2, radius, 2.0 * to_f64(&eps).max(0.0))
}
