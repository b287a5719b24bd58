//! Privacy credits, the spend ledger, and the runtime privacy filter.
//!
//! Credits are a pair of exact rationals: a multiplicative budget `eps` and an
//! additive budget `delta`. Both split and recombine by addition, so
//! `join(split(c, e, d)) == c` holds literally. Holding `delta >= 1` makes the
//! credits saturated: every statement is (eps, 1)-private, so no spend can fail.

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::rational::{format_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BudgetError {
    #[error("credits must be nonnegative (eps {eps}, delta {delta})")]
    Negative { eps: String, delta: String },
    #[error("requested share (eps {eps}, delta {delta}) exceeds holdings")]
    InsufficientCredits { eps: String, delta: String },
    #[error("ledger overspend on {label:?}: spent (eps {eps}, delta {delta}) of the initial budget")]
    Overspend { label: String, eps: String, delta: String },
}

/// A nonnegative (eps, delta) privacy budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Credits {
    #[serde(with = "crate::rational::serde_str")]
    eps: Rational,
    #[serde(with = "crate::rational::serde_str")]
    delta: Rational,
}

impl Credits {
    pub fn new(eps: Rational, delta: Rational) -> Result<Self, BudgetError> {
        if eps < Rational::zero() || delta < Rational::zero() {
            return Err(BudgetError::Negative {
                eps: format_rational(&eps),
                delta: format_rational(&delta),
            });
        }
        Ok(Self { eps, delta })
    }

    pub fn zero() -> Self {
        Self { eps: Rational::zero(), delta: Rational::zero() }
    }

    /// Pure-epsilon credits; negative input is clamped to zero.
    pub fn pure(eps: Rational) -> Self {
        Self { eps: crate::rational::clamp_nonneg(eps), delta: Rational::zero() }
    }

    pub fn eps(&self) -> Rational {
        self.eps
    }

    pub fn delta(&self) -> Rational {
        self.delta
    }

    pub fn is_saturated(&self) -> bool {
        self.delta >= Rational::one()
    }

    /// Component-wise `self <= other`.
    pub fn fits_within(&self, other: &Credits) -> bool {
        self.eps <= other.eps && self.delta <= other.delta
    }

    /// Splits off `(eps1, delta1)`, returning it together with the rest.
    pub fn split(&self, eps1: Rational, delta1: Rational) -> Result<(Credits, Credits), BudgetError> {
        let share = Credits::new(eps1, delta1)?;
        if !share.fits_within(self) {
            return Err(BudgetError::InsufficientCredits {
                eps: format_rational(&eps1),
                delta: format_rational(&delta1),
            });
        }
        let rest = Credits { eps: self.eps - eps1, delta: self.delta - delta1 };
        Ok((share, rest))
    }

    pub fn join(&self, other: &Credits) -> Credits {
        Credits { eps: self.eps + other.eps, delta: self.delta + other.delta }
    }

    /// `self - other`, saturating at zero in each component.
    pub fn saturating_sub(&self, other: &Credits) -> Credits {
        let sub = |a: Rational, b: Rational| if a > b { a - b } else { Rational::zero() };
        Credits { eps: sub(self.eps, other.eps), delta: sub(self.delta, other.delta) }
    }

    pub fn scale(&self, k: i64) -> Credits {
        Credits::pure(self.eps * k).join(&Credits { eps: Rational::zero(), delta: self.delta * k })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub label: String,
    #[serde(flatten)]
    pub spent: Credits,
}

/// Append-only record of spends against an initial budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ledger {
    initial: Credits,
    entries: Vec<LedgerEntry>,
    #[serde(skip)]
    spent: Credits,
}

impl Ledger {
    pub fn new(initial: Credits) -> Self {
        Self { initial, entries: Vec::new(), spent: Credits::zero() }
    }

    /// A ledger that accepts any spend; used when only the audit trail matters.
    pub fn unbounded() -> Self {
        Self::new(Credits { eps: Rational::zero(), delta: Rational::one() })
    }

    /// Records `cost` under `label`. Overspending an unsaturated budget is an
    /// error and leaves the ledger unchanged.
    pub fn spend(&mut self, label: &str, cost: Credits) -> Result<(), BudgetError> {
        let total = self.spent.join(&cost);
        if !self.initial.is_saturated() && !total.fits_within(&self.initial) {
            return Err(BudgetError::Overspend {
                label: label.to_string(),
                eps: format_rational(&total.eps),
                delta: format_rational(&total.delta),
            });
        }
        self.spent = total;
        self.entries.push(LedgerEntry { label: label.to_string(), spent: cost });
        Ok(())
    }

    pub fn initial(&self) -> Credits {
        self.initial
    }

    pub fn spent(&self) -> Credits {
        self.spent
    }

    pub fn remaining(&self) -> Credits {
        self.initial.saturating_sub(&self.spent)
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn is_saturated(&self) -> bool {
        self.initial.is_saturated()
    }
}

/// Runtime epsilon-only privacy filter.
///
/// `try_run` executes a computation only when the remaining budget covers its
/// declared cost. The computation receives the filter itself so it can make
/// nested `try_run` calls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacyFilter {
    remaining: Rational,
}

impl PrivacyFilter {
    pub fn new(budget: Rational) -> Result<Self, BudgetError> {
        Credits::new(budget, Rational::zero())?;
        Ok(Self { remaining: budget })
    }

    pub fn remaining(&self) -> Rational {
        self.remaining
    }

    /// Returns `None` without running `f` if `cost` exceeds the remaining
    /// budget; otherwise deducts `cost` first and returns `Some(f(self))`.
    ///
    /// # Panics
    /// If `cost` is negative.
    pub fn try_run<T, F>(&mut self, cost: Rational, f: F) -> Option<T>
    where
        F: FnOnce(&mut Self) -> T,
    {
        assert!(cost >= Rational::zero(), "filter cost must be nonnegative");
        if self.remaining < cost {
            return None;
        }
        self.remaining -= cost;
        Some(f(self))
    }
}

/// (eps, delta) variant of [`PrivacyFilter`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxPrivacyFilter {
    remaining: Credits,
}

impl ApproxPrivacyFilter {
    pub fn new(budget: Credits) -> Self {
        Self { remaining: budget }
    }

    pub fn remaining(&self) -> Credits {
        self.remaining
    }

    pub fn try_run<T, F>(&mut self, cost: Credits, f: F) -> Option<T>
    where
        F: FnOnce(&mut Self) -> T,
    {
        if !cost.fits_within(&self.remaining) {
            return None;
        }
        self.remaining = self.remaining.saturating_sub(&cost);
        Some(f(self))
    }
}
