//! Above Threshold: compare noisy query answers against a noisy threshold.
//!
//! Initialization draws `T^ ~ Laplace(eps/2, T)` and charges `eps/2`. Each
//! query draws `y ~ Laplace(eps/4, q(db))` and answers `T^ <= y`. The second
//! `eps/2` (the authorization to keep querying) is charged only when the
//! answer is `true`, so any number of `false` answers is free. A caller that
//! keeps querying after a `true` pays again and will overspend an `eps`
//! budget; [`HaltingAboveThreshold`] stops at the first `true` instead.

use num_traits::One;

use super::{Database, MechanismError, NoiseSource, Query};
use crate::budget::Credits;
use crate::dist::LaplaceParams;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AboveThreshold {
    eps: Rational,
    noisy_threshold: i64,
}

impl AboveThreshold {
    pub fn init(
        ns: &mut dyn NoiseSource,
        eps: Rational,
        threshold: i64,
    ) -> Result<Self, MechanismError> {
        let half = eps / 2;
        ns.charge("at.init", Credits::pure(half))?;
        let noisy_threshold = ns.laplace(LaplaceParams::new(half, threshold));
        Ok(Self { eps, noisy_threshold })
    }

    /// Evaluates one 1-sensitive query against the noisy threshold.
    pub fn run(
        &self,
        ns: &mut dyn NoiseSource,
        q: &Query,
        db: &Database,
    ) -> Result<bool, MechanismError> {
        q.require_sensitivity_at_most(Rational::one())?;
        let x = q.eval(db);
        let y = ns.laplace(LaplaceParams::new(self.eps / 4, x));
        let above = self.noisy_threshold <= y;
        if above {
            ns.charge("at.auth", Credits::pure(self.eps / 2))?;
        }
        Ok(above)
    }

    pub fn noisy_threshold(&self) -> i64 {
        self.noisy_threshold
    }

    pub fn eps(&self) -> Rational {
        self.eps
    }
}

/// Iterator-style Above Threshold that stops answering after the first
/// `true`.
#[derive(Debug, Clone)]
pub struct HaltingAboveThreshold {
    inner: AboveThreshold,
    halted: bool,
}

impl HaltingAboveThreshold {
    pub fn init(
        ns: &mut dyn NoiseSource,
        eps: Rational,
        threshold: i64,
    ) -> Result<Self, MechanismError> {
        Ok(Self { inner: AboveThreshold::init(ns, eps, threshold)?, halted: false })
    }

    /// `None` once halted; the query is not evaluated in that case.
    pub fn next(
        &mut self,
        ns: &mut dyn NoiseSource,
        q: &Query,
        db: &Database,
    ) -> Result<Option<bool>, MechanismError> {
        if self.halted {
            return Ok(None);
        }
        let b = self.inner.run(ns, q, db)?;
        self.halted = b;
        Ok(Some(b))
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }
}

/// Runs one Above Threshold instance over `candidates` and returns the tag
/// of the first query found above the threshold.
pub fn at_list<T: Clone>(
    ns: &mut dyn NoiseSource,
    eps: Rational,
    threshold: i64,
    db: &Database,
    candidates: &[(T, Query)],
) -> Result<Option<T>, MechanismError> {
    let at = AboveThreshold::init(ns, eps, threshold)?;
    for (tag, q) in candidates {
        if at.run(ns, q, db)? {
            return Ok(Some(tag.clone()));
        }
    }
    Ok(None)
}
