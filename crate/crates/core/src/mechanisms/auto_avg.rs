//! Private average with a privately chosen clipping bound.
//!
//! The bound is the first candidate `b` for which relaxing the clip from `b`
//! to `b + 1` no longer increases the clipped sum, found with one Above
//! Threshold instance at threshold 0. The clipped sum is then released with
//! `Laplace(eps / bound)` and the row count with `Laplace(eps)`, for a total
//! of `3 * eps`.

use num_traits::Zero;
use serde::Serialize;

use super::{at_list, clip_sum, Database, MechanismError, NoiseSource, Query};
use crate::budget::Credits;
use crate::dist::LaplaceParams;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AverageOutcome {
    #[serde(with = "crate::rational::serde_str")]
    pub value: Rational,
    /// The noisy count was not positive and `value` is the sentinel 0.
    pub zero_count: bool,
}

fn validate_bounds(bnds: &[i64]) -> Result<(), MechanismError> {
    if bnds.is_empty() {
        return Err(MechanismError::InvalidParameter("bounds list is empty".into()));
    }
    if bnds[0] <= 0 || bnds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MechanismError::InvalidParameter(
            "bounds must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Picks the clipping bound via Above Threshold. Falls back to the largest
/// candidate when none is found above the threshold.
pub fn clip_bound(
    ns: &mut dyn NoiseSource,
    bnds: &[i64],
    eps: Rational,
    db: &Database,
) -> Result<i64, MechanismError> {
    validate_bounds(bnds)?;
    let candidates: Vec<(i64, Query)> = bnds.iter().map(|&b| (b, Query::clip_drop(b))).collect();
    let found = at_list(ns, eps, 0, db, &candidates)?;
    Ok(found.unwrap_or(bnds[bnds.len() - 1]))
}

pub fn auto_avg(
    ns: &mut dyn NoiseSource,
    bnds: &[i64],
    eps: Rational,
    db: &Database,
) -> Result<AverageOutcome, MechanismError> {
    let bound = clip_bound(ns, bnds, eps, db)?;
    let sum = clip_sum(bound, db);
    ns.charge("auto_avg.sum", Credits::pure(eps))?;
    let noisy_sum = ns.laplace(LaplaceParams::new(eps / bound, sum));
    ns.charge("auto_avg.count", Credits::pure(eps))?;
    let noisy_count = ns.laplace(LaplaceParams::new(eps, db.len() as i64));
    if noisy_count <= 0 {
        return Ok(AverageOutcome { value: Rational::zero(), zero_count: true });
    }
    Ok(AverageOutcome { value: Rational::new(noisy_sum, noisy_count), zero_count: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Ledger;
    use crate::mechanisms::{ReplayNoise, SampledNoise};

    fn neg() -> Rational {
        Rational::from_integer(-1)
    }

    #[test]
    fn deterministic_trace() {
        let mut ns = SampledNoise::new(0, Credits::pure(Rational::zero()));
        let out = auto_avg(&mut ns, &[1, 2, 4], neg(), &Database::new(vec![1, 1, 1])).unwrap();
        assert_eq!(out, AverageOutcome { value: Rational::from_integer(1), zero_count: false });
    }

    #[test]
    fn bound_is_first_candidate_covering_the_max() {
        let mut ns = SampledNoise::new(0, Credits::zero());
        let db = Database::new(vec![1, 3, 2]);
        assert_eq!(clip_bound(&mut ns, &[1, 2, 4, 8], neg(), &db).unwrap(), 4);
        let db = Database::new(vec![100]);
        assert_eq!(clip_bound(&mut ns, &[1, 2], neg(), &db).unwrap(), 2);
    }

    #[test]
    fn zero_count_sentinel() {
        let eps = Rational::from_integer(1);
        // T^=0, clip_drop draw 0 (true), noisy sum 5, noisy count 0
        let mut ns = ReplayNoise::new(vec![0, 0, 5, 0], Ledger::new(Credits::pure(eps * 3)));
        let out = auto_avg(&mut ns, &[1], eps, &Database::new(vec![1])).unwrap();
        assert_eq!(out, AverageOutcome { value: Rational::zero(), zero_count: true });
    }

    #[test]
    fn charges_three_eps() {
        let eps = Rational::new(1, 2);
        let mut ns = ReplayNoise::new(vec![0, 0, 6, 3], Ledger::new(Credits::pure(eps * 3)));
        let out = auto_avg(&mut ns, &[2, 4], eps, &Database::new(vec![1, 2, 2])).unwrap();
        assert_eq!(out.value, Rational::from_integer(2));
        assert_eq!(ns.ledger().spent(), Credits::pure(eps * 3));
    }

    #[test]
    fn invalid_bounds() {
        let mut ns = SampledNoise::new(0, Credits::zero());
        let db = Database::default();
        assert!(auto_avg(&mut ns, &[], neg(), &db).is_err());
        assert!(auto_avg(&mut ns, &[2, 2], neg(), &db).is_err());
        assert!(auto_avg(&mut ns, &[0, 1], neg(), &db).is_err());
    }
}
