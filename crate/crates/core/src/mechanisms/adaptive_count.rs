//! Adaptive counting behind a privacy filter.
//!
//! Each predicate gets a cheap coarse count; only counts whose coarse value
//! exceeds the threshold are refined with a precise count, paid for through a
//! nested filter call. The filter guarantees the total cost of everything
//! actually executed stays within `budget`.

use num_traits::One;

use super::{Database, MechanismError, NoiseSource, Query};
use crate::budget::{Credits, PrivacyFilter};
use crate::dist::LaplaceParams;
use crate::rational::Rational;

/// `(coarse, precise)` per predicate; `None` when the filter refused the
/// coarse count.
pub type CountEntry = Option<(i64, Option<i64>)>;

pub fn adaptive_count(
    ns: &mut dyn NoiseSource,
    eps_coarse: Rational,
    eps_precise: Rational,
    threshold: i64,
    budget: Rational,
    preds: &[Query],
    db: &Database,
) -> Result<Vec<CountEntry>, MechanismError> {
    let mut filter = PrivacyFilter::new(budget)?;
    let mut out = Vec::with_capacity(preds.len());
    for pred in preds {
        pred.require_sensitivity_at_most(Rational::one())?;
        let exact = pred.eval(db);
        let entry = filter.try_run(eps_coarse, |filter| {
            ns.charge("acount.coarse", Credits::pure(eps_coarse))?;
            let coarse = ns.laplace(LaplaceParams::new(eps_coarse, exact));
            let precise = if threshold < coarse {
                filter
                    .try_run(eps_precise, |_| {
                        ns.charge("acount.precise", Credits::pure(eps_precise))?;
                        Ok::<_, MechanismError>(ns.laplace(LaplaceParams::new(eps_precise, exact)))
                    })
                    .transpose()?
            } else {
                None
            };
            Ok::<_, MechanismError>((coarse, precise))
        });
        out.push(entry.transpose()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Ledger;
    use crate::mechanisms::ReplayNoise;
    use num_traits::Zero;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn preds() -> Vec<Query> {
        vec![Query::count("ge1", |x| x >= 1), Query::count("even", |x| x % 2 == 0)]
    }

    #[test]
    fn zero_budget_refuses_everything() {
        let mut ns = ReplayNoise::new(vec![], Ledger::unbounded());
        let out = adaptive_count(&mut ns, r(1, 2), r(1, 1), 0, Rational::zero(), &preds(), &Database::new(vec![1, 2]))
            .unwrap();
        assert_eq!(out, vec![None, None]);
        assert_eq!(ns.consumed(), 0);
    }

    #[test]
    fn exact_coarse_budget_below_threshold() {
        let mut ns = ReplayNoise::new(vec![0], Ledger::new(Credits::pure(r(1, 2))));
        let out = adaptive_count(&mut ns, r(1, 2), r(1, 1), 5, r(1, 2), &preds()[..1], &Database::new(vec![1]))
            .unwrap();
        assert_eq!(out, vec![Some((0, None))]);
    }

    #[test]
    fn precise_count_runs_nested() {
        // coarse 9 > T=3 triggers precise 7; second predicate coarse refused
        let budget = r(3, 2);
        let mut ns = ReplayNoise::new(vec![9, 7], Ledger::new(Credits::pure(budget)));
        let out = adaptive_count(&mut ns, r(1, 2), r(1, 1), 3, budget, &preds(), &Database::new(vec![1, 2]))
            .unwrap();
        assert_eq!(out, vec![Some((9, Some(7))), None]);
        assert_eq!(ns.ledger().spent(), Credits::pure(budget));
    }

    #[test]
    fn precise_refused_when_budget_short() {
        let budget = r(1, 1);
        let mut ns = ReplayNoise::new(vec![9, 1], Ledger::new(Credits::pure(budget)));
        let out = adaptive_count(&mut ns, r(1, 2), r(1, 1), 3, budget, &preds(), &Database::new(vec![1, 2]))
            .unwrap();
        assert_eq!(out, vec![Some((9, None)), Some((1, None))]);
    }
}
