//! Report Noisy Max: the index of the largest `Laplace(eps/2)`-noised
//! answer among `N` 1-sensitive queries, for a total cost of `eps`
//! regardless of `N`.

use num_traits::One;

use super::{Database, MechanismError, NoiseSource, Query};
use crate::budget::Credits;
use crate::dist::LaplaceParams;
use crate::rational::Rational;

/// Ties go to the lowest index.
pub fn report_noisy_max(
    ns: &mut dyn NoiseSource,
    queries: &[Query],
    eps: Rational,
    db: &Database,
) -> Result<usize, MechanismError> {
    if queries.is_empty() {
        return Err(MechanismError::EmptyQueryFamily);
    }
    for q in queries {
        q.require_sensitivity_at_most(Rational::one())?;
    }
    ns.charge("rnm", Credits::pure(eps))?;
    let half = eps / 2;
    let mut best: Option<(usize, i64)> = None;
    for (i, q) in queries.iter().enumerate() {
        let noisy = ns.laplace(LaplaceParams::new(half, q.eval(db)));
        if best.is_none_or(|(_, top)| noisy > top) {
            best = Some((i, noisy));
        }
    }
    Ok(best.map(|(i, _)| i).expect("nonempty query family"))
}
