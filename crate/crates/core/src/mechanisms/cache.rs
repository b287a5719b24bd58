//! Memoizing query cache: repeated queries reuse their first noisy answer
//! and cost nothing.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::{Database, MechanismError, NoiseSource, Query};
use crate::budget::Credits;
use crate::dist::LaplaceParams;
use crate::rational::Rational;

/// A noisy release of a single query with a fixed declared cost.
pub trait AddNoise {
    fn cost(&self) -> Credits;

    fn release(
        &self,
        ns: &mut dyn NoiseSource,
        q: &Query,
        db: &Database,
    ) -> Result<i64, MechanismError>;
}

/// `Laplace(eps / sensitivity)` around the exact answer; costs `(eps, 0)`.
/// Zero-sensitivity queries are released exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaplaceRelease {
    pub eps: Rational,
}

impl AddNoise for LaplaceRelease {
    fn cost(&self) -> Credits {
        Credits::pure(self.eps)
    }

    fn release(
        &self,
        ns: &mut dyn NoiseSource,
        q: &Query,
        db: &Database,
    ) -> Result<i64, MechanismError> {
        let exact = q.eval(db);
        let s = q.sensitivity();
        if s.is_zero() {
            return Ok(exact);
        }
        Ok(ns.laplace(LaplaceParams::new(self.eps / s, exact)))
    }
}

/// A cache bound to one release mechanism and one database.
#[derive(Debug, Clone)]
pub struct QueryCache<A> {
    add_noise: A,
    db: Database,
    entries: BTreeMap<String, i64>,
}

impl<A: AddNoise> QueryCache<A> {
    pub fn new(add_noise: A, db: Database) -> Self {
        Self { add_noise, db, entries: BTreeMap::new() }
    }

    /// Cached answer for `q.key()`, or a fresh release charged at the
    /// mechanism's cost and stored.
    pub fn run(&mut self, ns: &mut dyn NoiseSource, q: &Query) -> Result<i64, MechanismError> {
        if let Some(&v) = self.entries.get(q.key()) {
            return Ok(v);
        }
        ns.charge("cache.fresh", self.add_noise.cost())?;
        let v = self.add_noise.release(ns, q, &self.db)?;
        self.entries.insert(q.key().to_string(), v);
        Ok(v)
    }

    pub fn get(&self, key: &str) -> Option<i64> {
        self.entries.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Answers every query in `qs` through one shared cache.
pub fn map_cache<A: AddNoise>(
    ns: &mut dyn NoiseSource,
    add_noise: A,
    qs: &[Query],
    db: &Database,
) -> Result<Vec<i64>, MechanismError> {
    let mut cache = QueryCache::new(add_noise, db.clone());
    qs.iter().map(|q| cache.run(ns, q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::SampledNoise;
    use num_traits::One;

    fn release() -> LaplaceRelease {
        LaplaceRelease { eps: Rational::new(1, 2) }
    }

    fn ns() -> SampledNoise {
        SampledNoise::new(8, Credits::pure(Rational::from_integer(100)))
    }

    #[test]
    fn fresh_cache_is_empty_and_charges_once() {
        let mut ns = ns();
        let mut cache = QueryCache::new(release(), Database::new(vec![1, 2, 3]));
        assert!(cache.is_empty());
        let q = Query::count_rows();
        let first = cache.run(&mut ns, &q).unwrap();
        assert_eq!(ns.ledger().spent(), Credits::pure(Rational::new(1, 2)));
        let second = cache.run(&mut ns, &q).unwrap();
        assert_eq!(first, second);
        assert_eq!(ns.ledger().spent(), Credits::pure(Rational::new(1, 2)));
        assert_eq!(cache.get("count"), Some(first));
    }

    #[test]
    fn caches_over_different_dbs_are_independent() {
        let mut ns = ns();
        let neg = LaplaceRelease { eps: Rational::from_integer(-1) };
        let mut a = QueryCache::new(neg, Database::new(vec![1]));
        let mut b = QueryCache::new(neg, Database::new(vec![1, 2]));
        let q = Query::count_rows();
        assert_eq!(a.run(&mut ns, &q).unwrap(), 1);
        assert_eq!(b.run(&mut ns, &q).unwrap(), 2);
    }

    #[test]
    fn map_cache_charges_unique_keys() {
        let mut ns = ns();
        let q1 = Query::count_rows();
        let q2 = Query::count("pos", |x| x > 0);
        let out = map_cache(&mut ns, release(), &[q1.clone(), q2, q1], &Database::new(vec![0, 4])).unwrap();
        assert_eq!(out[0], out[2]);
        assert_eq!(ns.ledger().spent(), Credits::pure(Rational::one()));
    }

    #[test]
    fn empty_and_duplicate_lists() {
        let mut ns = ns();
        assert!(map_cache(&mut ns, release(), &[], &Database::default()).unwrap().is_empty());
        assert_eq!(ns.ledger().spent(), Credits::zero());
        let q = Query::count_rows();
        map_cache(&mut ns, release(), &[q.clone(), q.clone(), q], &Database::default()).unwrap();
        assert_eq!(ns.ledger().spent(), Credits::pure(Rational::new(1, 2)));
    }

    #[test]
    fn degenerate_noise_caches_exact_value() {
        let mut ns = ns();
        let neg = LaplaceRelease { eps: Rational::from_integer(-1) };
        let out = map_cache(&mut ns, neg, &[Query::count_rows()], &Database::new(vec![5, 5, 5])).unwrap();
        assert_eq!(out, vec![3]);
    }
}
