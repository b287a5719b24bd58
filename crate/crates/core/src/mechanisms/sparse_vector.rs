//! Sparse Vector: up to `N` above-threshold releases from one budget of
//! `N * eps`, built by re-initializing Above Threshold after each `true`.

use super::{AboveThreshold, Database, MechanismError, NoiseSource, Query};
use crate::rational::Rational;

/// What happens to queries after the `N`-th `true`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum AfterExhaustion {
    /// Keep answering through the last (stale) Above Threshold instance.
    #[default]
    AnswerStale,
    /// Refuse with [`MechanismError::Exhausted`].
    Refuse,
}

#[derive(Debug, Clone)]
pub struct SparseVector {
    eps: Rational,
    threshold: i64,
    at: AboveThreshold,
    counter: u64,
    exhausted: bool,
    policy: AfterExhaustion,
}

impl SparseVector {
    pub fn init(
        ns: &mut dyn NoiseSource,
        eps: Rational,
        threshold: i64,
        n: u64,
    ) -> Result<Self, MechanismError> {
        Self::with_policy(ns, eps, threshold, n, AfterExhaustion::default())
    }

    pub fn with_policy(
        ns: &mut dyn NoiseSource,
        eps: Rational,
        threshold: i64,
        n: u64,
        policy: AfterExhaustion,
    ) -> Result<Self, MechanismError> {
        if n == 0 {
            return Err(MechanismError::InvalidParameter("SVT needs N >= 1".into()));
        }
        let at = AboveThreshold::init(ns, eps, threshold)?;
        Ok(Self { eps, threshold, at, counter: n - 1, exhausted: false, policy })
    }

    pub fn run(
        &mut self,
        ns: &mut dyn NoiseSource,
        q: &Query,
        db: &Database,
    ) -> Result<bool, MechanismError> {
        if self.exhausted && self.policy == AfterExhaustion::Refuse {
            return Err(MechanismError::Exhausted);
        }
        let b = self.at.run(ns, q, db)?;
        if b {
            if self.counter > 0 {
                self.counter -= 1;
                self.at = AboveThreshold::init(ns, self.eps, self.threshold)?;
            } else {
                self.exhausted = true;
            }
        }
        Ok(b)
    }

    /// Remaining re-initializations.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn noisy_threshold(&self) -> i64 {
        self.at.noisy_threshold()
    }
}

/// Streams queries through Sparse Vector until `n` of them come out `true`
/// or `max_queries` have been asked.
///
/// `qstream` picks each query from the answers so far, most recent first.
/// Returns the answers in the order the queries were asked.
pub fn svt_stream<F>(
    ns: &mut dyn NoiseSource,
    eps: Rational,
    threshold: i64,
    n: u64,
    mut qstream: F,
    db: &Database,
    max_queries: Option<usize>,
) -> Result<Vec<bool>, MechanismError>
where
    F: FnMut(&[bool]) -> Query,
{
    let mut svt = SparseVector::init(ns, eps, threshold, n)?;
    let mut answers: Vec<bool> = Vec::new();
    let mut released = 0;
    while released < n && max_queries.is_none_or(|m| answers.len() < m) {
        let recent_first: Vec<bool> = answers.iter().rev().copied().collect();
        let q = qstream(&recent_first);
        let b = svt.run(ns, &q, db)?;
        if b {
            released += 1;
        }
        answers.push(b);
    }
    Ok(answers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::{Credits, Ledger};
    use crate::mechanisms::ReplayNoise;

    fn neg() -> Rational {
        Rational::from_integer(-1)
    }

    fn replay(script: Vec<i64>) -> ReplayNoise {
        ReplayNoise::new(script, Ledger::unbounded())
    }

    #[test]
    fn n_one_has_zero_counter() {
        let mut ns = replay(vec![]);
        let svt = SparseVector::init(&mut ns, neg(), 0, 1).unwrap();
        assert_eq!(svt.counter(), 0);
        assert!(SparseVector::init(&mut ns, neg(), 0, 0).is_err());
    }

    #[test]
    fn true_at_zero_counter_does_not_reinit() {
        let eps = Rational::from_integer(4);
        // threshold 0, query draws 1 (true)
        let mut ns = replay(vec![0, 1]);
        let mut svt = SparseVector::init(&mut ns, eps, 0, 1).unwrap();
        assert!(svt.run(&mut ns, &Query::constant(1), &Database::default()).unwrap());
        assert_eq!(svt.counter(), 0);
        assert!(svt.is_exhausted());
        let labels: Vec<_> = ns.ledger().entries().iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, ["at.init", "at.auth"]);
    }

    #[test]
    fn false_leaves_state_unchanged() {
        let eps = Rational::from_integer(4);
        let mut ns = replay(vec![5, 1]);
        let mut svt = SparseVector::init(&mut ns, eps, 0, 2).unwrap();
        assert!(!svt.run(&mut ns, &Query::constant(1), &Database::default()).unwrap());
        assert_eq!(svt.counter(), 1);
        assert_eq!(svt.noisy_threshold(), 5);
        assert_eq!(ns.ledger().entries().len(), 1);
    }

    #[test]
    fn falses_then_true_reinitializes_once() {
        let eps = Rational::from_integer(4);
        // T^=3; draws 0, 1 (false), 3 (true); new T^=9
        let mut ns = replay(vec![3, 0, 1, 3, 9]);
        let mut svt = SparseVector::init(&mut ns, eps, 0, 2).unwrap();
        let db = Database::default();
        let q = Query::constant(0);
        assert!(!svt.run(&mut ns, &q, &db).unwrap());
        assert!(!svt.run(&mut ns, &q, &db).unwrap());
        assert!(svt.run(&mut ns, &q, &db).unwrap());
        assert_eq!(svt.counter(), 0);
        assert_eq!(svt.noisy_threshold(), 9);
        let inits = ns.ledger().entries().iter().filter(|e| e.label == "at.init").count();
        assert_eq!(inits, 2);
        assert_eq!(ns.ledger().spent(), Credits::pure(eps * 3 / 2));
    }

    #[test]
    fn refuse_policy_after_exhaustion() {
        let mut ns = replay(vec![]);
        let mut svt =
            SparseVector::with_policy(&mut ns, neg(), 0, 1, AfterExhaustion::Refuse).unwrap();
        let db = Database::default();
        assert!(svt.run(&mut ns, &Query::constant(1), &db).unwrap());
        assert!(matches!(svt.run(&mut ns, &Query::constant(1), &db), Err(MechanismError::Exhausted)));
    }

    #[test]
    fn stream_examples() {
        let db = Database::default();
        let mut ns = replay(vec![]);
        let out = svt_stream(&mut ns, neg(), 0, 1, |_| Query::constant(3), &db, None).unwrap();
        assert_eq!(out, vec![true]);

        let out = svt_stream(
            &mut ns,
            neg(),
            0,
            1,
            |hist| if hist.is_empty() { Query::constant(-1) } else { Query::constant(1) },
            &db,
            None,
        )
        .unwrap();
        assert_eq!(out, vec![false, true]);
    }

    #[test]
    fn stream_passes_most_recent_first() {
        let db = Database::default();
        let mut seen = Vec::new();
        let mut ns = replay(vec![]);
        let out = svt_stream(
            &mut ns,
            neg(),
            0,
            3,
            |hist| {
                seen.push(hist.to_vec());
                // answers: true, false, true, true
                match hist.len() {
                    1 => Query::constant(-1),
                    _ => Query::constant(1),
                }
            },
            &db,
            Some(10),
        )
        .unwrap();
        assert_eq!(out, vec![true, false, true, true]);
        assert_eq!(seen[2], vec![false, true]);
        assert_eq!(seen[3], vec![true, false, true]);
    }

    #[test]
    fn stream_respects_query_cap() {
        let db = Database::default();
        let mut ns = replay(vec![]);
        let out = svt_stream(&mut ns, neg(), 0, 2, |_| Query::constant(-5), &db, Some(3)).unwrap();
        assert_eq!(out, vec![false, false, false]);
    }
}
