//! Sparse Vector against every deterministic adaptive adversary.
//!
//! An adversary of depth `d` picks each query from a fixed pool as a
//! function of the answers seen so far, for histories of length below `d`.
//! The stream is cut after `d` queries, so the transcript is a boolean
//! vector of length at most `d`.

use rayon::prelude::*;
use serde::Serialize;

use super::{check_dp_enumerated, enumerate_distinct, DpReport, EnumConfig, VerifyError};
use crate::mechanisms::{svt_stream, Database, NoiseSource, Query};
use crate::rational::Rational;

pub const MAX_POOL: usize = 4;
pub const MAX_DEPTH: usize = 4;
pub const MAX_ADVERSARIES: u128 = 100_000;

/// Pool index for each history, indexed by [`Adversary::slot`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Adversary {
    pub table: Vec<usize>,
}

impl Adversary {
    /// Histories of length `L` occupy slots `2^L - 1 ..= 2^(L+1) - 2`;
    /// within a length, the most recent answer is the lowest bit.
    pub fn slot(history: &[bool]) -> usize {
        let bits = history.iter().enumerate().fold(0usize, |acc, (i, &b)| acc | (usize::from(b) << i));
        (1usize << history.len()) - 1 + bits
    }

    pub fn choose(&self, history: &[bool]) -> usize {
        self.table[Self::slot(history)]
    }

    fn decode(mut index: u128, pool: usize, depth: usize) -> Self {
        let slots = (1usize << depth) - 1;
        let table = (0..slots)
            .map(|_| {
                let d = (index % pool as u128) as usize;
                index /= pool as u128;
                d
            })
            .collect();
        Self { table }
    }
}

/// `pool^(2^depth - 1)`.
pub fn adversary_count(pool: usize, depth: usize) -> u128 {
    (pool as u128).saturating_pow((1u32 << depth) - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvtAdaptiveReport {
    #[serde(with = "crate::rational::serde_str")]
    pub budget: Rational,
    pub reports: Vec<(Adversary, DpReport)>,
}

impl SvtAdaptiveReport {
    /// Every adversary passes the divergence check and stays within budget.
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|(_, r)| r.passed())
    }

    /// Adversaries whose transcripts fail the divergence check.
    pub fn failing(&self) -> impl Iterator<Item = &(Adversary, DpReport)> + '_ {
        self.reports.iter().filter(|(_, r)| !r.verdicts_pass())
    }

    pub fn max_excess(&self) -> f64 {
        self.reports.iter().map(|(_, r)| r.max_excess()).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Enumerates every adversary once and checks its transcripts at each of
/// `budgets`.
#[allow(clippy::too_many_arguments)]
pub fn check_svt_adaptive_budgets(
    eps: Rational,
    threshold: i64,
    n: u64,
    pool: &[Query],
    pairs: &[(Database, Database)],
    cfg: &EnumConfig,
    depth: usize,
    budgets: &[Rational],
) -> Result<Vec<SvtAdaptiveReport>, VerifyError> {
    if pool.is_empty() || pool.len() > MAX_POOL {
        return Err(VerifyError::InvalidParameter(format!("query pool must hold 1 to {MAX_POOL} queries")));
    }
    if depth == 0 || depth > MAX_DEPTH {
        return Err(VerifyError::InvalidParameter(format!("adversary depth must be 1 to {MAX_DEPTH}")));
    }
    let count = adversary_count(pool.len(), depth);
    if count > MAX_ADVERSARIES {
        return Err(VerifyError::CombinatorialCap { count, limit: MAX_ADVERSARIES });
    }
    let dbs: Vec<Database> = pairs.iter().flat_map(|(x, y)| [x.clone(), y.clone()]).collect();
    let per_adversary: Vec<(Adversary, Vec<DpReport>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let adv = Adversary::decode(i, pool.len(), depth);
            let mech = |ns: &mut dyn NoiseSource, db: &Database| {
                svt_stream(ns, eps, threshold, n, |h| pool[adv.choose(h)].clone(), db, Some(depth))
            };
            let enumerated = enumerate_distinct(&mech, dbs.iter().cloned(), cfg)?;
            let reports = budgets
                .iter()
                .map(|&b| check_dp_enumerated(&enumerated, pairs, b, Rational::from_integer(0), cfg.radius))
                .collect();
            Ok((adv, reports))
        })
        .collect::<Result<_, VerifyError>>()?;
    Ok(budgets
        .iter()
        .enumerate()
        .map(|(k, &budget)| SvtAdaptiveReport {
            budget,
            reports: per_adversary.iter().map(|(a, rs)| (a.clone(), rs[k].clone())).collect(),
        })
        .collect())
}

/// Checks transcript DP at `n * eps` for every adversary of the given depth.
pub fn check_svt_adaptive(
    eps: Rational,
    threshold: i64,
    n: u64,
    pool: &[Query],
    pairs: &[(Database, Database)],
    cfg: &EnumConfig,
    depth: usize,
) -> Result<SvtAdaptiveReport, VerifyError> {
    let budget = eps * Rational::from_integer(n as i64);
    let mut out = check_svt_adaptive_budgets(eps, threshold, n, pool, pairs, cfg, depth, &[budget])?;
    Ok(out.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::Adjacency;

    #[test]
    fn slots_are_dense() {
        let mut seen = vec![
            Adversary::slot(&[]),
            Adversary::slot(&[false]),
            Adversary::slot(&[true]),
            Adversary::slot(&[false, false]),
            Adversary::slot(&[true, false]),
            Adversary::slot(&[false, true]),
            Adversary::slot(&[true, true]),
        ];
        seen.sort();
        assert_eq!(seen, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn counts() {
        assert_eq!(adversary_count(3, 2), 27);
        assert_eq!(adversary_count(2, 2), 8);
        assert_eq!(adversary_count(1, 4), 1);
        assert_eq!(adversary_count(4, 4), 4u128.pow(15));
    }

    #[test]
    fn caps_and_bounds() {
        let pool = vec![Query::count_rows(); 4];
        let cfg = EnumConfig::new(2);
        let eps = Rational::from_integer(1);
        assert!(matches!(
            check_svt_adaptive(eps, 0, 1, &pool, &[], &cfg, 4),
            Err(VerifyError::CombinatorialCap { .. })
        ));
        assert!(check_svt_adaptive(eps, 0, 1, &pool[..1], &[], &cfg, 5).is_err());
        assert!(check_svt_adaptive(eps, 0, 1, &[], &[], &cfg, 1).is_err());
    }

    #[test]
    fn constant_adversary_single_query() {
        let eps = Rational::from_integer(2);
        let pairs = Adjacency::RowHamming.pairs(&Database::universe(1, 0, 1, false));
        let pool = [Query::count_rows()];
        let r = check_svt_adaptive(eps, 1, 1, &pool, &pairs, &EnumConfig::new(14), 1).unwrap();
        assert_eq!(r.reports.len(), 1);
        assert!(r.passed(), "{:?}", r.max_excess());
    }
}
