//! The hockey-stick DP check over adjacent database pairs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::{enumerate_mechanism, hockey_stick, EnumConfig, Enumeration, VerifyError, ETA};
use crate::budget::{Credits, LedgerEntry};
use crate::mechanisms::{Adjacency, Database, MechanismError, NoiseSource};
use crate::rational::{to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub x: Database,
    pub y: Database,
    pub divergence_xy: f64,
    pub divergence_yx: f64,
    /// The larger of the two directions.
    pub divergence: f64,
    /// Truncation allowance added to `delta` for this pair.
    pub tail: f64,
    pub pass: bool,
}

impl PairRecord {
    /// How far the divergence lies above the allowance (negative when it passes).
    pub fn excess(&self, delta: f64) -> f64 {
        self.divergence - delta - self.tail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpReport {
    #[serde(with = "crate::rational::serde_str")]
    pub eps: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub delta: Rational,
    pub radius: u64,
    pub pairs: Vec<PairRecord>,
    /// Largest spend seen in any execution on any database.
    pub max_spent: Credits,
    pub worst_ledger: Vec<LedgerEntry>,
    /// Some execution charged more than the `(eps, delta)` under test.
    pub ledger_exceeded: bool,
}

impl DpReport {
    /// Every pair passes the divergence check.
    pub fn verdicts_pass(&self) -> bool {
        self.pairs.iter().all(|p| p.pass)
    }

    /// Divergence check passes and the ledger stayed within the budget.
    pub fn passed(&self) -> bool {
        self.verdicts_pass() && !self.ledger_exceeded
    }

    pub fn max_divergence(&self) -> f64 {
        self.pairs.iter().map(|p| p.divergence).fold(0.0, f64::max)
    }

    /// Largest `divergence - delta - tail` over all pairs.
    pub fn max_excess(&self) -> f64 {
        let delta = to_f64(&self.delta);
        self.pairs.iter().map(|p| p.excess(delta)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PairRecord> + '_ {
        self.pairs.iter().filter(|p| !p.pass)
    }
}

/// Rejects any pair that is not adjacent under `adj`.
pub fn validate_pairs(adj: Adjacency, pairs: &[(Database, Database)]) -> Result<(), VerifyError> {
    match pairs.iter().find(|(x, y)| !adj.adjacent(x, y)) {
        Some((x, y)) => Err(VerifyError::NotAdjacent(format!("{x}, {y}"))),
        None => Ok(()),
    }
}

/// Enumerates `mech` once on each database, in parallel.
pub fn enumerate_distinct<T, M>(
    mech: &M,
    dbs: impl IntoIterator<Item = Database>,
    cfg: &EnumConfig,
) -> Result<BTreeMap<Database, Enumeration<T>>, VerifyError>
where
    T: Ord + Clone + Send,
    M: Fn(&mut dyn NoiseSource, &Database) -> Result<T, MechanismError> + Sync + ?Sized,
{
    let dbs: Vec<Database> = dbs.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    dbs.into_par_iter()
        .map(|db| enumerate_mechanism(mech, &db, cfg).map(|e| (db, e)))
        .collect()
}

/// Checks every pair in both directions against already-enumerated
/// distributions.
pub fn check_dp_enumerated<T: Ord + Clone>(
    enumerated: &BTreeMap<Database, Enumeration<T>>,
    pairs: &[(Database, Database)],
    eps: Rational,
    delta: Rational,
    radius: u64,
) -> DpReport {
    let e = to_f64(&eps);
    let d = to_f64(&delta);
    let records = pairs
        .iter()
        .map(|(x, y)| {
            let ex = &enumerated[x];
            let ey = &enumerated[y];
            let divergence_xy = hockey_stick(&ex.dist, &ey.dist, e);
            let divergence_yx = hockey_stick(&ey.dist, &ex.dist, e);
            let divergence = divergence_xy.max(divergence_yx);
            // Truncation moves each side by at most its tail; scaling by
            // e^eps covers the side that is multiplied.
            let tail = e.max(0.0).exp() * (ex.tail_slack + ey.tail_slack);
            PairRecord {
                x: x.clone(),
                y: y.clone(),
                divergence_xy,
                divergence_yx,
                divergence,
                tail,
                pass: divergence <= d + tail + ETA,
            }
        })
        .collect();
    let mut max_spent = Credits::zero();
    let mut worst_ledger = Vec::new();
    for en in enumerated.values() {
        if (en.max_spent.eps(), en.max_spent.delta()) > (max_spent.eps(), max_spent.delta()) {
            max_spent = en.max_spent;
            worst_ledger = en.worst_ledger.clone();
        }
    }
    let ledger_exceeded = max_spent.eps() > eps || max_spent.delta() > delta;
    DpReport { eps, delta, radius, pairs: records, max_spent, worst_ledger, ledger_exceeded }
}

/// Enumerates both sides of every pair and checks `(eps, delta)`-DP with the
/// truncation tails absorbed into `delta`.
pub fn check_dp<T, M>(
    mech: &M,
    pairs: &[(Database, Database)],
    eps: Rational,
    delta: Rational,
    cfg: &EnumConfig,
) -> Result<DpReport, VerifyError>
where
    T: Ord + Clone + Send,
    M: Fn(&mut dyn NoiseSource, &Database) -> Result<T, MechanismError> + Sync + ?Sized,
{
    let dbs = pairs.iter().flat_map(|(x, y)| [x.clone(), y.clone()]);
    let enumerated = enumerate_distinct(mech, dbs, cfg)?;
    Ok(check_dp_enumerated(&enumerated, pairs, eps, delta, cfg.radius))
}
