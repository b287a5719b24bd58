//! Mechanisms addressable by name.

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use dpv_core::budget::Credits;
use dpv_core::dist::LaplaceParams;
use dpv_core::mechanisms::{
    adaptive_count, at_list, auto_avg, map_cache, report_noisy_max, svt_stream, Database,
    LaplaceRelease, MechanismError, NoiseSource, Query,
};
use dpv_core::rational::Rational;
use dpv_core::verifier::{check_dp, DpReport, EnumConfig, VerifyError};
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::params::{parse_queries, Params, DEFAULT_QUERIES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mechanism {
    /// Above Threshold over a query list; reports the first index above.
    At,
    /// Sparse Vector over a fixed query list.
    Svt,
    /// Sparse Vector stream cycling through the query list.
    SvtStream,
    AutoAvg,
    /// Report Noisy Max.
    Rnm,
    AdaptiveCount,
    MapCache,
    /// Laplace release of the first query.
    Laplace,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::At => "at",
            Mechanism::Svt => "svt",
            Mechanism::SvtStream => "svt-stream",
            Mechanism::AutoAvg => "auto-avg",
            Mechanism::Rnm => "rnm",
            Mechanism::AdaptiveCount => "adaptive-count",
            Mechanism::MapCache => "map-cache",
            Mechanism::Laplace => "laplace",
        }
    }

    fn default_query_count(self) -> usize {
        match self {
            Mechanism::Laplace | Mechanism::AutoAvg => 1,
            _ => 2,
        }
    }
}

/// A named mechanism with every parameter resolved.
#[derive(Debug, Clone)]
pub struct Setup {
    pub mechanism: Mechanism,
    pub eps: Rational,
    pub threshold: i64,
    pub releases: u64,
    pub queries: Vec<Query>,
    pub bounds: Vec<i64>,
    pub budget: Rational,
    pub eps_coarse: Rational,
    pub eps_precise: Rational,
    pub max_queries: usize,
}

impl Setup {
    /// `eps` and `n` come from flags and take precedence over `params`.
    pub fn new(mechanism: Mechanism, params: &Params, eps: Option<Rational>, n: Option<usize>) -> Result<Self> {
        let eps = eps.or(params.eps.map(|r| r.0)).context("eps is required (flag --eps or params \"eps\")")?;
        let queries = match (&params.queries, n) {
            (Some(_), Some(_)) => bail!("give either --n or params \"queries\", not both"),
            (Some(specs), None) => parse_queries(specs)?,
            (None, n) => {
                let k = n.unwrap_or(mechanism.default_query_count());
                if k == 0 || k > DEFAULT_QUERIES.len() {
                    bail!("--n must be between 1 and {}", DEFAULT_QUERIES.len());
                }
                parse_queries(&DEFAULT_QUERIES[..k].iter().map(|s| s.to_string()).collect::<Vec<_>>())?
            }
        };
        if queries.is_empty() {
            bail!("at least one query is required");
        }
        let releases = params.releases.unwrap_or(2);
        if releases == 0 {
            bail!("\"N\" must be at least 1");
        }
        Ok(Self {
            mechanism,
            eps,
            threshold: params.threshold.unwrap_or(0),
            releases,
            max_queries: params.max_queries.unwrap_or(queries.len()),
            queries,
            bounds: params.bounds.clone().unwrap_or_else(|| vec![1, 2, 4]),
            budget: params.budget.map(|r| r.0).unwrap_or_else(Rational::one),
            eps_coarse: params.eps_coarse.map(|r| r.0).unwrap_or(Rational::new(1, 4)),
            eps_precise: params.eps_precise.map(|r| r.0).unwrap_or(Rational::new(1, 2)),
        })
    }

    /// The budget the mechanism claims.
    pub fn declared_budget(&self) -> Rational {
        let eps = self.eps.max(Rational::zero());
        match self.mechanism {
            Mechanism::At | Mechanism::Rnm | Mechanism::Laplace => eps,
            Mechanism::Svt | Mechanism::SvtStream => eps * Rational::from_integer(self.releases as i64),
            Mechanism::AutoAvg => eps * 3,
            Mechanism::AdaptiveCount => self.budget,
            Mechanism::MapCache => {
                let mut keys: Vec<&str> = self.queries.iter().map(Query::key).collect();
                keys.sort_unstable();
                keys.dedup();
                eps * Rational::from_integer(keys.len() as i64)
            }
        }
    }

    /// The fixed list is the stream that walks the list once; the stream
    /// variant cycles through it for up to `max_queries` queries.
    fn svt(&self, ns: &mut dyn NoiseSource, db: &Database) -> Result<Vec<bool>, MechanismError> {
        let cap = if self.mechanism == Mechanism::Svt { self.queries.len() } else { self.max_queries };
        let qs = &self.queries;
        svt_stream(ns, self.eps, self.threshold, self.releases, |h| qs[h.len() % qs.len()].clone(), db, Some(cap))
    }

    /// Runs once against `ns`; the output is rendered as JSON.
    pub fn run(&self, ns: &mut dyn NoiseSource, db: &Database) -> Result<Value, MechanismError> {
        let s = self;
        Ok(match s.mechanism {
            Mechanism::At => json!(at_list(ns, s.eps, s.threshold, db, &s.indexed())?),
            Mechanism::Svt | Mechanism::SvtStream => json!(s.svt(ns, db)?),
            Mechanism::AutoAvg => json!(auto_avg(ns, &s.bounds, s.eps, db)?),
            Mechanism::Rnm => json!(report_noisy_max(ns, &s.queries, s.eps, db)?),
            Mechanism::AdaptiveCount => {
                json!(adaptive_count(ns, s.eps_coarse, s.eps_precise, s.threshold, s.budget, &s.queries, db)?)
            }
            Mechanism::MapCache => json!(map_cache(ns, LaplaceRelease { eps: s.eps }, &s.queries, db)?),
            Mechanism::Laplace => json!(laplace_release(ns, s.eps, &s.queries[0], db)?),
        })
    }

    fn indexed(&self) -> Vec<(usize, Query)> {
        self.queries.iter().cloned().enumerate().collect()
    }

    /// Exhaustive DP check of the mechanism at `at_eps`.
    pub fn check(&self, pairs: &[(Database, Database)], at_eps: Rational, cfg: &EnumConfig) -> Result<DpReport, VerifyError> {
        let s = self;
        let zero = Rational::zero();
        match s.mechanism {
            Mechanism::At => {
                let qs = s.indexed();
                check_dp(&|ns: &mut dyn NoiseSource, db: &Database| at_list(ns, s.eps, s.threshold, db, &qs), pairs, at_eps, zero, cfg)
            }
            Mechanism::Svt | Mechanism::SvtStream => {
                check_dp(&|ns: &mut dyn NoiseSource, db: &Database| s.svt(ns, db), pairs, at_eps, zero, cfg)
            }
            Mechanism::AutoAvg => {
                check_dp(&|ns: &mut dyn NoiseSource, db: &Database| auto_avg(ns, &s.bounds, s.eps, db), pairs, at_eps, zero, cfg)
            }
            Mechanism::Rnm => check_dp(
                &|ns: &mut dyn NoiseSource, db: &Database| report_noisy_max(ns, &s.queries, s.eps, db),
                pairs,
                at_eps,
                zero,
                cfg,
            ),
            Mechanism::AdaptiveCount => check_dp(
                &|ns: &mut dyn NoiseSource, db: &Database| {
                    adaptive_count(ns, s.eps_coarse, s.eps_precise, s.threshold, s.budget, &s.queries, db)
                },
                pairs,
                at_eps,
                zero,
                cfg,
            ),
            Mechanism::MapCache => check_dp(
                &|ns: &mut dyn NoiseSource, db: &Database| map_cache(ns, LaplaceRelease { eps: s.eps }, &s.queries, db),
                pairs,
                at_eps,
                zero,
                cfg,
            ),
            Mechanism::Laplace => check_dp(
                &|ns: &mut dyn NoiseSource, db: &Database| laplace_release(ns, s.eps, &s.queries[0], db),
                pairs,
                at_eps,
                zero,
                cfg,
            ),
        }
    }
}

/// `Laplace(eps / s)` around `q(db)`, charged at `eps`.
fn laplace_release(ns: &mut dyn NoiseSource, eps: Rational, q: &Query, db: &Database) -> Result<i64, MechanismError> {
    let s = q.sensitivity();
    if s <= Rational::zero() {
        return Ok(q.eval(db));
    }
    ns.charge("laplace", Credits::pure(eps))?;
    Ok(ns.laplace(LaplaceParams::new(eps / s, q.eval(db))))
}
