#![allow(dead_code)]

use std::collections::BTreeSet;

use dpv_core::budget::{Credits, Ledger, PrivacyFilter};
use dpv_core::dist::{LaplaceParams, SubDist};
use dpv_core::mechanisms::{adaptive_count, map_cache, Database, LaplaceRelease, Query, SampledNoise};
use dpv_core::rational::Rational;
use dpv_core::sampler::{sample_laplace, RngState};
use num_traits::Zero;
use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// A small coupling instance over integer carriers.
#[derive(Debug, Clone)]
pub struct SmallCoupling {
    pub mu1: SubDist<i64>,
    pub mu2: SubDist<i64>,
    /// `related[i][j]` for the i-th support point of `mu1` and the j-th of `mu2`.
    pub related: Vec<Vec<bool>>,
    pub eps: f64,
}

impl SmallCoupling {
    pub fn phi(&self) -> impl Fn(&i64, &i64) -> bool + '_ {
        let left: Vec<i64> = self.mu1.support().copied().collect();
        let right: Vec<i64> = self.mu2.support().copied().collect();
        move |a, b| {
            let i = left.iter().position(|x| x == a).unwrap();
            let j = right.iter().position(|x| x == b).unwrap();
            self.related[i][j]
        }
    }
}

fn random_subdist(rng: &mut RngState, max_support: u64) -> SubDist<i64> {
    let size = 1 + rng.uniform_below(max_support);
    let raw: Vec<f64> = (0..size).map(|_| 0.05 + rng.unit_f64()).collect();
    let total: f64 = raw.iter().sum();
    // keep some instances strictly sub-probability
    let mass = if rng.bernoulli_ratio(1, 3) { 0.5 + 0.5 * rng.unit_f64() } else { 1.0 };
    SubDist::from_weights(raw.into_iter().enumerate().map(|(i, w)| (i as i64, mass * w / total))).unwrap()
}

pub fn random_small_coupling(rng: &mut RngState, max_support: u64) -> SmallCoupling {
    let mu1 = random_subdist(rng, max_support);
    let mu2 = random_subdist(rng, max_support);
    let density = 1 + rng.uniform_below(3);
    let related = (0..mu1.len())
        .map(|_| (0..mu2.len()).map(|_| rng.bernoulli_ratio(density, 4)).collect())
        .collect();
    let eps = [0.0, 0.25, 0.7, 1.5][rng.uniform_below(4) as usize];
    SmallCoupling { mu1, mu2, related, eps }
}

/// Largest `E_mu1[f] - e^eps E_mu2[g]` over real `f, g` in `[0, 1]` with
/// `f(a) <= g(b)` whenever `a` and `b` are related, solved as a linear program.
pub fn lp_deficit(c: &SmallCoupling) -> f64 {
    let scale = c.eps.exp();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let f: Vec<_> = c.mu1.iter().map(|(_, w)| lp.add_var(w, (0.0, 1.0))).collect();
    let g: Vec<_> = c.mu2.iter().map(|(_, w)| lp.add_var(-scale * w, (0.0, 1.0))).collect();
    for (i, row) in c.related.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if r {
                lp.add_constraint([(f[i], 1.0), (g[j], -1.0)], ComparisonOp::Le, 0.0);
            }
        }
    }
    lp.solve().expect("bounded feasible program").objective()
}

pub fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn random_db(rng: &mut RngState) -> Database {
    let len = rng.uniform_below(6) as usize;
    Database::new((0..len).map(|_| rng.uniform_below(5) as i64).collect())
}

pub fn query_pool() -> Vec<Query> {
    vec![
        Query::count_rows(),
        Query::count("ge1", |x| x >= 1),
        Query::count("ge3", |x| x >= 3),
        Query::count("even", |x| x % 2 == 0),
        Query::count("eq0", |x| x == 0),
    ]
}

/// A client against a filter of budget 1 that keeps asking for random work,
/// adapting its next request to noisy answers and sometimes nesting requests.
/// Returns the cost of everything that actually ran and the filter's
/// remaining budget.
pub fn filter_client(seed: u64) -> (Rational, Rational) {
    let mut rng = RngState::new(seed);
    let mut filter = PrivacyFilter::new(Rational::from_integer(1)).unwrap();
    let mut executed = Rational::zero();
    let mut last = 0i64;
    for _ in 0..(1 + rng.uniform_below(30)) {
        let den = 2 + rng.uniform_below(9) as i64;
        let num = if last > 0 { 1 } else { 1 + rng.uniform_below(3) as i64 };
        let cost = r(num, den);
        let nested = rng.bernoulli_ratio(1, 3);
        let inner_cost = r(1, 2 + rng.uniform_below(20) as i64);
        let out = filter.try_run(cost, |f| {
            executed += cost;
            let v = sample_laplace(&mut rng, LaplaceParams::new(cost, 0));
            if nested && f.try_run(inner_cost, |_| ()).is_some() {
                executed += inner_cost;
            }
            v
        });
        last = out.unwrap_or(-1);
    }
    (executed, filter.remaining())
}

/// Runs adaptive counting under a ledger holding exactly its budget; an
/// overspend would surface as an error.
pub fn adaptive_count_within_budget(seed: u64, rng: &mut RngState) -> Result<(), String> {
    let budget = r(1 + rng.uniform_below(8) as i64, 4);
    let coarse = r(1, 1 + rng.uniform_below(4) as i64);
    let precise = r(1 + rng.uniform_below(3) as i64, 2);
    let db = random_db(rng);
    let threshold = rng.uniform_below(4) as i64 - 1;
    let mut ns = SampledNoise::new(seed, Credits::pure(budget));
    adaptive_count(&mut ns, coarse, precise, threshold, budget, &query_pool(), &db)
        .map_err(|e| format!("seed {seed}: {e}"))?;
    let spent = ns.ledger().spent().eps();
    if spent > budget {
        return Err(format!("seed {seed}: spent {spent} of {budget}"));
    }
    Ok(())
}

/// Runs a random query list through the cache; the ledger must hold exactly
/// one charge per distinct key.
pub fn cache_list(seed: u64, rng: &mut RngState) -> Result<(), String> {
    let pool = query_pool();
    let eps = r(1, 1 + rng.uniform_below(5) as i64);
    let n = 1 + rng.uniform_below(20) as usize;
    let qs: Vec<Query> = (0..n).map(|_| pool[rng.uniform_below(pool.len() as u64) as usize].clone()).collect();
    let keys: BTreeSet<&str> = qs.iter().map(Query::key).collect();
    let k = keys.len() as i64;
    let mut ns = SampledNoise::with_ledger(seed, Ledger::unbounded());
    let answers = map_cache(&mut ns, LaplaceRelease { eps }, &qs, &random_db(rng)).map_err(|e| e.to_string())?;
    let spent = ns.ledger().spent().eps();
    if spent != eps * k || ns.trace().len() != k as usize {
        return Err(format!("list {seed}: {k} keys at {eps} but ledger holds {spent}"));
    }
    for (q, a) in qs.iter().zip(&answers) {
        let first = qs.iter().position(|p| p.key() == q.key()).unwrap();
        if *a != answers[first] {
            return Err(format!("list {seed}: repeated key {} changed its answer", q.key()));
        }
    }
    Ok(())
}
