//! Executable composition laws: sequential, post-processing, metric, bind
//! lifting and choice composition, with seeded random property suites.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    check_dp, coupling_deficit, enumerate_distinct, hockey_stick,
    CouplingClaim, DpReport, EnumConfig, VerifyError, ETA,
};
use crate::budget::Credits;
use crate::dist::{LaplaceParams, SubDist};
use crate::mechanisms::{Adjacency, Database, MechanismError, NoiseSource, Query};
use crate::rational::{to_f64, Rational};
use crate::sampler::RngState;

pub type Relation = Arc<dyn Fn(i64, i64) -> bool + Send + Sync>;
pub type Kernel = Arc<dyn Fn(i64) -> SubDist<i64> + Send + Sync>;
pub type Predicate = Arc<dyn Fn(i64) -> bool + Send + Sync>;

/// Outcome counts of a random property suite.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SuiteSummary {
    pub checked: usize,
    pub discarded: usize,
    pub violations: usize,
    /// One line per discarded or violating instance.
    pub log: Vec<String>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn deficit(mu1: &SubDist<i64>, mu2: &SubDist<i64>, rel: &Relation, eps: f64) -> f64 {
    coupling_deficit(&CouplingClaim::new(mu1, mu2, |a: &i64, b: &i64| rel(*a, *b), eps, 0.0))
}

// ---------------------------------------------------------------- choice

/// Two couplings of `mu1, mu2` joined by a case split on `xi`, each followed
/// by its own coupling of the continuations `f, g`.
#[derive(Clone)]
pub struct ChoiceInstance {
    pub mu1: SubDist<i64>,
    pub mu2: SubDist<i64>,
    pub f: Kernel,
    pub g: Kernel,
    pub xi: Predicate,
    pub phi1: Relation,
    pub phi2: Relation,
    pub psi: Relation,
    pub eps1: f64,
    pub delta1: f64,
    pub eps2: f64,
    pub delta2: f64,
    pub eps1_cont: f64,
    pub delta1_cont: f64,
    pub eps2_cont: f64,
    pub delta2_cont: f64,
}

impl ChoiceInstance {
    /// `max(eps1 + eps1', eps2 + eps2')`.
    pub fn conclusion_eps(&self) -> f64 {
        (self.eps1 + self.eps1_cont).max(self.eps2 + self.eps2_cont)
    }

    /// `delta1 + delta2 + max(delta1', delta2')`.
    pub fn conclusion_delta(&self) -> f64 {
        self.delta1 + self.delta2 + self.delta1_cont.max(self.delta2_cont)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ChoiceOutcome {
    /// Some `a in xi`, `a2 not in xi` and `b` have `(a,b) in phi1` and `(a2,b) in phi2`.
    NotDisjoint { a: i64, a2: i64, b: i64 },
    /// A premise coupling does not hold at its stated parameters.
    PremiseFailed { premise: String, deficit: f64 },
    Holds { deficit: f64, eps: f64, delta: f64 },
    Violated { deficit: f64, eps: f64, delta: f64 },
}

impl ChoiceOutcome {
    pub fn is_violation(&self) -> bool {
        matches!(self, ChoiceOutcome::Violated { .. })
    }

    pub fn holds(&self) -> bool {
        matches!(self, ChoiceOutcome::Holds { .. })
    }
}

/// Checks the premises of choice composition on `inst` and, when they hold,
/// whether the bound coupling exists at the combined cost.
///
/// The quantifiers range over the supports of `mu1` and `mu2`.
pub fn check_choice_composition(inst: &ChoiceInstance) -> ChoiceOutcome {
    let sa: Vec<i64> = inst.mu1.support().copied().collect();
    let sb: Vec<i64> = inst.mu2.support().copied().collect();
    for &a in sa.iter().filter(|&&a| (inst.xi)(a)) {
        for &a2 in sa.iter().filter(|&&a| !(inst.xi)(a)) {
            for &b in &sb {
                if (inst.phi1)(a, b) && (inst.phi2)(a2, b) {
                    return ChoiceOutcome::NotDisjoint { a, a2, b };
                }
            }
        }
    }
    let premise = |name: &str, d: f64, allowed: f64| {
        (d > allowed + ETA).then(|| ChoiceOutcome::PremiseFailed { premise: name.to_string(), deficit: d })
    };
    if let Some(p) = premise("first coupling", deficit(&inst.mu1, &inst.mu2, &inst.phi1, inst.eps1), inst.delta1) {
        return p;
    }
    if let Some(p) = premise("second coupling", deficit(&inst.mu1, &inst.mu2, &inst.phi2, inst.eps2), inst.delta2) {
        return p;
    }
    for &a in &sa {
        let inside = (inst.xi)(a);
        let (rel, eps, delta, name) = if inside {
            (&inst.phi1, inst.eps1_cont, inst.delta1_cont, "continuation inside xi")
        } else {
            (&inst.phi2, inst.eps2_cont, inst.delta2_cont, "continuation outside xi")
        };
        let fa = (inst.f)(a);
        for &b in sb.iter().filter(|&&b| rel(a, b)) {
            if let Some(p) = premise(name, deficit(&fa, &(inst.g)(b), &inst.psi, eps), delta) {
                return p;
            }
        }
    }
    let left = inst.mu1.bind(|a| (inst.f)(*a));
    let right = inst.mu2.bind(|b| (inst.g)(*b));
    let eps = inst.conclusion_eps();
    let delta = inst.conclusion_delta();
    let d = deficit(&left, &right, &inst.psi, eps);
    if d <= delta + ETA {
        ChoiceOutcome::Holds { deficit: d, eps, delta }
    } else {
        ChoiceOutcome::Violated { deficit: d, eps, delta }
    }
}

fn random_eps(rng: &mut RngState) -> f64 {
    [0.0, 0.25, 0.5, 1.0, 1.5][rng.uniform_below(5) as usize]
}

fn random_dist(rng: &mut RngState, carrier: u64, max_support: u64) -> SubDist<i64> {
    let size = 1 + rng.uniform_below(max_support.min(carrier));
    let mut pts: BTreeSet<i64> = BTreeSet::new();
    while (pts.len() as u64) < size {
        pts.insert(rng.uniform_below(carrier) as i64);
    }
    let raw: Vec<(i64, f64)> = pts.into_iter().map(|v| (v, 0.05 + rng.unit_f64())).collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    SubDist::from_weights(raw.into_iter().map(|(v, w)| (v, w / total))).expect("normalized weights")
}

/// `(1 - t) * base + t * other`.
fn mix(base: &SubDist<i64>, other: &SubDist<i64>, t: f64) -> SubDist<i64> {
    let pairs = base.iter().map(|(v, w)| (*v, (1.0 - t) * w)).chain(other.iter().map(|(v, w)| (*v, t * w)));
    SubDist::from_weights(pairs.collect::<Vec<_>>()).expect("convex combination")
}

fn random_relation(rng: &mut RngState, rows: u64, cols: u64, p_extra: f64, allowed: impl Fn(i64, i64) -> bool) -> Vec<Vec<bool>> {
    (0..rows as i64)
        .map(|a| (0..cols as i64).map(|b| allowed(a, b) && (a == b || rng.unit_f64() < p_extra)).collect())
        .collect()
}

fn table_relation(t: Vec<Vec<bool>>) -> Relation {
    Arc::new(move |a, b| {
        usize::try_from(a)
            .ok()
            .and_then(|a| t.get(a))
            .and_then(|row| usize::try_from(b).ok().and_then(|b| row.get(b)))
            .copied()
            .unwrap_or(false)
    })
}

fn table_kernel(t: Vec<SubDist<i64>>) -> Kernel {
    Arc::new(move |a| usize::try_from(a).ok().and_then(|a| t.get(a)).cloned().unwrap_or_default())
}

const CARRIER: u64 = 6;

/// A random choice-composition instance. The first-step couplings are
/// built so that the disjointness hypothesis can hold, and every premise
/// `delta` is the least one for its `eps`.
pub fn random_choice_instance(rng: &mut RngState) -> ChoiceInstance {
    let mu1 = random_dist(rng, CARRIER, 6);
    let mu2 = mix(&mu1, &random_dist(rng, CARRIER, 6), 0.2 + 0.6 * rng.unit_f64());
    let xi_set: Vec<bool> = (0..CARRIER).map(|_| rng.uniform_below(2) == 1).collect();
    let in_b1: Vec<bool> = (0..CARRIER).map(|_| rng.uniform_below(2) == 1).collect();
    let xi_of = {
        let xi_set = xi_set.clone();
        move |a: i64| xi_set[a as usize]
    };
    let phi1 = {
        let xi_of = xi_of.clone();
        let in_b1 = in_b1.clone();
        random_relation(rng, CARRIER, CARRIER, 0.3, move |a, b| !xi_of(a) || in_b1[b as usize])
    };
    let phi2 = {
        let xi_of = xi_of.clone();
        random_relation(rng, CARRIER, CARRIER, 0.3, move |a, b| xi_of(a) || !in_b1[b as usize])
    };
    let psi = random_relation(rng, CARRIER, CARRIER, 0.2, |_, _| true);
    let f_table: Vec<SubDist<i64>> = (0..CARRIER).map(|_| random_dist(rng, CARRIER, 6)).collect();
    let g_table: Vec<SubDist<i64>> = (0..CARRIER)
        .map(|b| mix(&f_table[b as usize], &random_dist(rng, CARRIER, 6), 0.6 * rng.unit_f64()))
        .collect();
    let (eps1, eps2, eps1_cont, eps2_cont) = (random_eps(rng), random_eps(rng), random_eps(rng), random_eps(rng));

    let phi1 = table_relation(phi1);
    let phi2 = table_relation(phi2);
    let psi = table_relation(psi);
    let f = table_kernel(f_table);
    let g = table_kernel(g_table);
    let xi: Predicate = Arc::new(xi_of);

    let delta1 = deficit(&mu1, &mu2, &phi1, eps1);
    let delta2 = deficit(&mu1, &mu2, &phi2, eps2);
    let cont_delta = |inside: bool, rel: &Relation, eps: f64| {
        let mut worst: f64 = 0.0;
        for a in mu1.support().filter(|&&a| xi(a) == inside) {
            for b in mu2.support().filter(|&&b| rel(*a, b)) {
                worst = worst.max(deficit(&f(*a), &g(*b), &psi, eps));
            }
        }
        worst
    };
    let delta1_cont = cont_delta(true, &phi1, eps1_cont);
    let delta2_cont = cont_delta(false, &phi2, eps2_cont);
    ChoiceInstance {
        mu1,
        mu2,
        f,
        g,
        xi,
        phi1,
        phi2,
        psi,
        eps1,
        delta1,
        eps2,
        delta2,
        eps1_cont,
        delta1_cont,
        eps2_cont,
        delta2_cont,
    }
}

/// Generates and checks instances until `count` of them have verified
/// premises and a conclusion `delta` below 1. Rejected instances are logged.
pub fn choice_composition_suite(seed: u64, count: usize) -> SuiteSummary {
    let mut rng = RngState::new(seed);
    let mut summary = SuiteSummary::default();
    let max_attempts = count.saturating_mul(50).max(100);
    let mut attempts = 0;
    while summary.checked < count && attempts < max_attempts {
        let mut batch = Vec::new();
        while batch.len() < count - summary.checked && attempts < max_attempts {
            attempts += 1;
            let inst = random_choice_instance(&mut rng);
            if inst.conclusion_delta() >= 1.0 {
                summary.discarded += 1;
                summary.log.push(format!("attempt {attempts}: discarded, conclusion delta {:.4} >= 1", inst.conclusion_delta()));
                continue;
            }
            batch.push((attempts, inst));
        }
        let outcomes: Vec<(usize, ChoiceOutcome)> =
            batch.par_iter().map(|(n, inst)| (*n, check_choice_composition(inst))).collect();
        for (n, outcome) in outcomes {
            match outcome {
                ChoiceOutcome::Holds { .. } => summary.checked += 1,
                ChoiceOutcome::Violated { deficit, eps, delta } => {
                    summary.checked += 1;
                    summary.violations += 1;
                    summary.log.push(format!("attempt {n}: violation, deficit {deficit:.3e} at ({eps}, {delta:.3e})"));
                }
                other => {
                    summary.discarded += 1;
                    summary.log.push(format!("attempt {n}: discarded, {other:?}"));
                }
            }
        }
    }
    summary
}

// ---------------------------------------------------------------- bind

/// Premise couplings `mu1 ~ mu2` along `phi` and `f a ~ g b` along `psi` for
/// related `(a, b)`; the bound distributions should couple along `psi` at the
/// summed cost.
#[derive(Clone)]
pub struct BindInstance {
    pub mu1: SubDist<i64>,
    pub mu2: SubDist<i64>,
    pub f: Kernel,
    pub g: Kernel,
    pub phi: Relation,
    pub psi: Relation,
    pub eps: f64,
    pub delta: f64,
    pub eps_cont: f64,
    pub delta_cont: f64,
}

/// `Some(holds)` when the premises hold, `None` otherwise.
pub fn check_bind_lifting(inst: &BindInstance) -> Option<bool> {
    if deficit(&inst.mu1, &inst.mu2, &inst.phi, inst.eps) > inst.delta + ETA {
        return None;
    }
    for a in inst.mu1.support() {
        for b in inst.mu2.support().filter(|&&b| (inst.phi)(*a, b)) {
            if deficit(&(inst.f)(*a), &(inst.g)(*b), &inst.psi, inst.eps_cont) > inst.delta_cont + ETA {
                return None;
            }
        }
    }
    let left = inst.mu1.bind(|a| (inst.f)(*a));
    let right = inst.mu2.bind(|b| (inst.g)(*b));
    Some(deficit(&left, &right, &inst.psi, inst.eps + inst.eps_cont) <= inst.delta + inst.delta_cont + ETA)
}

pub fn random_bind_instance(rng: &mut RngState) -> BindInstance {
    let mu1 = random_dist(rng, CARRIER, 6);
    let mu2 = mix(&mu1, &random_dist(rng, CARRIER, 6), 0.6 * rng.unit_f64());
    let phi = table_relation(random_relation(rng, CARRIER, CARRIER, 0.3, |_, _| true));
    let psi = table_relation(random_relation(rng, CARRIER, CARRIER, 0.2, |_, _| true));
    let f_table: Vec<SubDist<i64>> = (0..CARRIER).map(|_| random_dist(rng, CARRIER, 6)).collect();
    let g_table: Vec<SubDist<i64>> = (0..CARRIER)
        .map(|b| mix(&f_table[b as usize], &random_dist(rng, CARRIER, 6), 0.6 * rng.unit_f64()))
        .collect();
    let f = table_kernel(f_table);
    let g = table_kernel(g_table);
    let (eps, eps_cont) = (random_eps(rng), random_eps(rng));
    let delta = deficit(&mu1, &mu2, &phi, eps);
    let mut delta_cont: f64 = 0.0;
    for a in mu1.support() {
        for b in mu2.support().filter(|&&b| phi(*a, b)) {
            delta_cont = delta_cont.max(deficit(&f(*a), &g(*b), &psi, eps_cont));
        }
    }
    BindInstance { mu1, mu2, f, g, phi, psi, eps, delta, eps_cont, delta_cont }
}

pub fn bind_lifting_suite(seed: u64, count: usize) -> SuiteSummary {
    let mut rng = RngState::new(seed);
    let instances: Vec<BindInstance> = (0..count).map(|_| random_bind_instance(&mut rng)).collect();
    let outcomes: Vec<Option<bool>> = instances.par_iter().map(check_bind_lifting).collect();
    let mut summary = SuiteSummary::default();
    for (n, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Some(true) => summary.checked += 1,
            Some(false) => {
                summary.checked += 1;
                summary.violations += 1;
                summary.log.push(format!("instance {n}: violation"));
            }
            None => {
                summary.discarded += 1;
                summary.log.push(format!("instance {n}: premise failed"));
            }
        }
    }
    summary
}

// ---------------------------------------------------------------- mechanisms

/// Runs `f` then `g` (which sees `f`'s output) and checks the pair of
/// outputs at `(eps1 + eps2, delta1 + delta2)`.
#[allow(clippy::too_many_arguments)]
pub fn check_seq_composition<A, B, F, G>(
    f: &F,
    g: &G,
    pairs: &[(Database, Database)],
    eps1: Rational,
    delta1: Rational,
    eps2: Rational,
    delta2: Rational,
    cfg: &EnumConfig,
) -> Result<DpReport, VerifyError>
where
    A: Ord + Clone + Send,
    B: Ord + Clone + Send,
    F: Fn(&mut dyn NoiseSource, &Database) -> Result<A, MechanismError> + Sync,
    G: Fn(&mut dyn NoiseSource, &Database, &A) -> Result<B, MechanismError> + Sync,
{
    let composed = |ns: &mut dyn NoiseSource, db: &Database| {
        let a = f(ns, db)?;
        let b = g(ns, db, &a)?;
        Ok((a, b))
    };
    check_dp(&composed, pairs, eps1 + eps2, delta1 + delta2, cfg)
}

/// Reports for `f` and for `g . f` at the same budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostProcessing {
    pub base: DpReport,
    pub processed: DpReport,
}

impl PostProcessing {
    /// Post-processing never increases the divergence of any pair, so a
    /// passing `f` implies a passing `g . f`.
    pub fn holds(&self) -> bool {
        let no_increase = self
            .base
            .pairs
            .iter()
            .zip(&self.processed.pairs)
            .all(|(b, p)| p.divergence_xy <= b.divergence_xy + ETA && p.divergence_yx <= b.divergence_yx + ETA);
        no_increase && (!self.base.verdicts_pass() || self.processed.verdicts_pass())
    }
}

pub fn check_post_processing<A, B, F, G>(
    f: &F,
    g: G,
    pairs: &[(Database, Database)],
    eps: Rational,
    delta: Rational,
    cfg: &EnumConfig,
) -> Result<PostProcessing, VerifyError>
where
    A: Ord + Clone + Send,
    B: Ord + Clone + Send,
    F: Fn(&mut dyn NoiseSource, &Database) -> Result<A, MechanismError> + Sync,
    G: Fn(&A) -> B + Sync,
{
    let base = check_dp(f, pairs, eps, delta, cfg)?;
    let processed = check_dp(&|ns: &mut dyn NoiseSource, db: &Database| f(ns, db).map(|a| g(&a)), pairs, eps, delta, cfg)?;
    Ok(PostProcessing { base, processed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MetricOutcome {
    /// The map moved further than its declared sensitivity on an adjacent pair.
    SensitivityViolated { x: Database, y: Database, fx: i64, fy: i64, declared: String },
    Checked(DpReport),
}

impl MetricOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, MetricOutcome::Checked(r) if r.passed())
    }
}

/// Brute-forces the declared sensitivity `s` of `f` over `pairs`, then checks
/// `Laplace(eps / s, f(db))` at `eps`.
pub fn check_metric_composition(
    f: &Query,
    eps: Rational,
    pairs: &[(Database, Database)],
    cfg: &EnumConfig,
) -> Result<MetricOutcome, VerifyError> {
    let s = f.sensitivity();
    if s <= Rational::zero() {
        return Err(VerifyError::InvalidParameter("sensitivity must be positive".into()));
    }
    for (x, y) in pairs {
        let (fx, fy) = (f.eval(x), f.eval(y));
        if Rational::from_integer(fx.abs_diff(fy) as i64) > s {
            return Ok(MetricOutcome::SensitivityViolated {
                x: x.clone(),
                y: y.clone(),
                fx,
                fy,
                declared: crate::rational::format_rational(&s),
            });
        }
    }
    let mech = |ns: &mut dyn NoiseSource, db: &Database| {
        ns.charge("metric.laplace", Credits::pure(eps))?;
        Ok(ns.laplace(LaplaceParams::new(eps / s, f.eval(db))))
    };
    Ok(MetricOutcome::Checked(check_dp(&mech, pairs, eps, Rational::zero(), cfg)?))
}

fn random_query(rng: &mut RngState) -> Query {
    match rng.uniform_below(4) {
        0 => Query::count_rows(),
        1 => Query::count("ge1", |x| x >= 1),
        2 => Query::count("eq2", |x| x == 2),
        _ => Query::clip_sum(2),
    }
}

fn random_rational_eps(rng: &mut RngState) -> Rational {
    [Rational::new(1, 4), Rational::new(1, 2), Rational::from_integer(1), Rational::new(3, 2)]
        [rng.uniform_below(4) as usize]
}

type IntMap = Arc<dyn Fn(i64) -> i64 + Send + Sync>;

fn random_map(rng: &mut RngState) -> (String, IntMap) {
    let t = rng.uniform_below(5) as i64 - 2;
    match rng.uniform_below(6) {
        0 => ("parity".into(), Arc::new(|a: i64| a.rem_euclid(2))),
        1 => ("clamp".into(), Arc::new(|a: i64| a.clamp(-1, 1))),
        2 => ("half".into(), Arc::new(|a: i64| a.abs() / 2)),
        3 => ("constant".into(), Arc::new(|_| 0)),
        4 => ("identity".into(), Arc::new(|a| a)),
        _ => (format!("above {t}"), Arc::new(move |a: i64| (a > t) as i64)),
    }
}

fn suite_pairs() -> Vec<(Database, Database)> {
    Adjacency::RowHamming.pairs(&Database::universe(2, 0, 2, false))
}

fn laplace_release(eps: Rational, q: Query) -> impl Fn(&mut dyn NoiseSource, &Database) -> Result<i64, MechanismError> + Sync {
    move |ns, db| {
        ns.charge("suite.f", Credits::pure(eps))?;
        Ok(ns.laplace(LaplaceParams::new(eps / q.sensitivity(), q.eval(db))))
    }
}

/// Random two-step mechanisms `(f, g)` where `g`'s query depends on `f`'s
/// output. For each instance the least deltas of the steps are measured,
/// `delta1*` for `f` at `eps1` and `delta2*` for `g` at `eps2` over every
/// value of `f`'s output, and the composed mechanism must stay within
/// `delta1* + delta2*` at `eps1 + eps2`.
pub fn seq_composition_suite(seed: u64, count: usize, cfg: &EnumConfig) -> Result<SuiteSummary, VerifyError> {
    let mut rng = RngState::new(seed);
    let pairs = suite_pairs();
    let dbs: BTreeSet<Database> = pairs.iter().flat_map(|(x, y)| [x.clone(), y.clone()]).collect();
    let mut summary = SuiteSummary::default();
    for n in 0..count {
        let (q1, q2, q3) = (random_query(&mut rng), random_query(&mut rng), random_query(&mut rng));
        let (e1, e2) = (random_rational_eps(&mut rng), random_rational_eps(&mut rng));
        let cut = rng.uniform_below(3) as i64 - 1;
        let f = laplace_release(e1, q1);
        let g = move |ns: &mut dyn NoiseSource, db: &Database, a: &i64| {
            let q = if *a > cut { &q2 } else { &q3 };
            ns.charge("suite.g", Credits::pure(e2))?;
            Ok(ns.laplace(LaplaceParams::new(e2 / q.sensitivity(), q.eval(db) + a.rem_euclid(3))))
        };
        let f_enum = enumerate_distinct(&f, dbs.iter().cloned(), cfg)?;
        let outputs: BTreeSet<i64> = f_enum.values().flat_map(|e| e.dist.support().copied().collect::<Vec<_>>()).collect();
        let measure = |m: &std::collections::BTreeMap<Database, super::Enumeration<i64>>, eps: f64| {
            pairs
                .iter()
                .map(|(x, y)| {
                    hockey_stick(&m[x].dist, &m[y].dist, eps).max(hockey_stick(&m[y].dist, &m[x].dist, eps))
                })
                .fold(0.0, f64::max)
        };
        let delta1 = measure(&f_enum, to_f64(&e1));
        let delta2 = outputs
            .par_iter()
            .map(|a| {
                let ga = |ns: &mut dyn NoiseSource, db: &Database| g(ns, db, a);
                enumerate_distinct(&ga, dbs.iter().cloned(), cfg).map(|m| measure(&m, to_f64(&e2)))
            })
            .collect::<Result<Vec<f64>, VerifyError>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let composed = |ns: &mut dyn NoiseSource, db: &Database| {
            let a = f(ns, db)?;
            Ok((a, g(ns, db, &a)?))
        };
        let c_enum = enumerate_distinct(&composed, dbs.iter().cloned(), cfg)?;
        let total = pairs
            .iter()
            .map(|(x, y)| {
                let e = to_f64(&(e1 + e2));
                hockey_stick(&c_enum[x].dist, &c_enum[y].dist, e).max(hockey_stick(&c_enum[y].dist, &c_enum[x].dist, e))
            })
            .fold(0.0, f64::max);
        summary.checked += 1;
        if total > delta1 + delta2 + ETA {
            summary.violations += 1;
            summary.log.push(format!("instance {n}: composed {total:.3e} > {delta1:.3e} + {delta2:.3e}"));
        }
    }
    Ok(summary)
}

/// Random Laplace releases followed by random deterministic maps; the
/// divergence of every pair, in both directions, must not increase.
pub fn post_processing_suite(seed: u64, count: usize, cfg: &EnumConfig) -> Result<SuiteSummary, VerifyError> {
    let mut rng = RngState::new(seed);
    let pairs = suite_pairs();
    let mut summary = SuiteSummary::default();
    for n in 0..count {
        let q = random_query(&mut rng);
        let e = random_rational_eps(&mut rng);
        // check at a budget that may be below the mechanism's own
        let at = [e, e / 2, e * 2][rng.uniform_below(3) as usize];
        let (name, map) = random_map(&mut rng);
        let f = laplace_release(e, q);
        let outcome = check_post_processing(&f, |a: &i64| map(*a), &pairs, at, Rational::zero(), cfg)?;
        summary.checked += 1;
        if !outcome.holds() {
            summary.violations += 1;
            summary.log.push(format!("instance {n}: map {name} increased the divergence"));
        }
    }
    Ok(summary)
}
