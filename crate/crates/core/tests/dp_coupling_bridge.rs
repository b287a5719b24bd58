use dpv_core::budget::Credits;
use dpv_core::dist::LaplaceParams;
use dpv_core::mechanisms::{
    at_list, report_noisy_max, Adjacency, Database, MechanismError, NoiseSource, Query,
};
use dpv_core::rational::{to_f64, Rational};
use dpv_core::verifier::{
    check_dp_enumerated, coupling_exists_any_size, enumerate_distinct, CouplingClaim, EnumConfig,
    Enumeration,
};
use num_traits::Zero;
use std::collections::BTreeMap;

fn pairs() -> Vec<(Database, Database)> {
    Adjacency::RowHamming.pairs(&Database::universe(2, 0, 2, false))
}

/// The DP verdict of every pair agrees with the existence of an equality
/// coupling at `(eps, delta + tail)` in both directions.
/// Returns how many pairs passed.
fn assert_bridge<T: Ord + Clone>(enumerated: &BTreeMap<Database, Enumeration<T>>, eps: Rational) -> usize {
    let report = check_dp_enumerated(enumerated, &pairs(), eps, Rational::zero(), 0);
    let e = to_f64(&eps);
    for rec in &report.pairs {
        let (ex, ey) = (&enumerated[&rec.x], &enumerated[&rec.y]);
        let slack = rec.tail;
        let forward = coupling_exists_any_size(&CouplingClaim::new(&ex.dist, &ey.dist, |a: &T, b: &T| a == b, e, slack));
        let backward = coupling_exists_any_size(&CouplingClaim::new(&ey.dist, &ex.dist, |a: &T, b: &T| a == b, e, slack));
        assert_eq!(rec.pass, forward && backward, "pair {} / {} at eps {e}", rec.x, rec.y);
    }
    report.pairs.iter().filter(|p| p.pass).count()
}

fn dbs() -> Vec<Database> {
    Database::universe(2, 0, 2, false)
}

#[test]
fn laplace_release() {
    let cfg = EnumConfig::new(15);
    for eps in [Rational::new(1, 2), Rational::from_integer(1)] {
        let mech = move |ns: &mut dyn NoiseSource, db: &Database| -> Result<i64, MechanismError> {
            ns.charge("lap", Credits::pure(eps))?;
            Ok(ns.laplace(LaplaceParams::new(eps, db.rows().iter().filter(|&&x| x >= 1).count() as i64)))
        };
        let enumerated = enumerate_distinct(&mech, dbs(), &cfg).unwrap();
        let total = pairs().len();
        assert_eq!(assert_bridge(&enumerated, eps), total);
        assert!(assert_bridge(&enumerated, eps / 2) < total);
        assert_bridge(&enumerated, eps / 4);
    }
}

#[test]
fn above_threshold_list() {
    let eps = Rational::from_integer(2);
    let qs = vec![(0usize, Query::count("ge1", |x| x >= 1)), (1, Query::count("eq2", |x| x == 2))];
    let mech = |ns: &mut dyn NoiseSource, db: &Database| at_list(ns, eps, 1, db, &qs);
    let enumerated = enumerate_distinct(&mech, dbs(), &EnumConfig::new(9)).unwrap();
    for probe in [eps, eps / 2, eps / 8] {
        assert_bridge(&enumerated, probe);
    }
}

#[test]
fn report_noisy_max_indices() {
    let eps = Rational::from_integer(2);
    let qs = vec![Query::count("ge1", |x| x >= 1), Query::count("eq0", |x| x == 0)];
    let mech = |ns: &mut dyn NoiseSource, db: &Database| report_noisy_max(ns, &qs, eps, db);
    let enumerated = enumerate_distinct(&mech, dbs(), &EnumConfig::new(12)).unwrap();
    for probe in [eps, eps / 3] {
        assert_bridge(&enumerated, probe);
    }
}
