mod common;

use common::{adaptive_count_within_budget, cache_list, filter_client, query_pool, r, random_db};
use dpv_core::budget::Credits;
use dpv_core::mechanisms::{auto_avg, map_cache, report_noisy_max, svt_stream, Database, LaplaceRelease, NoiseSource, SampledNoise};
use dpv_core::rational::Rational;
use dpv_core::sampler::RngState;

#[test]
fn filter_never_runs_more_than_its_budget() {
    for seed in 0..1000 {
        let (executed, remaining) = filter_client(seed);
        assert!(executed <= Rational::from_integer(1), "client {seed} executed {executed}");
        assert_eq!(executed + remaining, Rational::from_integer(1), "client {seed}");
    }
}

#[test]
fn adaptive_count_stays_within_budget() {
    let mut rng = RngState::new(17);
    for seed in 0..300 {
        adaptive_count_within_budget(seed, &mut rng).unwrap();
    }
}

#[test]
fn cache_charges_once_per_unique_key() {
    let mut rng = RngState::new(29);
    for seed in 0..50 {
        cache_list(seed, &mut rng).unwrap();
    }
}

#[test]
fn sparse_vector_spends_at_most_n_eps() {
    let mut rng = RngState::new(5);
    let pool = query_pool();
    for seed in 0..200 {
        let eps = r(1 + rng.uniform_below(4) as i64, 2);
        let n = 1 + rng.uniform_below(3);
        let threshold = rng.uniform_below(5) as i64;
        let db = random_db(&mut rng);
        let mut ns = SampledNoise::new(seed, Credits::pure(eps * Rational::from_integer(n as i64)));
        let picks: Vec<usize> = (0..64).map(|_| rng.uniform_below(pool.len() as u64) as usize).collect();
        let out = svt_stream(&mut ns, eps, threshold, n, |h| pool[picks[h.len() % picks.len()]].clone(), &db, Some(40))
            .unwrap();
        assert!(out.iter().filter(|&&b| b).count() as u64 <= n);
    }
}

#[test]
fn auto_avg_and_noisy_max_respect_their_budgets() {
    let mut rng = RngState::new(11);
    let pool = query_pool();
    for seed in 0..200 {
        let eps = r(1 + rng.uniform_below(4) as i64, 2);
        let db = random_db(&mut rng);
        let mut ns = SampledNoise::new(seed, Credits::pure(eps * 3));
        auto_avg(&mut ns, &[1, 2, 4], eps, &db).unwrap();
        let mut ns = SampledNoise::new(seed, Credits::pure(eps));
        let k = 1 + rng.uniform_below(pool.len() as u64) as usize;
        let idx = report_noisy_max(&mut ns, &pool[..k], eps, &db).unwrap();
        assert!(idx < k);
    }
}

#[test]
fn overspending_client_is_stopped_by_the_ledger() {
    let mut ns = SampledNoise::new(1, Credits::pure(r(1, 1)));
    let db = Database::new(vec![1, 2]);
    assert!(map_cache(&mut ns, LaplaceRelease { eps: r(1, 2) }, &query_pool()[..3], &db).is_err());
    assert_eq!(ns.ledger().spent().eps(), r(1, 1));
    assert!(ns.charge("extra", Credits::pure(r(1, 100))).is_err());
}
