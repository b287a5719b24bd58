mod common;

use common::{lp_deficit, random_small_coupling};
use dpv_core::sampler::RngState;
use dpv_core::verifier::{deficit_by_flow, deficit_by_subsets};

#[test]
fn subset_route_matches_linear_program() {
    let mut rng = RngState::new(8);
    for n in 0..100 {
        let c = random_small_coupling(&mut rng, 4);
        let subsets = deficit_by_subsets(&c.mu1, &c.mu2, c.phi(), c.eps).unwrap();
        let lp = lp_deficit(&c);
        assert!((subsets - lp).abs() < 1e-7, "instance {n}: subsets {subsets} vs lp {lp}");
    }
}

#[test]
fn flow_route_matches_linear_program_on_larger_supports() {
    let mut rng = RngState::new(81);
    for n in 0..60 {
        let c = random_small_coupling(&mut rng, 9);
        let flow = deficit_by_flow(&c.mu1, &c.mu2, c.phi(), c.eps);
        let lp = lp_deficit(&c);
        assert!((flow - lp).abs() < 1e-7, "instance {n}: flow {flow} vs lp {lp}");
    }
}

#[test]
fn empty_relation_deficit_is_first_mass() {
    let mut rng = RngState::new(3);
    let mut c = random_small_coupling(&mut rng, 4);
    for row in &mut c.related {
        row.iter_mut().for_each(|r| *r = false);
    }
    let expected = c.mu1.mass().get();
    assert!((lp_deficit(&c) - expected).abs() < 1e-9);
    assert!((deficit_by_subsets(&c.mu1, &c.mu2, c.phi(), c.eps).unwrap() - expected).abs() < 1e-12);
}
