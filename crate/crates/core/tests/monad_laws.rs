use dpv_core::dist::SubDist;
use proptest::prelude::*;

fn subdist() -> impl Strategy<Value = SubDist<i64>> {
    prop::collection::vec((-5i64..5, 0.0f64..1.0), 0..6).prop_map(|pairs| {
        let total: f64 = pairs.iter().map(|(_, w)| w).sum::<f64>().max(1.0);
        SubDist::from_weights(pairs.into_iter().map(|(a, w)| (a, w / total))).unwrap()
    })
}

// Kernels are indexed families so proptest can generate them.
fn kernel(table: &[SubDist<i64>]) -> impl Fn(&i64) -> SubDist<i64> + '_ {
    move |a| table[a.rem_euclid(table.len() as i64) as usize].clone()
}

fn kernels() -> impl Strategy<Value = Vec<SubDist<i64>>> {
    prop::collection::vec(subdist(), 1..4)
}

proptest! {
    #[test]
    fn left_identity(a in -5i64..5, table in kernels()) {
        let f = kernel(&table);
        prop_assert!(SubDist::point(a).bind(&f).approx_eq(&f(&a), 1e-12));
    }

    #[test]
    fn right_identity(mu in subdist()) {
        prop_assert!(mu.bind(|a| SubDist::point(*a)).approx_eq(&mu, 1e-12));
    }

    #[test]
    fn associativity(mu in subdist(), t1 in kernels(), t2 in kernels()) {
        let (f, g) = (kernel(&t1), kernel(&t2));
        let lhs = mu.bind(&f).bind(&g);
        let rhs = mu.bind(|a| f(a).bind(&g));
        prop_assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn bind_never_gains_mass(mu in subdist(), table in kernels()) {
        let out = mu.bind(kernel(&table));
        prop_assert!(out.mass().get() <= mu.mass().get() + 1e-12);
    }

    #[test]
    fn map_preserves_mass(mu in subdist(), k in 1i64..4) {
        let out = mu.map(|a| a.rem_euclid(k));
        prop_assert!((out.mass().get() - mu.mass().get()).abs() < 1e-12);
    }
}
