use crate::dist::SubDist;
use crate::rational::{to_f64, Rational};

/// The `eps`-hockey-stick divergence `sum_x max(mu1(x) - e^eps mu2(x), 0)`,
/// i.e. the least `delta` with `mu1(S) <= e^eps mu2(S) + delta` for every
/// event `S`.
pub fn hockey_stick<T: Ord + Clone>(mu1: &SubDist<T>, mu2: &SubDist<T>, eps: f64) -> f64 {
    let scale = eps.exp();
    mu1.iter().map(|(x, w)| (w - scale * mu2.prob(x)).max(0.0)).sum()
}

pub fn hockey_stick_rational<T: Ord + Clone>(mu1: &SubDist<T>, mu2: &SubDist<T>, eps: Rational) -> f64 {
    hockey_stick(mu1, mu2, to_f64(&eps))
}
