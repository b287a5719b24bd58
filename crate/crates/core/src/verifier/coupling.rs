//! Approximate `(eps, delta)`-Phi-couplings between finite subdistributions.
//!
//! A coupling exists iff `E[f] <= e^eps E[g] + delta` for every pair of
//! `[0,1]`-valued tests with `f(a) <= g(b)` whenever `(a, b)` is related. The
//! best `g` for a given `f` is `g(b) = max{f(a) : (a,b) related}`, and writing
//! `f` as an integral of its level sets reduces the supremum to indicator
//! tests, so the condition becomes
//!
//! ```text
//! for all S within supp(mu1):  mu1(S) <= e^eps * mu2(Phi(S)) + delta
//! ```
//!
//! with `Phi(S)` the image of `S`. The largest violation of this inequality
//! is the *deficit*. It is computed either by enumerating subsets of the
//! first support, or as a project-selection problem solved by max-flow.

use std::collections::VecDeque;

use super::{VerifyError, ETA};
use crate::dist::SubDist;

/// Subset enumeration refuses supports larger than this.
pub const SUBSET_LIMIT: usize = 20;

/// A claimed `(eps, delta)`-coupling of `mu1` and `mu2` along `phi`.
pub struct CouplingClaim<'a, A: Ord, B: Ord, P> {
    pub mu1: &'a SubDist<A>,
    pub mu2: &'a SubDist<B>,
    pub phi: P,
    pub eps: f64,
    pub delta: f64,
}

impl<'a, A, B, P> CouplingClaim<'a, A, B, P>
where
    A: Ord + Clone,
    B: Ord + Clone,
    P: Fn(&A, &B) -> bool,
{
    pub fn new(mu1: &'a SubDist<A>, mu2: &'a SubDist<B>, phi: P, eps: f64, delta: f64) -> Self {
        Self { mu1, mu2, phi, eps, delta }
    }
}

/// Weights of both supports and, for each point of the first, the indices
/// of related points of the second.
struct Bipartite {
    w1: Vec<f64>,
    w2: Vec<f64>,
    related: Vec<Vec<usize>>,
}

fn bipartite<A, B, P>(mu1: &SubDist<A>, mu2: &SubDist<B>, phi: P) -> Bipartite
where
    A: Ord + Clone,
    B: Ord + Clone,
    P: Fn(&A, &B) -> bool,
{
    let right: Vec<(&B, f64)> = mu2.iter().collect();
    let mut w1 = Vec::with_capacity(mu1.len());
    let mut related = Vec::with_capacity(mu1.len());
    for (a, w) in mu1.iter() {
        w1.push(w);
        related.push(right.iter().enumerate().filter(|(_, (b, _))| phi(a, b)).map(|(j, _)| j).collect());
    }
    Bipartite { w1, w2: right.iter().map(|(_, w)| *w).collect(), related }
}

/// `max_S mu1(S) - e^eps mu2(Phi(S))` by enumerating every subset of the
/// first support.
pub fn deficit_by_subsets<A, B, P>(
    mu1: &SubDist<A>,
    mu2: &SubDist<B>,
    phi: P,
    eps: f64,
) -> Result<f64, VerifyError>
where
    A: Ord + Clone,
    B: Ord + Clone,
    P: Fn(&A, &B) -> bool,
{
    if mu1.len() > SUBSET_LIMIT {
        return Err(VerifyError::SupportTooLarge { size: mu1.len(), limit: SUBSET_LIMIT });
    }
    let g = bipartite(mu1, mu2, phi);
    let mut search = SubsetSearch {
        g: &g,
        scale: eps.exp(),
        covered: vec![0u32; g.w2.len()],
        best: 0.0,
    };
    search.visit(0, 0.0, 0.0);
    Ok(search.best)
}

struct SubsetSearch<'a> {
    g: &'a Bipartite,
    scale: f64,
    covered: Vec<u32>,
    best: f64,
}

impl SubsetSearch<'_> {
    fn visit(&mut self, i: usize, m1: f64, m2: f64) {
        if i == self.g.w1.len() {
            self.best = self.best.max(m1 - self.scale * m2);
            return;
        }
        self.visit(i + 1, m1, m2);
        let mut newly = 0.0;
        for &j in &self.g.related[i] {
            if self.covered[j] == 0 {
                newly += self.g.w2[j];
            }
            self.covered[j] += 1;
        }
        self.visit(i + 1, m1 + self.g.w1[i], m2 + newly);
        for &j in &self.g.related[i] {
            self.covered[j] -= 1;
        }
    }
}

/// The same deficit as [`deficit_by_subsets`], as a project-selection
/// problem: choosing `a` earns `mu1(a)` and forces paying `e^eps mu2(b)` for
/// every related `b`. The best profit is `mu1(supp) - mincut`.
pub fn deficit_by_flow<A, B, P>(mu1: &SubDist<A>, mu2: &SubDist<B>, phi: P, eps: f64) -> f64
where
    A: Ord + Clone,
    B: Ord + Clone,
    P: Fn(&A, &B) -> bool,
{
    let g = bipartite(mu1, mu2, phi);
    let n = g.w1.len();
    let m = g.w2.len();
    let source = n + m;
    let sink = source + 1;
    let mut net = FlowNetwork::new(n + m + 2);
    for (i, &w) in g.w1.iter().enumerate() {
        net.add_edge(source, i, w);
        for &j in &g.related[i] {
            net.add_edge(i, n + j, f64::INFINITY);
        }
    }
    let scale = eps.exp();
    for (j, &w) in g.w2.iter().enumerate() {
        net.add_edge(n + j, sink, scale * w);
    }
    let total: f64 = g.w1.iter().sum();
    (total - net.max_flow(source, sink)).max(0.0)
}

/// Residual capacities below this are treated as saturated.
const FLOW_EPS: f64 = 1e-15;

struct FlowEdge {
    to: usize,
    cap: f64,
}

/// Dinic's algorithm over floating-point capacities.
struct FlowNetwork {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self { edges: Vec::new(), adj: vec![Vec::new(); nodes], level: vec![0; nodes], next: vec![0; nodes] }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(FlowEdge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(FlowEdge { to: from, cap: 0.0 });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let FlowEdge { to, cap } = self.edges[e];
                if cap > FLOW_EPS && self.level[to] < 0 {
                    self.level[to] = self.level[u] + 1;
                    queue.push_back(to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.adj[u].len() {
            let e = self.adj[u][self.next[u]];
            let FlowEdge { to, cap } = self.edges[e];
            if cap > FLOW_EPS && self.level[to] == self.level[u] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0.0 {
                    self.edges[e].cap -= got;
                    self.edges[e ^ 1].cap += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.next.fill(0);
            loop {
                let got = self.dfs(s, t, f64::INFINITY);
                if got <= 0.0 {
                    break;
                }
                flow += got;
            }
        }
        flow
    }
}

/// Deficit by subset enumeration when the first support is small enough,
/// by max-flow otherwise.
pub fn coupling_deficit<A, B, P>(c: &CouplingClaim<'_, A, B, P>) -> f64
where
    A: Ord + Clone,
    B: Ord + Clone,
    P: Fn(&A, &B) -> bool,
{
    if c.mu1.len() <= SUBSET_LIMIT {
        deficit_by_subsets(c.mu1, c.mu2, &c.phi, c.eps).expect("support within the subset limit")
    } else {
        deficit_by_flow(c.mu1, c.mu2, &c.phi, c.eps)
    }
}

/// Decides the claim by subset enumeration; refuses supports above
/// [`SUBSET_LIMIT`].
pub fn coupling_exists<A, B, P>(c: &CouplingClaim<'_, A, B, P>) -> Result<bool, VerifyError>
where
    A: Ord + Clone,
    B: Ord + Clone,
    P: Fn(&A, &B) -> bool,
{
    Ok(deficit_by_subsets(c.mu1, c.mu2, &c.phi, c.eps)? <= c.delta + ETA)
}

/// Decides the claim for any support size, switching to max-flow above
/// [`SUBSET_LIMIT`].
pub fn coupling_exists_any_size<A, B, P>(c: &CouplingClaim<'_, A, B, P>) -> bool
where
    A: Ord + Clone,
    B: Ord + Clone,
    P: Fn(&A, &B) -> bool,
{
    coupling_deficit(c) <= c.delta + ETA
}

/// The least `delta` for which the coupling exists at `eps`.
pub fn min_delta<A, B, P>(mu1: &SubDist<A>, mu2: &SubDist<B>, phi: P, eps: f64) -> f64
where
    A: Ord + Clone,
    B: Ord + Clone,
    P: Fn(&A, &B) -> bool,
{
    coupling_deficit(&CouplingClaim::new(mu1, mu2, phi, eps, 0.0))
}

/// Whenever `c` holds, it must still hold at `eps2 >= eps`,
/// `delta2 >= delta` and a relation `phi2` containing `phi`.
///
/// Returns `false` only for a monotonicity violation.
pub fn coupling_monotone_check<A, B, P, Q>(
    c: &CouplingClaim<'_, A, B, P>,
    eps2: f64,
    delta2: f64,
    phi2: Q,
) -> Result<bool, VerifyError>
where
    A: Ord + Clone,
    B: Ord + Clone,
    P: Fn(&A, &B) -> bool,
    Q: Fn(&A, &B) -> bool,
{
    if eps2 < c.eps || delta2 < c.delta {
        return Err(VerifyError::InvalidParameter("weakened parameters must not shrink".into()));
    }
    for a in c.mu1.support() {
        for b in c.mu2.support() {
            if (c.phi)(a, b) && !phi2(a, b) {
                return Err(VerifyError::InvalidParameter("phi2 must contain phi".into()));
            }
        }
    }
    if !coupling_exists(c)? {
        return Ok(true);
    }
    let weaker = CouplingClaim::new(c.mu1, c.mu2, phi2, eps2, delta2);
    coupling_exists(&weaker)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{laplace_truncated, LaplaceParams};
    use crate::rational::Rational;
    use proptest::prelude::*;

    fn eq(a: &i64, b: &i64) -> bool {
        a == b
    }

    #[test]
    fn equality_on_identical_distributions() {
        let mu = SubDist::from_weights([(0, 0.2), (1, 0.5), (2, 0.3)]).unwrap();
        assert!(coupling_exists(&CouplingClaim::new(&mu, &mu, eq, 0.0, 0.0)).unwrap());
    }

    #[test]
    fn empty_relation_needs_full_delta() {
        let mu = SubDist::from_weights([(0, 0.5), (1, 0.5)]).unwrap();
        let none = |_: &i64, _: &i64| false;
        assert!(!coupling_exists(&CouplingClaim::new(&mu, &mu, none, 3.0, 0.99)).unwrap());
        assert!(coupling_exists(&CouplingClaim::new(&mu, &mu, none, 0.0, 1.0)).unwrap());
        assert!((min_delta(&mu, &mu, none, 5.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subset_route_refuses_large_support() {
        let (mu, _) = laplace_truncated(LaplaceParams::new(Rational::from_integer(1), 0), 10).unwrap();
        assert!(matches!(
            coupling_exists(&CouplingClaim::new(&mu, &mu, eq, 0.0, 0.0)),
            Err(VerifyError::SupportTooLarge { size: 21, limit: 20 })
        ));
        assert!(coupling_exists_any_size(&CouplingClaim::new(&mu, &mu, eq, 0.0, 0.0)));
    }

    #[test]
    fn laplace_shift_within_tail() {
        let eps = Rational::new(1, 2);
        let e = 0.5;
        for (m, m2, k) in [(0i64, 1i64, 1i64), (0, 1, 0), (1, 0, 0), (0, 0, 2), (0, 1, -1)] {
            let s = (k + m - m2).abs() as f64;
            let (a, ta) = laplace_truncated(LaplaceParams::new(eps, m), 9).unwrap();
            let (b, tb) = laplace_truncated(LaplaceParams::new(eps, m2), 9).unwrap();
            let shift = move |z: &i64, w: &i64| *w == z + k;
            let slack = (s * e).exp() * (ta.get() + tb.get());
            assert!(coupling_exists(&CouplingClaim::new(&a, &b, shift, s * e, slack)).unwrap());
            if s > 0.0 {
                assert!(!coupling_exists(&CouplingClaim::new(&a, &b, shift, (s - 0.5) * e, slack)).unwrap());
            }
        }
    }

    #[test]
    fn flow_agrees_with_subsets_on_laplace() {
        let eps = Rational::new(1, 2);
        let (a, _) = laplace_truncated(LaplaceParams::new(eps, 0), 9).unwrap();
        let (b, _) = laplace_truncated(LaplaceParams::new(eps, 1), 9).unwrap();
        let rel = |z: &i64, w: &i64| (*z >= 0 && *w >= 1) || (*z < 0 && *w < 1);
        for e in [0.0, 0.25, 0.5, 1.0] {
            let s = deficit_by_subsets(&a, &b, rel, e).unwrap();
            let f = deficit_by_flow(&a, &b, rel, e);
            assert!((s - f).abs() < 1e-12, "{e}: {s} vs {f}");
        }
    }

    #[test]
    fn monotone_rejects_bad_weakening() {
        let mu = SubDist::point(0i64);
        let c = CouplingClaim::new(&mu, &mu, eq, 1.0, 0.0);
        assert!(coupling_monotone_check(&c, 0.5, 0.0, eq).is_err());
        assert!(coupling_monotone_check(&c, 1.0, 0.0, |_: &i64, _: &i64| false).is_err());
        assert!(coupling_monotone_check(&c, 2.0, 1.0, |_: &i64, _: &i64| true).unwrap());
    }

    fn small_dist(vals: Vec<(i64, u32)>) -> SubDist<i64> {
        let total: u32 = vals.iter().map(|(_, w)| w).sum::<u32>().max(1);
        SubDist::from_weights(vals.into_iter().map(|(v, w)| (v, w as f64 / total as f64))).unwrap()
    }

    proptest! {
        #[test]
        fn routes_agree(
            d1 in proptest::collection::vec((0i64..8, 0u32..10), 1..8),
            d2 in proptest::collection::vec((0i64..8, 0u32..10), 1..8),
            rel in proptest::collection::vec(any::<bool>(), 64),
            eps in 0.0f64..2.0,
        ) {
            let mu1 = small_dist(d1);
            let mu2 = small_dist(d2);
            let phi = |a: &i64, b: &i64| rel[(a * 8 + b) as usize];
            let s = deficit_by_subsets(&mu1, &mu2, phi, eps).unwrap();
            let f = deficit_by_flow(&mu1, &mu2, phi, eps);
            prop_assert!((s - f).abs() < 1e-12);
        }

        #[test]
        fn monotonicity_never_violated(
            d1 in proptest::collection::vec((0i64..6, 0u32..10), 1..6),
            d2 in proptest::collection::vec((0i64..6, 0u32..10), 1..6),
            rel in proptest::collection::vec(any::<bool>(), 36),
            extra in proptest::collection::vec(any::<bool>(), 36),
            eps in 0.0f64..2.0,
            de in 0.0f64..1.0,
            dd in 0.0f64..0.5,
        ) {
            let mu1 = small_dist(d1);
            let mu2 = small_dist(d2);
            let phi = |a: &i64, b: &i64| rel[(a * 6 + b) as usize];
            let phi2 = |a: &i64, b: &i64| rel[(a * 6 + b) as usize] || extra[(a * 6 + b) as usize];
            let delta = min_delta(&mu1, &mu2, phi, eps);
            let c = CouplingClaim::new(&mu1, &mu2, phi, eps, delta);
            prop_assert!(coupling_exists(&c).unwrap());
            prop_assert!(coupling_monotone_check(&c, eps + de, delta + dd, phi2).unwrap());
        }
    }
}
