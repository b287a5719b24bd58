//! Finite-support discrete subdistributions and the discrete Laplacian.
//!
//! A [`SubDist`] is a finitely supported map from values to probabilities
//! whose total mass is at most one (up to [`MASS_TOLERANCE`]). `point` and
//! `bind` form the distribution monad; every mechanism output computed by the
//! verifier is one of these.
//!
//! The discrete Laplacian with scale `eps` and mean `m` has mass
//! `(e^eps - 1) / (e^eps + 1) * e^(-eps * |v - m|)` at `v`. For `eps <= 0` it
//! degenerates to the point mass at `m`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::rational::{to_f64, Rational};

/// Global slack folded into every probability inequality.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("probability {0} outside [0, 1 + tolerance]")]
    InvalidProbability(f64),
    #[error("total mass {0} exceeds 1 + tolerance")]
    MassExceeded(f64),
    #[error("support bound {mean} +/- {radius} overflows i64")]
    SupportOverflow { mean: i64, radius: u64 },
}

/// A probability in `[0, 1 + MASS_TOLERANCE]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Prob(f64);

impl Prob {
    pub const ZERO: Prob = Prob(0.0);
    pub const ONE: Prob = Prob(1.0);

    pub fn new(value: f64) -> Result<Self, DistError> {
        if value.is_nan() || !(0.0..=1.0 + MASS_TOLERANCE).contains(&value) {
            return Err(DistError::InvalidProbability(value));
        }
        Ok(Prob(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A finite-support subdistribution over an ordered carrier.
///
/// Zero weights are never stored, so `support()` is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDist<T: Ord> {
    weights: BTreeMap<T, f64>,
}

impl<T: Ord> Default for SubDist<T> {
    fn default() -> Self {
        Self { weights: BTreeMap::new() }
    }
}

impl<T: Ord + Clone> SubDist<T> {
    /// The zero subdistribution.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Point mass at `a` (the monad unit).
    pub fn point(a: T) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(a, 1.0);
        Self { weights }
    }

    /// Builds a subdistribution from `(value, weight)` pairs, summing
    /// duplicates and dropping zeros.
    pub fn from_weights<I>(pairs: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = (T, f64)>,
    {
        let mut out = Self::empty();
        for (a, w) in pairs {
            Prob::new(w)?;
            out.accumulate(a, w);
        }
        let mass = out.total();
        if mass > 1.0 + MASS_TOLERANCE {
            return Err(DistError::MassExceeded(mass));
        }
        Ok(out)
    }

    /// Adds `w` to the weight of `a`. Callers are responsible for keeping
    /// the total mass bounded.
    pub(crate) fn accumulate(&mut self, a: T, w: f64) {
        if w > 0.0 {
            *self.weights.entry(a).or_insert(0.0) += w;
        }
    }

    /// Monadic bind: `result(b) = sum_a self(a) * f(a)(b)`.
    pub fn bind<U, F>(&self, mut f: F) -> SubDist<U>
    where
        U: Ord + Clone,
        F: FnMut(&T) -> SubDist<U>,
    {
        let mut out = SubDist::empty();
        for (a, &wa) in &self.weights {
            for (b, wb) in f(a).weights {
                out.accumulate(b, wa * wb);
            }
        }
        out
    }

    /// Pushes the distribution forward along a deterministic map.
    pub fn map<U, F>(&self, mut f: F) -> SubDist<U>
    where
        U: Ord + Clone,
        F: FnMut(&T) -> U,
    {
        let mut out = SubDist::empty();
        for (a, &w) in &self.weights {
            out.accumulate(f(a), w);
        }
        out
    }

    pub fn mass(&self) -> Prob {
        Prob(self.total())
    }

    fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn prob(&self, a: &T) -> f64 {
        self.weights.get(a).copied().unwrap_or(0.0)
    }

    /// Mass of the event `pred`.
    pub fn prob_where<P: FnMut(&T) -> bool>(&self, mut pred: P) -> f64 {
        self.weights.iter().filter(|(a, _)| pred(a)).map(|(_, w)| w).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> + '_ {
        self.weights.iter().map(|(a, &w)| (a, w))
    }

    pub fn support(&self) -> impl Iterator<Item = &T> + '_ {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Pointwise agreement within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let keys = self.weights.keys().chain(other.weights.keys());
        keys.into_iter().all(|k| (self.prob(k) - other.prob(k)).abs() <= tol)
    }
}

/// Scale and mean of a discrete Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct LaplaceParams {
    #[serde(with = "crate::rational::serde_str")]
    pub eps: Rational,
    pub mean: i64,
}

impl LaplaceParams {
    pub fn new(eps: Rational, mean: i64) -> Self {
        Self { eps, mean }
    }

    /// `eps <= 0` selects the point mass at the mean.
    pub fn is_degenerate(&self) -> bool {
        self.eps <= Rational::zero()
    }
}

/// Probability mass of `v` under the discrete Laplacian.
pub fn laplace_pmf(p: LaplaceParams, v: i64) -> Prob {
    if p.is_degenerate() {
        return if v == p.mean { Prob::ONE } else { Prob::ZERO };
    }
    let eps = to_f64(&p.eps);
    let norm = eps.exp_m1() / (eps.exp() + 1.0);
    let dist = v.abs_diff(p.mean) as f64;
    Prob(norm * (-eps * dist).exp())
}

/// Mass of the discrete Laplacian outside `[mean - radius, mean + radius]`,
/// i.e. `2 e^(-eps * radius) / (e^eps + 1)`.
pub fn laplace_tail(p: LaplaceParams, radius: u64) -> Prob {
    if p.is_degenerate() {
        return Prob::ZERO;
    }
    let eps = to_f64(&p.eps);
    Prob(2.0 * (-eps * radius as f64).exp() / (eps.exp() + 1.0))
}

/// Restricts the discrete Laplacian to `mean +/- radius`, returning the
/// truncated subdistribution together with the exact mass left out.
pub fn laplace_truncated(
    p: LaplaceParams,
    radius: u64,
) -> Result<(SubDist<i64>, Prob), DistError> {
    if p.is_degenerate() {
        return Ok((SubDist::point(p.mean), Prob::ZERO));
    }
    let (lo, hi) = support_bounds(p.mean, radius)?;
    let mut dist = SubDist::empty();
    for v in lo..=hi {
        dist.accumulate(v, laplace_pmf(p, v).get());
    }
    Ok((dist, laplace_tail(p, radius)))
}

/// `[mean - radius, mean + radius]`, refusing to wrap around.
pub fn support_bounds(mean: i64, radius: u64) -> Result<(i64, i64), DistError> {
    let overflow = || DistError::SupportOverflow { mean, radius };
    let r = i64::try_from(radius).map_err(|_| overflow())?;
    let lo = mean.checked_sub(r).ok_or_else(overflow)?;
    let hi = mean.checked_add(r).ok_or_else(overflow)?;
    Ok((lo, hi))
}
