//! Exact discrete-Laplace sampling for execution mode.
//!
//! Samples are built from uniform integers and Bernoulli(exp(-n/d)) coins
//! (Canonne, Kamath and Steinke's construction), so the output distribution
//! is exactly the discrete Laplacian; no floating-point CDF is inverted.
//!
//! The generator is ChaCha20 seeded from a `u64` via `SeedableRng::seed_from_u64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::dist::{laplace_pmf, LaplaceParams};

/// Minimum sample count accepted by [`goodness_of_fit`].
pub const MIN_GOF_SAMPLES: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("goodness of fit needs at least {MIN_GOF_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
}

/// Seeded pseudo-random state. Identical seeds give identical streams.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform integer in `[0, n)`; `n` must be positive.
    pub fn uniform_below(&mut self, n: u64) -> u64 {
        self.rng.gen_range(0..n)
    }

    /// Bernoulli(`num / den`) with `num <= den`.
    pub fn bernoulli_ratio(&mut self, num: u64, den: u64) -> bool {
        debug_assert!(num <= den && den > 0);
        self.uniform_below(den) < num
    }

    /// Bernoulli(exp(-`num / den`)) for any nonnegative rational exponent.
    pub fn bernoulli_exp_neg(&mut self, num: u64, den: u64) -> bool {
        for _ in 0..num / den {
            if !self.bernoulli_exp_neg_le1(1, 1) {
                return false;
            }
        }
        self.bernoulli_exp_neg_le1(num % den, den)
    }

    // exp(-g) for g = num/den in [0, 1]: draw Bernoulli(g / k) for k = 1, 2, ...
    // until one fails; the stopping index is odd with probability exp(-g).
    fn bernoulli_exp_neg_le1(&mut self, num: u64, den: u64) -> bool {
        let mut k: u64 = 1;
        loop {
            let scaled = den.checked_mul(k).expect("Bernoulli denominator overflow");
            if !self.bernoulli_ratio(num, scaled) {
                return k % 2 == 1;
            }
            k += 1;
        }
    }

    /// Random real in `[0, 1)`; only used by test-instance generators, never
    /// by the noise sampler.
    pub fn unit_f64(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// Ordered record of every Laplace draw made during a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SampleTrace {
    draws: Vec<(LaplaceParams, i64)>,
}

impl SampleTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, params: LaplaceParams, value: i64) {
        self.draws.push((params, value));
    }

    pub fn draws(&self) -> &[(LaplaceParams, i64)] {
        &self.draws
    }

    pub fn values(&self) -> Vec<i64> {
        self.draws.iter().map(|&(_, v)| v).collect()
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Draws one sample from the discrete Laplacian with scale `p.eps`
/// centred at `p.mean`.
pub fn sample_laplace(rng: &mut RngState, p: LaplaceParams) -> i64 {
    if p.is_degenerate() {
        return p.mean;
    }
    // pmf proportional to exp(-|y| * s / t) with eps = s / t in lowest terms.
    let s = *p.eps.numer() as u64;
    let t = *p.eps.denom() as u64;
    loop {
        let u = rng.uniform_below(t);
        if !rng.bernoulli_exp_neg(u, t) {
            continue;
        }
        let mut v: u64 = 0;
        while rng.bernoulli_exp_neg(1, 1) {
            v += 1;
        }
        let x = u + t * v;
        let y = (x / s) as i64;
        let negative = rng.bernoulli_ratio(1, 2);
        if negative && y == 0 {
            continue;
        }
        let offset = if negative { -y } else { y };
        return p.mean.saturating_add(offset);
    }
}

/// Chi-square goodness-of-fit p-value of `samples` against the discrete
/// Laplacian.
///
/// Values around the mean whose expected count is at least 5 get their own
/// bin; everything else is pooled into a single tail bin.
pub fn goodness_of_fit(samples: &[i64], p: LaplaceParams) -> Result<f64, SamplerError> {
    if samples.len() < MIN_GOF_SAMPLES {
        return Err(SamplerError::TooFewSamples(samples.len()));
    }
    if p.is_degenerate() {
        let consistent = samples.iter().all(|&v| v == p.mean);
        return Ok(if consistent { 1.0 } else { 0.0 });
    }
    let n = samples.len() as f64;
    let mut radius: i64 = 0;
    while n * laplace_pmf(p, p.mean + radius + 1).get() >= 5.0 {
        radius += 1;
    }
    let lo = p.mean - radius;
    let hi = p.mean + radius;
    let width = (hi - lo + 1) as usize;

    let mut observed = vec![0u64; width + 1];
    for &v in samples {
        if (lo..=hi).contains(&v) {
            observed[(v - lo) as usize] += 1;
        } else {
            observed[width] += 1;
        }
    }
    let mut expected: Vec<f64> = (lo..=hi).map(|v| n * laplace_pmf(p, v).get()).collect();
    let central: f64 = expected.iter().sum();
    expected.push((n - central).max(0.0));

    let mut stat = 0.0;
    let mut bins = 0usize;
    for (o, e) in observed.iter().zip(&expected) {
        if *e > 0.0 {
            let diff = *o as f64 - e;
            stat += diff * diff / e;
            bins += 1;
        } else if *o > 0 {
            return Ok(0.0);
        }
    }
    if bins < 2 {
        return Ok(1.0);
    }
    let chi = ChiSquared::new((bins - 1) as f64).expect("positive degrees of freedom");
    Ok(chi.sf(stat))
}
