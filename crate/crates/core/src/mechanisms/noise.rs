use crate::budget::{BudgetError, Credits, Ledger};
use crate::dist::LaplaceParams;
use crate::sampler::{sample_laplace, RngState, SampleTrace};

/// The only way a mechanism obtains randomness or pays for it.
///
/// Mechanisms are written once against this port. [`SampledNoise`] draws real
/// samples; the verifier's enumerating source branches over every truncated
/// outcome instead.
pub trait NoiseSource {
    /// A draw from the discrete Laplacian `params`.
    fn laplace(&mut self, params: LaplaceParams) -> i64;

    /// Reports a privacy cost to the ledger backing this source.
    fn charge(&mut self, label: &str, cost: Credits) -> Result<(), BudgetError>;
}

/// Execution-mode noise: exact sampler, sample trace, and a budgeted ledger.
#[derive(Debug, Clone)]
pub struct SampledNoise {
    rng: RngState,
    trace: SampleTrace,
    ledger: Ledger,
}

impl SampledNoise {
    pub fn new(seed: u64, budget: Credits) -> Self {
        Self::with_ledger(seed, Ledger::new(budget))
    }

    pub fn with_ledger(seed: u64, ledger: Ledger) -> Self {
        Self { rng: RngState::new(seed), trace: SampleTrace::new(), ledger }
    }

    pub fn trace(&self) -> &SampleTrace {
        &self.trace
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn into_parts(self) -> (SampleTrace, Ledger) {
        (self.trace, self.ledger)
    }
}

impl NoiseSource for SampledNoise {
    fn laplace(&mut self, params: LaplaceParams) -> i64 {
        let v = sample_laplace(&mut self.rng, params);
        self.trace.push(params, v);
        v
    }

    fn charge(&mut self, label: &str, cost: Credits) -> Result<(), BudgetError> {
        self.ledger.spend(label, cost)
    }
}

/// Replays a fixed sequence of noise outcomes, e.g. a recorded
/// [`SampleTrace`]. Once the script runs out it answers with the mean and
/// marks itself overrun.
#[derive(Debug, Clone)]
pub struct ReplayNoise {
    script: Vec<i64>,
    pos: usize,
    overrun: bool,
    trace: SampleTrace,
    ledger: Ledger,
}

impl ReplayNoise {
    pub fn new(script: Vec<i64>, ledger: Ledger) -> Self {
        Self { script, pos: 0, overrun: false, trace: SampleTrace::new(), ledger }
    }

    pub fn trace(&self) -> &SampleTrace {
        &self.trace
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// Whether the mechanism asked for more draws than were scripted.
    pub fn overrun(&self) -> bool {
        self.overrun
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl NoiseSource for ReplayNoise {
    fn laplace(&mut self, params: LaplaceParams) -> i64 {
        let v = match self.script.get(self.pos) {
            Some(&v) => v,
            None => {
                self.overrun = true;
                params.mean
            }
        };
        self.pos += 1;
        self.trace.push(params, v);
        v
    }

    fn charge(&mut self, label: &str, cost: Credits) -> Result<(), BudgetError> {
        self.ledger.spend(label, cost)
    }
}
