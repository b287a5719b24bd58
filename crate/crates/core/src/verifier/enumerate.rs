//! The enumerating interpreter.
//!
//! A mechanism is re-executed once per leaf of its noise tree. The choice
//! path of the previous run is kept as a stack of frames; each run replays
//! the stack, extends it with fresh frames for new Laplace calls, and the
//! stack is then advanced like an odometer.

use serde::Serialize;

use super::VerifyError;
use crate::budget::{BudgetError, Credits, LedgerEntry};
use crate::dist::{laplace_truncated, LaplaceParams, SubDist};
use crate::mechanisms::{Database, MechanismError, NoiseSource};

pub const DEFAULT_MAX_BRANCHES: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnumConfig {
    /// Each Laplace draw is truncated to `mean +/- radius`.
    pub radius: u64,
    /// Upper bound on the number of leaves explored.
    pub max_branches: u64,
}

impl EnumConfig {
    pub fn new(radius: u64) -> Self {
        Self { radius, max_branches: DEFAULT_MAX_BRANCHES }
    }

    pub fn with_max_branches(mut self, max_branches: u64) -> Self {
        self.max_branches = max_branches;
        self
    }
}

/// Exact output subdistribution of a mechanism under truncated noise.
#[derive(Debug, Clone)]
pub struct Enumeration<T: Ord> {
    pub dist: SubDist<T>,
    /// Probability mass lost to truncation; at least `1 - mass(dist)`.
    pub tail_slack: f64,
    pub leaves: u64,
    /// Component-wise maximum spend over all executions.
    pub max_spent: Credits,
    /// Ledger of the most expensive execution.
    pub worst_ledger: Vec<LedgerEntry>,
}

struct Frame {
    params: LaplaceParams,
    support: Vec<(i64, f64)>,
    idx: usize,
}

struct BranchingNoise<'a> {
    frames: &'a mut Vec<Frame>,
    tail: &'a mut f64,
    radius: u64,
    depth: usize,
    weight: f64,
    spent: Credits,
    entries: Vec<LedgerEntry>,
    fault: Option<VerifyError>,
}

impl NoiseSource for BranchingNoise<'_> {
    fn laplace(&mut self, params: LaplaceParams) -> i64 {
        if params.is_degenerate() {
            return params.mean;
        }
        if self.depth == self.frames.len() {
            match laplace_truncated(params, self.radius) {
                Ok((dist, tail)) => {
                    *self.tail += self.weight * tail.get();
                    let support = dist.iter().map(|(v, w)| (*v, w)).collect();
                    self.frames.push(Frame { params, support, idx: 0 });
                }
                Err(e) => {
                    self.fault.get_or_insert(VerifyError::Dist(e));
                    return params.mean;
                }
            }
        } else if self.frames[self.depth].params != params {
            self.fault.get_or_insert(VerifyError::Nondeterministic { call: self.depth });
        }
        let frame = &self.frames[self.depth];
        let (v, w) = frame.support[frame.idx];
        self.weight *= w;
        self.depth += 1;
        v
    }

    fn charge(&mut self, label: &str, cost: Credits) -> Result<(), BudgetError> {
        self.spent = self.spent.join(&cost);
        self.entries.push(LedgerEntry { label: label.to_string(), spent: cost });
        Ok(())
    }
}

fn exceeds(a: &Credits, b: &Credits) -> bool {
    (a.eps(), a.delta()) > (b.eps(), b.delta())
}

fn component_max(a: &Credits, b: &Credits) -> Credits {
    Credits::new(a.eps().max(b.eps()), a.delta().max(b.delta()))
        .expect("maximum of nonnegative credits")
}

/// Runs `run` once per leaf of its truncated noise tree.
///
/// Charges always succeed; the spend of every execution is tracked so the
/// caller can audit it against the budget under test.
pub fn enumerate<T, F>(cfg: &EnumConfig, mut run: F) -> Result<Enumeration<T>, VerifyError>
where
    T: Ord + Clone,
    F: FnMut(&mut dyn NoiseSource) -> Result<T, MechanismError>,
{
    let mut frames: Vec<Frame> = Vec::new();
    let mut tail = 0.0;
    let mut dist = SubDist::empty();
    let mut leaves = 0u64;
    let mut max_spent = Credits::zero();
    let mut worst: Option<(Credits, Vec<LedgerEntry>)> = None;
    loop {
        leaves += 1;
        if leaves > cfg.max_branches {
            return Err(VerifyError::BranchCap { limit: cfg.max_branches });
        }
        let mut ns = BranchingNoise {
            frames: &mut frames,
            tail: &mut tail,
            radius: cfg.radius,
            depth: 0,
            weight: 1.0,
            spent: Credits::zero(),
            entries: Vec::new(),
            fault: None,
        };
        let out = run(&mut ns)?;
        if let Some(fault) = ns.fault.take() {
            return Err(fault);
        }
        if ns.depth < ns.frames.len() {
            return Err(VerifyError::Nondeterministic { call: ns.depth });
        }
        dist.accumulate(out, ns.weight);
        max_spent = component_max(&max_spent, &ns.spent);
        if worst.as_ref().is_none_or(|(w, _)| exceeds(&ns.spent, w)) {
            worst = Some((ns.spent, ns.entries));
        }
        while let Some(top) = frames.last_mut() {
            if top.idx + 1 < top.support.len() {
                top.idx += 1;
                break;
            }
            frames.pop();
        }
        if frames.is_empty() {
            break;
        }
    }
    let lost = 1.0 - dist.mass().get();
    Ok(Enumeration {
        dist,
        tail_slack: tail.max(lost),
        leaves,
        max_spent,
        worst_ledger: worst.map(|(_, e)| e).unwrap_or_default(),
    })
}

/// Enumerates `mech` on one database.
pub fn enumerate_mechanism<T, M>(
    mech: &M,
    db: &Database,
    cfg: &EnumConfig,
) -> Result<Enumeration<T>, VerifyError>
where
    T: Ord + Clone,
    M: Fn(&mut dyn NoiseSource, &Database) -> Result<T, MechanismError> + ?Sized,
{
    enumerate(cfg, |ns| mech(ns, db))
}
