//! Exact Bayes-optimal sensing by backward induction.
//!
//! The value of a belief with `h` slots left is
//!
//! ```text
//! V(f, h) = max_i  p_i (B + V(f | z_i = 1, h - 1)) + (1 - p_i) V(f | z_i = 0, h - 1)
//! ```
//!
//! with `V(f, 0) = 0` and `p_i` the predictive probability that channel `i`
//! is free. States are memoized on the belief's sufficient statistic (per
//! channel observation counts) and the remaining horizon. The number of such
//! states grows like `T^(2N)`, so every top-level query is checked against a
//! cell budget first.

use std::collections::HashMap;

use thiserror::Error;

use crate::belief::{Belief, BeliefError, Counts};
use crate::env::{EnvError, Realization, SensingHistory};
use crate::scalar::Scalar;

pub const DEFAULT_CELL_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DpError {
    #[error("belief has {found} channels, problem has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("channel {channel} outside 1..={num_channels}")]
    ChannelOutOfRange { channel: usize, num_channels: usize },
    #[error("an action needs at least one remaining slot")]
    NoSlotsLeft,
    #[error("exact DP needs up to {cells} memo cells, budget is {budget}")]
    BudgetExceeded { cells: u128, budget: u128 },
    #[error("belief of realization mismatch: {0}")]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Optimal value with `h` slots left and the channel attaining it
/// (`None` when `h = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Decision<S> {
    pub value: S,
    pub channel: Option<usize>,
}

/// Memo table keyed by `(fingerprint, remaining horizon)`.
#[derive(Debug, Clone)]
pub struct ValueCache<S> {
    cells: HashMap<(Vec<Counts>, usize), Decision<S>>,
}

impl<S> Default for ValueCache<S> {
    fn default() -> Self {
        Self {
            cells: HashMap::new(),
        }
    }
}

impl<S> ValueCache<S> {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, fingerprint: &[Counts], remaining: usize) -> Option<&Decision<S>> {
        self.cells.get(&(fingerprint.to_vec(), remaining))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Vec<Counts>, usize), &Decision<S>)> {
        self.cells.iter()
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Upper bound on the memo cells reachable from one root with `horizon`
/// slots when `informative` of the `num_channels` channels carry
/// information.
pub fn state_count(num_channels: usize, informative: usize, horizon: usize) -> u128 {
    let (h, m) = (horizon as u128, informative as u128);
    if informative == num_channels {
        binomial(h + 2 * m, 2 * m)
    } else {
        binomial(h + 2 * m + 1, 2 * m + 1)
    }
}

/// Backward-induction solver for one prior family. All beliefs passed to
/// one solver must descend from the same prior, since the memo is keyed on
/// counts relative to it.
#[derive(Debug, Clone)]
pub struct DpSolver<S> {
    num_channels: usize,
    bandwidth: S,
    cell_budget: u128,
    cache: ValueCache<S>,
}

impl<S: Scalar> DpSolver<S> {
    pub fn new(num_channels: usize, bandwidth: S) -> Self {
        Self {
            num_channels,
            bandwidth,
            cell_budget: DEFAULT_CELL_BUDGET,
            cache: ValueCache::default(),
        }
    }

    pub fn with_cell_budget(mut self, cells: u128) -> Self {
        self.cell_budget = cells;
        self
    }

    pub fn cache(&self) -> &ValueCache<S> {
        &self.cache
    }

    pub fn bandwidth(&self) -> &S {
        &self.bandwidth
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    /// Refuses instances whose memo table would not fit the budget.
    pub fn check_budget<B: Belief<S>>(&self, belief: &B, horizon: usize) -> Result<u128, DpError> {
        self.check_dims(belief)?;
        let cells = state_count(self.num_channels, belief.informative_channels(), horizon);
        if cells > self.cell_budget {
            return Err(DpError::BudgetExceeded {
                cells,
                budget: self.cell_budget,
            });
        }
        Ok(cells)
    }

    fn check_dims<B: Belief<S>>(&self, belief: &B) -> Result<(), DpError> {
        if belief.num_channels() != self.num_channels {
            return Err(DpError::DimensionMismatch {
                expected: self.num_channels,
                found: belief.num_channels(),
            });
        }
        Ok(())
    }

    pub fn optimal_value<B: Belief<S>>(
        &mut self,
        belief: &B,
        horizon: usize,
    ) -> Result<Decision<S>, DpError> {
        if let Some(hit) = self.cache.get(&belief.fingerprint(), horizon) {
            return Ok(hit.clone());
        }
        self.check_budget(belief, horizon)?;
        self.solve(belief, horizon)
    }

    pub fn optimal_action<B: Belief<S>>(
        &mut self,
        belief: &B,
        remaining: usize,
    ) -> Result<usize, DpError> {
        if remaining == 0 {
            return Err(DpError::NoSlotsLeft);
        }
        Ok(self
            .optimal_value(belief, remaining)?
            .channel
            .expect("positive horizon has an action"))
    }

    /// One-step expansion for a fixed first channel: the expectation inside
    /// the max of the recursion.
    pub fn q_value<B: Belief<S>>(
        &mut self,
        belief: &B,
        horizon: usize,
        channel: usize,
    ) -> Result<S, DpError> {
        if horizon == 0 {
            return Err(DpError::NoSlotsLeft);
        }
        if channel == 0 || channel > self.num_channels {
            return Err(DpError::ChannelOutOfRange {
                channel,
                num_channels: self.num_channels,
            });
        }
        self.check_budget(belief, horizon)?;
        self.expand(belief, horizon, channel)
    }

    /// Decision for a state already in the table, without solving.
    pub fn lookup<B: Belief<S>>(&self, belief: &B, remaining: usize) -> Option<&Decision<S>> {
        self.cache.get(&belief.fingerprint(), remaining)
    }

    fn expand<B: Belief<S>>(
        &mut self,
        belief: &B,
        horizon: usize,
        channel: usize,
    ) -> Result<S, DpError> {
        let p = belief.predictive_free_probability(channel);
        let mut value = S::zero();
        if p > S::zero() {
            let next = self.solve(&belief.update(channel, true)?, horizon - 1)?;
            value = value + p.clone() * (self.bandwidth.clone() + next.value);
        }
        if p < S::one() {
            let next = self.solve(&belief.update(channel, false)?, horizon - 1)?;
            value = value + (S::one() - p) * next.value;
        }
        Ok(value)
    }

    fn solve<B: Belief<S>>(&mut self, belief: &B, horizon: usize) -> Result<Decision<S>, DpError> {
        if horizon == 0 {
            return Ok(Decision {
                value: S::zero(),
                channel: None,
            });
        }
        let key = (belief.fingerprint(), horizon);
        if let Some(hit) = self.cache.cells.get(&key) {
            return Ok(hit.clone());
        }
        let mut best: Option<(S, usize)> = None;
        for channel in 1..=self.num_channels {
            let q = self.expand(belief, horizon, channel)?;
            match &best {
                Some((v, _)) if !(q > *v) => {}
                _ => best = Some((q, channel)),
            }
        }
        let (value, channel) = best.expect("at least one channel");
        let decision = Decision {
            value,
            channel: Some(channel),
        };
        self.cache.cells.insert(key, decision.clone());
        Ok(decision)
    }
}

/// Plays the optimal policy through one block: at each slot pick the
/// argmax for the remaining horizon, sense, update.
pub fn run_optimal_policy<S: Scalar, B: Belief<S>>(
    solver: &mut DpSolver<S>,
    prior: &B,
    block: &Realization,
) -> Result<SensingHistory, DpError> {
    solver.check_dims(prior)?;
    if block.num_channels() != solver.num_channels {
        return Err(DpError::DimensionMismatch {
            expected: solver.num_channels,
            found: block.num_channels(),
        });
    }
    let horizon = block.horizon();
    solver.optimal_value(prior, horizon)?;
    let mut belief = prior.clone();
    let mut sensor = block.sensor();
    let mut history = SensingHistory::new(horizon);
    for slot in 1..=horizon {
        let channel = solver.optimal_action(&belief, horizon - slot + 1)?;
        let outcome = sensor.sense(slot, channel)?;
        history.push(outcome)?;
        belief = belief.update(channel, outcome.free)?;
    }
    Ok(history)
}
