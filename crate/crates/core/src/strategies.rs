//! Sensing policies behind one choose/observe contract.
//!
//! A strategy is reset at the start of each block, then for every slot
//! `j = 1..=T` the driver calls `choose(j)`, senses the returned channel and
//! feeds the outcome back through `observe`. Every argmax breaks ties toward
//! the lowest channel index.

use std::sync::Arc;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{Belief, BeliefError};
use crate::dp::{DpError, DpSolver};
use crate::env::{ChannelParams, EnvError, Realization, SensingHistory, SensingOutcome};
use crate::scalar::{argmax_first, Real, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("strategy built for {expected} channels, block has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Dp(#[from] DpError),
}

pub trait Strategy<S: Scalar = f64>: Send {
    fn name(&self) -> &'static str;

    /// Prepares for a new block. The genie is the only policy that reads
    /// `params.theta()`.
    fn reset(&mut self, params: &ChannelParams<S>) -> Result<(), StrategyError>;

    /// Channel (1-based) to sense in `slot` (1-based).
    fn choose(&mut self, slot: usize) -> usize;

    fn observe(&mut self, outcome: SensingOutcome) -> Result<(), StrategyError>;
}

/// Runs a reset strategy through one block.
pub fn run_strategy<S: Scalar, T: Strategy<S> + ?Sized>(
    strategy: &mut T,
    params: &ChannelParams<S>,
    block: &Realization,
) -> Result<SensingHistory, StrategyError> {
    if block.num_channels() != params.num_channels() {
        return Err(StrategyError::DimensionMismatch {
            expected: params.num_channels(),
            found: block.num_channels(),
        });
    }
    let mut sensor = block.sensor();
    let mut history = SensingHistory::new(block.horizon());
    for slot in 1..=block.horizon() {
        let channel = strategy.choose(slot);
        let outcome = sensor.sense(slot, channel)?;
        history.push(outcome)?;
        strategy.observe(outcome)?;
    }
    Ok(history)
}

pub fn genie_choose<S: PartialOrd>(theta: &[S]) -> usize {
    argmax_first(theta).expect("at least one channel") + 1
}

pub fn random_choose<R: Rng + ?Sized>(rng: &mut R, num_channels: usize) -> usize {
    rng.random_range(1..=num_channels)
}

pub fn myopic_choose<S: Scalar, B: Belief<S>>(belief: &B) -> usize {
    let means: Vec<S> = (1..=belief.num_channels())
        .map(|i| belief.posterior_mean(i))
        .collect();
    argmax_first(&means).expect("at least one channel") + 1
}

/// Knows theta; the loss baseline.
#[derive(Debug, Clone, Default)]
pub struct Genie {
    best: usize,
}

impl<S: Scalar> Strategy<S> for Genie {
    fn name(&self) -> &'static str {
        "genie"
    }

    fn reset(&mut self, params: &ChannelParams<S>) -> Result<(), StrategyError> {
        self.best = genie_choose(params.theta());
        Ok(())
    }

    fn choose(&mut self, _slot: usize) -> usize {
        self.best
    }

    fn observe(&mut self, _outcome: SensingOutcome) -> Result<(), StrategyError> {
        Ok(())
    }
}

/// Uniformly random channel every slot.
#[derive(Debug, Clone)]
pub struct RandomChoice<R> {
    rng: R,
    num_channels: usize,
}

impl<R: Rng> RandomChoice<R> {
    pub fn new(rng: R) -> Self {
        Self {
            rng,
            num_channels: 1,
        }
    }
}

impl<S: Scalar, R: Rng + Send> Strategy<S> for RandomChoice<R> {
    fn name(&self) -> &'static str {
        "random"
    }

    fn reset(&mut self, params: &ChannelParams<S>) -> Result<(), StrategyError> {
        self.num_channels = params.num_channels();
        Ok(())
    }

    fn choose(&mut self, _slot: usize) -> usize {
        random_choose(&mut self.rng, self.num_channels)
    }

    fn observe(&mut self, _outcome: SensingOutcome) -> Result<(), StrategyError> {
        Ok(())
    }
}

/// Greedy on the posterior mean.
#[derive(Debug, Clone)]
pub struct Myopic<B> {
    prior: B,
    belief: B,
}

impl<B: Clone> Myopic<B> {
    pub fn new(prior: B) -> Self {
        Self {
            belief: prior.clone(),
            prior,
        }
    }

    pub fn belief(&self) -> &B {
        &self.belief
    }
}

impl<S: Scalar, B: Belief<S>> Strategy<S> for Myopic<B> {
    fn name(&self) -> &'static str {
        "myopic"
    }

    fn reset(&mut self, params: &ChannelParams<S>) -> Result<(), StrategyError> {
        if self.prior.num_channels() != params.num_channels() {
            return Err(StrategyError::DimensionMismatch {
                expected: self.prior.num_channels(),
                found: params.num_channels(),
            });
        }
        self.belief = self.prior.clone();
        Ok(())
    }

    fn choose(&mut self, _slot: usize) -> usize {
        myopic_choose(&self.belief)
    }

    fn observe(&mut self, outcome: SensingOutcome) -> Result<(), StrategyError> {
        self.belief = self.belief.update(outcome.channel, outcome.free)?;
        Ok(())
    }
}

/// What stay-with-winner does after a busy slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchingRule {
    /// Next higher index, wrapping to 1.
    #[default]
    RoundRobin,
    /// Uniform over the other channels.
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WinnerState {
    pub num_channels: usize,
    pub last: Option<SensingOutcome>,
}

pub fn stay_with_winner_choose<R: Rng + ?Sized>(
    state: &WinnerState,
    rule: SwitchingRule,
    rng: &mut R,
) -> usize {
    let n = state.num_channels;
    match state.last {
        None => random_choose(rng, n),
        Some(last) if last.free || n == 1 => last.channel,
        Some(last) => match rule {
            SwitchingRule::RoundRobin => last.channel % n + 1,
            SwitchingRule::UniformRandom => {
                let k = rng.random_range(1..n);
                if k >= last.channel {
                    k + 1
                } else {
                    k
                }
            }
        },
    }
}

/// Repeat after a free slot, move on after a busy one.
#[derive(Debug, Clone)]
pub struct StayWithWinner<R> {
    rng: R,
    rule: SwitchingRule,
    state: WinnerState,
}

impl<R: Rng> StayWithWinner<R> {
    pub fn new(rng: R, rule: SwitchingRule) -> Self {
        Self {
            rng,
            rule,
            state: WinnerState::default(),
        }
    }
}

impl<S: Scalar, R: Rng + Send> Strategy<S> for StayWithWinner<R> {
    fn name(&self) -> &'static str {
        "stay-with-winner"
    }

    fn reset(&mut self, params: &ChannelParams<S>) -> Result<(), StrategyError> {
        self.state = WinnerState {
            num_channels: params.num_channels(),
            last: None,
        };
        Ok(())
    }

    fn choose(&mut self, _slot: usize) -> usize {
        stay_with_winner_choose(&self.state, self.rule, &mut self.rng)
    }

    fn observe(&mut self, outcome: SensingOutcome) -> Result<(), StrategyError> {
        self.state.last = Some(outcome);
        Ok(())
    }
}

/// Free counts `x` and sense counts `y` per channel.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexState {
    pub x: Vec<u64>,
    pub y: Vec<u64>,
    pub observed: u64,
}

impl IndexState {
    pub fn new(num_channels: usize) -> Self {
        Self {
            x: vec![0; num_channels],
            y: vec![0; num_channels],
            observed: 0,
        }
    }

    pub fn num_channels(&self) -> usize {
        self.y.len()
    }

    pub fn record(&mut self, channel: usize, free: bool) {
        self.y[channel - 1] += 1;
        self.x[channel - 1] += u64::from(free);
        self.observed += 1;
    }

    /// `x_i / y_i + sqrt(2 ln j / y_i)`. Infinite for an unsensed channel.
    pub fn index<F: Real>(&self, channel: usize, slot: usize) -> F {
        let y = self.y[channel - 1];
        if y == 0 {
            return F::infinity();
        }
        let y_f = <F as num_traits::NumCast>::from(y).unwrap();
        let x_f = <F as num_traits::NumCast>::from(self.x[channel - 1]).unwrap();
        let j = <F as num_traits::NumCast>::from(slot).unwrap();
        let two = F::one() + F::one();
        x_f / y_f + Float::sqrt(two * Float::ln(j) / y_f)
    }
}

/// Slots `1..=N` sense channels in order; afterwards the largest index wins.
pub fn single_index_choose<F: Real>(state: &IndexState, slot: usize) -> usize {
    let n = state.num_channels();
    if slot <= n {
        return slot;
    }
    let indices: Vec<F> = (1..=n).map(|i| state.index::<F>(i, slot)).collect();
    argmax_first(&indices).expect("at least one channel") + 1
}

/// Upper-confidence single-index rule, evaluated in precision `F`.
#[derive(Debug, Clone, Default)]
pub struct SingleIndex<F = f64> {
    state: IndexState,
    _precision: std::marker::PhantomData<F>,
}

impl<F: Real> SingleIndex<F> {
    pub fn new() -> Self {
        Self {
            state: IndexState::default(),
            _precision: std::marker::PhantomData,
        }
    }

    pub fn state(&self) -> &IndexState {
        &self.state
    }
}

impl<S: Scalar, F: Real> Strategy<S> for SingleIndex<F> {
    fn name(&self) -> &'static str {
        "single-index"
    }

    fn reset(&mut self, params: &ChannelParams<S>) -> Result<(), StrategyError> {
        self.state = IndexState::new(params.num_channels());
        Ok(())
    }

    fn choose(&mut self, slot: usize) -> usize {
        single_index_choose::<F>(&self.state, slot)
    }

    fn observe(&mut self, outcome: SensingOutcome) -> Result<(), StrategyError> {
        self.state.record(outcome.channel, outcome.free);
        Ok(())
    }
}

/// Bayes-optimal policy backed by a solved value table. The table is shared
/// read-only between instances; a reset to a different horizon solves a
/// fresh one.
#[derive(Debug, Clone)]
pub struct DpPolicy<S, B> {
    solver: Arc<DpSolver<S>>,
    prior: B,
    belief: B,
    horizon: usize,
    cell_budget: u128,
}

impl<S: Scalar, B: Belief<S>> DpPolicy<S, B> {
    pub fn solve(
        prior: B,
        bandwidth: S,
        horizon: usize,
        cell_budget: u128,
    ) -> Result<Self, DpError> {
        let mut solver =
            DpSolver::new(prior.num_channels(), bandwidth).with_cell_budget(cell_budget);
        solver.optimal_value(&prior, horizon)?;
        Ok(Self {
            solver: Arc::new(solver),
            belief: prior.clone(),
            prior,
            horizon,
            cell_budget,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn solver(&self) -> &DpSolver<S> {
        &self.solver
    }
}

impl<S: Scalar, B: Belief<S>> Strategy<S> for DpPolicy<S, B> {
    fn name(&self) -> &'static str {
        "dp-optimal"
    }

    fn reset(&mut self, params: &ChannelParams<S>) -> Result<(), StrategyError> {
        if self.prior.num_channels() != params.num_channels() {
            return Err(StrategyError::DimensionMismatch {
                expected: self.prior.num_channels(),
                found: params.num_channels(),
            });
        }
        if params.horizon() != self.horizon || params.bandwidth() != self.solver.bandwidth() {
            *self = Self::solve(
                self.prior.clone(),
                params.bandwidth().clone(),
                params.horizon(),
                self.cell_budget,
            )?;
        }
        self.belief = self.prior.clone();
        Ok(())
    }

    fn choose(&mut self, slot: usize) -> usize {
        let remaining = self.horizon + 1 - slot;
        self.solver
            .lookup(&self.belief, remaining)
            .and_then(|d| d.channel)
            .expect("every reachable state is in the solved table")
    }

    fn observe(&mut self, outcome: SensingOutcome) -> Result<(), StrategyError> {
        self.belief = self.belief.update(outcome.channel, outcome.free)?;
        Ok(())
    }
}
