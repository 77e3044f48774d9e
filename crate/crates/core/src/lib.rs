//! Opportunistic spectrum access for a single cognitive user.
//!
//! A primary network of `N` channels, each free with probability
//! `theta_i`, is sensed one channel per slot over a block of `T` slots.
//! This crate provides the network simulator, posterior beliefs, the exact
//! Bayes-optimal policy by dynamic programming, the upper-confidence
//! single-index rule and the usual baselines, plus regret accounting
//! against a clairvoyant genie and a Monte Carlo experiment harness.
//!
//! The numerics are generic over [`Scalar`]: beliefs and the dynamic
//! program run on `f32`, `f64` or exact rationals ([`Exact`]).
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod dp;
pub mod env;
pub mod harness;
pub mod metrics;
pub mod registry;
pub mod rng;
pub mod scalar;
pub mod strategies;

pub use belief::{Belief, BeliefError, BetaBelief, GridBelief, PriorBelief};
pub use dp::{run_optimal_policy, Decision, DpError, DpSolver};
pub use env::{
    block_payoff, sample_block, ChannelParams, EnvError, Realization, SensingHistory,
    SensingOutcome,
};
pub use metrics::{expected_loss_random, kl_bernoulli, lower_bound_constant, RegretRecord};
pub use scalar::{Real, Scalar};
pub use strategies::{run_strategy, Strategy, StrategyError};

/// Exact arithmetic for the dynamic program and beliefs.
pub type Exact = num_rational::BigRational;

pub type Params = ChannelParams<f64>;
pub type ExactParams = ChannelParams<Exact>;
pub type Beta = BetaBelief<f64>;
pub type ExactBeta = BetaBelief<Exact>;
pub type Grid = GridBelief<f64>;
pub type ExactGrid = GridBelief<Exact>;
pub type Solver = DpSolver<f64>;
pub type ExactSolver = DpSolver<Exact>;
pub type Record = RegretRecord<f64>;
