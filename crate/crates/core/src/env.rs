//! Primary network model: `N` independent Bernoulli channels held fixed for
//! a block of `T` slots.
//!
//! Slots and channels are 1-indexed at every public boundary.

use rand::Rng;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("no channels given")]
    NoChannels,
    #[error("channel {channel} has free probability outside [0, 1]")]
    ProbabilityOutOfRange { channel: usize },
    #[error("bandwidth must be positive")]
    NonPositiveBandwidth,
    #[error("horizon must be at least one slot")]
    ZeroHorizon,
    #[error("slot {slot} outside 1..={horizon}")]
    SlotOutOfRange { slot: usize, horizon: usize },
    #[error("channel {channel} outside 1..={num_channels}")]
    ChannelOutOfRange { channel: usize, num_channels: usize },
    #[error("slot {slot} already sensed (last sensed slot {last})")]
    SlotAlreadySensed { slot: usize, last: usize },
    #[error("history already holds {horizon} outcomes")]
    HistoryFull { horizon: usize },
}

/// Hidden availability vector and block geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams<S> {
    theta: Vec<S>,
    bandwidth: S,
    horizon: usize,
}

impl<S: Scalar> ChannelParams<S> {
    pub fn new(theta: Vec<S>, bandwidth: S, horizon: usize) -> Result<Self, EnvError> {
        if theta.is_empty() {
            return Err(EnvError::NoChannels);
        }
        for (i, p) in theta.iter().enumerate() {
            if !(*p >= S::zero() && *p <= S::one()) {
                return Err(EnvError::ProbabilityOutOfRange { channel: i + 1 });
            }
        }
        if !(bandwidth > S::zero()) {
            return Err(EnvError::NonPositiveBandwidth);
        }
        if horizon == 0 {
            return Err(EnvError::ZeroHorizon);
        }
        Ok(Self {
            theta,
            bandwidth,
            horizon,
        })
    }

    pub fn theta(&self) -> &[S] {
        &self.theta
    }

    pub fn bandwidth(&self) -> &S {
        &self.bandwidth
    }

    pub fn num_channels(&self) -> usize {
        self.theta.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Same channels and bandwidth over a different block length.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self, EnvError> {
        Self::new(self.theta.clone(), self.bandwidth.clone(), horizon)
    }
}

/// One sensing action and its result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensingOutcome {
    pub slot: usize,
    pub channel: usize,
    pub free: bool,
}

/// Causal record of the block so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensingHistory {
    horizon: usize,
    outcomes: Vec<SensingOutcome>,
}

impl SensingHistory {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            outcomes: Vec::with_capacity(horizon.min(1 << 20)),
        }
    }

    pub fn push(&mut self, outcome: SensingOutcome) -> Result<(), EnvError> {
        if self.outcomes.len() >= self.horizon {
            return Err(EnvError::HistoryFull {
                horizon: self.horizon,
            });
        }
        if let Some(last) = self.outcomes.last() {
            if outcome.slot <= last.slot {
                return Err(EnvError::SlotAlreadySensed {
                    slot: outcome.slot,
                    last: last.slot,
                });
            }
        }
        self.outcomes.push(outcome);
        Ok(())
    }

    pub fn outcomes(&self) -> &[SensingOutcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_complete(&self) -> bool {
        self.outcomes.len() == self.horizon
    }

    pub fn free_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.free).count()
    }
}

/// Bits delivered by a (possibly partial) history.
pub fn block_payoff<S: Scalar>(history: &SensingHistory, bandwidth: &S) -> S {
    bandwidth.clone() * S::from_count(history.free_count() as u64)
}

/// Pre-drawn `T x N` availability matrix for one block. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    horizon: usize,
    num_channels: usize,
    free: Vec<bool>,
}

impl Realization {
    /// Builds a realization from explicit rows (`rows[j-1][i-1]` is slot `j`,
    /// channel `i`). Mostly useful in tests.
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self, EnvError> {
        let horizon = rows.len();
        if horizon == 0 {
            return Err(EnvError::ZeroHorizon);
        }
        let num_channels = rows[0].len();
        if num_channels == 0 {
            return Err(EnvError::NoChannels);
        }
        let mut free = Vec::with_capacity(horizon * num_channels);
        for row in rows {
            assert_eq!(row.len(), num_channels, "ragged realization rows");
            free.extend(row);
        }
        Ok(Self {
            horizon,
            num_channels,
            free,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    fn check(&self, slot: usize, channel: usize) -> Result<(), EnvError> {
        if slot == 0 || slot > self.horizon {
            return Err(EnvError::SlotOutOfRange {
                slot,
                horizon: self.horizon,
            });
        }
        if channel == 0 || channel > self.num_channels {
            return Err(EnvError::ChannelOutOfRange {
                channel,
                num_channels: self.num_channels,
            });
        }
        Ok(())
    }

    /// Raw lookup of `Z_channel(slot)`, bypassing the one-action-per-slot rule.
    pub fn is_free(&self, slot: usize, channel: usize) -> Result<bool, EnvError> {
        self.check(slot, channel)?;
        Ok(self.free[(slot - 1) * self.num_channels + (channel - 1)])
    }

    /// Column of availabilities for one channel.
    pub fn channel_column(&self, channel: usize) -> Result<Vec<bool>, EnvError> {
        self.check(1, channel)?;
        Ok((0..self.horizon)
            .map(|j| self.free[j * self.num_channels + channel - 1])
            .collect())
    }

    /// Opens a sensing session. Each session may sense each slot at most
    /// once, in increasing slot order.
    pub fn sensor(&self) -> Sensor<'_> {
        Sensor {
            realization: self,
            last_slot: 0,
        }
    }
}

/// Draws every `Z_i(j)` independently as Bernoulli(`theta[i]`).
pub fn sample_block<S: Scalar, R: Rng + ?Sized>(
    params: &ChannelParams<S>,
    rng: &mut R,
) -> Realization {
    let probs: Vec<f64> = params
        .theta()
        .iter()
        .map(|p| p.to_f64_lossy().clamp(0.0, 1.0))
        .collect();
    let horizon = params.horizon();
    let mut free = Vec::with_capacity(horizon * probs.len());
    for _ in 0..horizon {
        for &p in &probs {
            free.push(rng.random_bool(p));
        }
    }
    Realization {
        horizon,
        num_channels: probs.len(),
        free,
    }
}

/// Single-owner cursor over a shared realization.
#[derive(Debug)]
pub struct Sensor<'a> {
    realization: &'a Realization,
    last_slot: usize,
}

impl Sensor<'_> {
    pub fn sense(&mut self, slot: usize, channel: usize) -> Result<SensingOutcome, EnvError> {
        let free = self.realization.is_free(slot, channel)?;
        if slot <= self.last_slot {
            return Err(EnvError::SlotAlreadySensed {
                slot,
                last: self.last_slot,
            });
        }
        self.last_slot = slot;
        Ok(SensingOutcome {
            slot,
            channel,
            free,
        })
    }
}
