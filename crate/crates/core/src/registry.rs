//! Name-keyed construction of `f64` strategies for experiment runs.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{BetaBelief, PriorBelief};
use crate::dp::{DpError, DEFAULT_CELL_BUDGET};
use crate::strategies::{
    DpPolicy, Genie, Myopic, RandomChoice, SingleIndex, StayWithWinner, Strategy, SwitchingRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Genie,
    Random,
    Myopic,
    StayWithWinner,
    SingleIndex,
    DpOptimal,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Genie,
        StrategyKind::Random,
        StrategyKind::Myopic,
        StrategyKind::StayWithWinner,
        StrategyKind::SingleIndex,
        StrategyKind::DpOptimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Genie => "genie",
            StrategyKind::Random => "random",
            StrategyKind::Myopic => "myopic",
            StrategyKind::StayWithWinner => "stay-with-winner",
            StrategyKind::SingleIndex => "single-index",
            StrategyKind::DpOptimal => "dp-optimal",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            StrategyKind::Genie => "knows theta, always senses the best channel",
            StrategyKind::Random => "uniformly random channel each slot",
            StrategyKind::Myopic => "largest posterior mean (Bayesian greedy)",
            StrategyKind::StayWithWinner => "repeat after free, switch after busy",
            StrategyKind::SingleIndex => {
                "largest x/y + sqrt(2 ln j / y) after sensing each channel once"
            }
            StrategyKind::DpOptimal => "exact Bayes-optimal policy by backward induction",
        }
    }

    pub fn uses_rng(self) -> bool {
        matches!(self, StrategyKind::Random | StrategyKind::StayWithWinner)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStrategy(pub String);

impl fmt::Display for UnknownStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown strategy `{}`", self.0)
    }
}

impl std::error::Error for UnknownStrategy {}

impl FromStr for StrategyKind {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// Knobs shared by every strategy in a run.
#[derive(Debug, Clone)]
pub struct StrategySettings {
    pub switching_rule: SwitchingRule,
    /// Prior handed to the Bayesian policies.
    pub prior: PriorBelief<f64>,
    pub dp_cell_budget: u128,
}

impl StrategySettings {
    pub fn uniform(num_channels: usize) -> Self {
        Self {
            switching_rule: SwitchingRule::default(),
            prior: PriorBelief::Beta(BetaBelief::uniform(num_channels)),
            dp_cell_budget: DEFAULT_CELL_BUDGET,
        }
    }
}

/// A strategy ready to be instantiated per trial. For `dp-optimal` this
/// holds the solved table.
#[derive(Debug, Clone)]
pub struct Prepared {
    kind: StrategyKind,
    settings: StrategySettings,
    dp: Option<DpPolicy<f64, PriorBelief<f64>>>,
}

impl Prepared {
    pub fn new(
        kind: StrategyKind,
        settings: &StrategySettings,
        bandwidth: f64,
        horizon: usize,
    ) -> Result<Self, DpError> {
        let dp = match kind {
            StrategyKind::DpOptimal => Some(DpPolicy::solve(
                settings.prior.clone(),
                bandwidth,
                horizon,
                settings.dp_cell_budget,
            )?),
            _ => None,
        };
        Ok(Self {
            kind,
            settings: settings.clone(),
            dp,
        })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    /// Fresh instance; `rng` is used only by randomized policies.
    pub fn build(&self, rng: ChaCha8Rng) -> Box<dyn Strategy<f64>> {
        match self.kind {
            StrategyKind::Genie => Box::new(Genie::default()),
            StrategyKind::Random => Box::new(RandomChoice::new(rng)),
            StrategyKind::Myopic => Box::new(Myopic::new(self.settings.prior.clone())),
            StrategyKind::StayWithWinner => {
                Box::new(StayWithWinner::new(rng, self.settings.switching_rule))
            }
            StrategyKind::SingleIndex => Box::new(SingleIndex::<f64>::new()),
            StrategyKind::DpOptimal => Box::new(self.dp.clone().expect("solved at construction")),
        }
    }
}
