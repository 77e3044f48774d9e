//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::belief::{BetaBelief, GridBelief, PriorBelief};
use crate::dp::DEFAULT_CELL_BUDGET;
use crate::env::ChannelParams;
use crate::harness::HarnessError;
use crate::registry::{StrategyKind, StrategySettings};
use crate::strategies::SwitchingRule;

/// One vector, or several scenarios run side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Single(Vec<f64>),
    Many(Vec<Vec<f64>>),
}

impl ThetaSpec {
    pub fn vectors(&self) -> Vec<Vec<f64>> {
        match self {
            ThetaSpec::Single(v) => vec![v.clone()],
            ThetaSpec::Many(vs) => vs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorSpec {
    Beta(Vec<[f64; 2]>),
    Grid(GridSpec),
}

impl PriorSpec {
    pub fn to_belief(&self) -> Result<PriorBelief<f64>, HarnessError> {
        let belief = match self {
            PriorSpec::Beta(params) => {
                BetaBelief::new(params.iter().map(|p| (p[0], p[1])).collect())
                    .map(PriorBelief::Beta)
            }
            PriorSpec::Grid(g) => {
                GridBelief::new(g.points.clone(), g.weights.clone()).map(PriorBelief::Grid)
            }
        };
        belief.map_err(|e| HarnessError::Config(format!("prior: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Fixed availability vector(s). Exclusive with `prior`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaSpec>,
    /// Draw theta per block from this prior; Bayesian policies also use it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    pub bandwidth: f64,
    pub horizons: Vec<usize>,
    pub strategies: Vec<String>,
    pub trials: u64,
    pub master_seed: u64,
    pub output: PathBuf,
    pub dp_cell_budget: u64,
    pub switching_rule: SwitchingRule,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            theta: Some(ThetaSpec::Single(vec![0.9, 0.5])),
            prior: None,
            bandwidth: 1.0,
            horizons: vec![1_000, 10_000, 100_000],
            strategies: [
                "genie",
                "random",
                "myopic",
                "stay-with-winner",
                "single-index",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            trials: 1_000,
            master_seed: 0,
            output: PathBuf::from("results.csv"),
            dp_cell_budget: DEFAULT_CELL_BUDGET as u64,
            switching_rule: SwitchingRule::RoundRobin,
        }
    }
}

/// Where the availability vector of each block comes from.
#[derive(Debug, Clone)]
pub enum Environment {
    Fixed { id: String, theta: Vec<f64> },
    Prior { id: String, prior: PriorBelief<f64> },
}

impl Environment {
    pub fn id(&self) -> &str {
        match self {
            Environment::Fixed { id, .. } | Environment::Prior { id, .. } => id,
        }
    }
}

/// Config after every check that can run without simulating.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub environments: Vec<Environment>,
    pub num_channels: usize,
    pub strategies: Vec<StrategyKind>,
    pub settings: StrategySettings,
    pub bandwidth: f64,
    pub horizons: Vec<usize>,
    pub trials: u64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<ValidatedConfig, HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.horizons.is_empty() {
            return bad("horizons must not be empty".into());
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return bad("horizons must be strictly increasing".into());
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad("bandwidth must be positive".into());
        }
        if self.strategies.is_empty() {
            return bad("strategies must not be empty".into());
        }
        let mut strategies = Vec::with_capacity(self.strategies.len());
        for name in &self.strategies {
            let kind: StrategyKind = name.parse().map_err(HarnessError::UnknownStrategy)?;
            if strategies.contains(&kind) {
                return bad(format!("strategy `{name}` listed twice"));
            }
            strategies.push(kind);
        }

        let (environments, num_channels, policy_prior) = match (&self.theta, &self.prior) {
            (Some(_), Some(_)) => return bad("give exactly one of `theta` and `prior`".into()),
            (None, None) => return bad("one of `theta` or `prior` is required".into()),
            (Some(spec), None) => {
                let vectors = spec.vectors();
                if vectors.is_empty() {
                    return bad("theta must not be empty".into());
                }
                let n = vectors[0].len();
                let mut envs = Vec::with_capacity(vectors.len());
                for (k, theta) in vectors.into_iter().enumerate() {
                    if theta.len() != n {
                        return bad(
                            "all theta vectors must have the same number of channels".into()
                        );
                    }
                    ChannelParams::new(theta.clone(), self.bandwidth, self.horizons[0])
                        .map_err(|e| HarnessError::Config(format!("theta[{k}]: {e}")))?;
                    envs.push(Environment::Fixed {
                        id: k.to_string(),
                        theta,
                    });
                }
                (envs, n, PriorBelief::Beta(BetaBelief::uniform(n)))
            }
            (None, Some(spec)) => {
                let prior = spec.to_belief()?;
                let n = crate::belief::Belief::num_channels(&prior);
                (
                    vec![Environment::Prior {
                        id: "prior".into(),
                        prior: prior.clone(),
                    }],
                    n,
                    prior,
                )
            }
        };

        let settings = StrategySettings {
            switching_rule: self.switching_rule,
            prior: policy_prior,
            dp_cell_budget: u128::from(self.dp_cell_budget),
        };
        Ok(ValidatedConfig {
            environments,
            num_channels,
            strategies,
            settings,
            bandwidth: self.bandwidth,
            horizons: self.horizons.clone(),
            trials: self.trials,
            master_seed: self.master_seed,
        })
    }
}
