use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::env::{sample_block, ChannelParams};
use crate::harness::config::{Environment, ExperimentConfig, ValidatedConfig};
use crate::harness::HarnessError;
use crate::metrics::{checkpoint_slots, empirical_loss, lower_bound_constant, RegretRecord};
use crate::registry::Prepared;
use crate::rng::{domain_of, stream_rng, subdomain, DOMAIN_CHANNELS, DOMAIN_THETA};
use crate::strategies::run_strategy;

/// One aggregate CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub strategy: String,
    pub theta_id: String,
    pub horizon: usize,
    pub checkpoint: usize,
    pub trials: usize,
    pub mean_loss: f64,
    pub ci_half_width: Option<f64>,
    pub lower_bound_at_checkpoint: Option<f64>,
}

/// Aggregated output of one experiment.
#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    /// Per `(theta_id, strategy)`, the lower-bound constant (mean over
    /// blocks when theta is drawn). `None` where undefined.
    pub lower_bounds: Vec<((String, String), Option<f64>)>,
    pub wall_clock: Vec<(String, Duration)>,
    /// Checkpoint monotonicity violations beyond three half-widths.
    pub warnings: Vec<String>,
}

impl ResultTable {
    pub fn group(
        &self,
        theta_id: &str,
        strategy: &str,
        horizon: usize,
    ) -> impl Iterator<Item = &ResultRow> {
        let (t, s) = (theta_id.to_string(), strategy.to_string());
        self.rows
            .iter()
            .filter(move |r| r.theta_id == t && r.strategy == s && r.horizon == horizon)
    }

    pub fn final_row(&self, theta_id: &str, strategy: &str, horizon: usize) -> Option<&ResultRow> {
        self.group(theta_id, strategy, horizon)
            .find(|r| r.checkpoint == horizon)
    }
}

struct TrialOutput {
    records: Vec<RegretRecord<f64>>,
    lower_bound: Option<f64>,
    elapsed: Vec<Duration>,
}

/// Runs on the ambient rayon pool (default: available parallelism).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    run_experiment_with_threads(config, None)
}

/// Runs with a dedicated pool of `threads` workers when given. Output does
/// not depend on the thread count.
pub fn run_experiment_with_threads(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ResultTable, HarnessError> {
    let validated = config.validate()?;
    let prepared = prepare(&validated)?;
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
            pool.install(|| simulate(&validated, &prepared))
        }
        None => simulate(&validated, &prepared),
    }
}

// Indexed [strategy][horizon].
fn prepare(v: &ValidatedConfig) -> Result<Vec<Vec<Prepared>>, HarnessError> {
    v.strategies
        .iter()
        .map(|&kind| {
            v.horizons
                .iter()
                .map(|&horizon| {
                    Prepared::new(kind, &v.settings, v.bandwidth, horizon)
                        .map_err(|source| HarnessError::Budget { horizon, source })
                })
                .collect()
        })
        .collect()
}

fn run_trial(
    v: &ValidatedConfig,
    prepared: &[Vec<Prepared>],
    env_index: usize,
    env: &Environment,
    horizon_index: usize,
    trial: u64,
) -> Result<TrialOutput, HarnessError> {
    let horizon = v.horizons[horizon_index];
    let env_domain = |base: u64| subdomain(subdomain(base, env_index as u64), horizon as u64);
    let theta = match env {
        Environment::Fixed { theta, .. } => theta.clone(),
        Environment::Prior { prior, .. } => prior.draw_theta(&mut stream_rng(
            v.master_seed,
            env_domain(DOMAIN_THETA),
            trial,
        )),
    };
    let params = ChannelParams::new(theta, v.bandwidth, horizon)
        .map_err(|e| HarnessError::Runtime(e.into()))?;
    let block = sample_block(
        &params,
        &mut stream_rng(v.master_seed, env_domain(DOMAIN_CHANNELS), trial),
    );
    let slots = checkpoint_slots(horizon);
    let mut records = Vec::with_capacity(v.strategies.len());
    let mut elapsed = Vec::with_capacity(v.strategies.len());
    for (k, kind) in v.strategies.iter().enumerate() {
        let start = Instant::now();
        let rng = stream_rng(v.master_seed, env_domain(domain_of(kind.name())), trial);
        let mut strategy = prepared[k][horizon_index].build(rng);
        strategy.reset(&params)?;
        let history = run_strategy(strategy.as_mut(), &params, &block)?;
        records.push(RegretRecord::from_history(
            kind.name(),
            trial,
            params.theta(),
            v.bandwidth,
            &history,
            &slots,
            Some(&block),
        ));
        elapsed.push(start.elapsed());
    }
    let lower_bound = lower_bound_constant(params.theta(), v.bandwidth).ok();
    Ok(TrialOutput {
        records,
        lower_bound,
        elapsed,
    })
}

fn simulate(v: &ValidatedConfig, prepared: &[Vec<Prepared>]) -> Result<ResultTable, HarnessError> {
    let mut table = ResultTable::default();
    let mut wall = vec![Duration::ZERO; v.strategies.len()];

    for (env_index, env) in v.environments.iter().enumerate() {
        // [horizon][strategy] -> records sorted by trial.
        let mut per_horizon: Vec<Vec<Vec<RegretRecord<f64>>>> =
            Vec::with_capacity(v.horizons.len());
        let mut env_bounds = Vec::new();
        for horizon_index in 0..v.horizons.len() {
            let outputs: Vec<TrialOutput> = (0..v.trials)
                .into_par_iter()
                .map(|trial| run_trial(v, prepared, env_index, env, horizon_index, trial))
                .collect::<Result<_, _>>()?;
            let mut by_strategy: Vec<Vec<RegretRecord<f64>>> =
                vec![Vec::with_capacity(outputs.len()); v.strategies.len()];
            for out in outputs {
                for (k, (record, dt)) in out.records.into_iter().zip(out.elapsed).enumerate() {
                    by_strategy[k].push(record);
                    wall[k] += dt;
                }
                env_bounds.push(out.lower_bound);
            }
            per_horizon.push(by_strategy);
        }
        let bound = mean_bound(&env_bounds);

        for (k, kind) in v.strategies.iter().enumerate() {
            table
                .lower_bounds
                .push(((env.id().to_string(), kind.name().to_string()), bound));
            for (h, &horizon) in v.horizons.iter().enumerate() {
                let records = &per_horizon[h][k];
                let mut previous: Option<(usize, f64, f64)> = None;
                for slot in checkpoint_slots(horizon) {
                    let est =
                        empirical_loss(records, slot).expect("every record has every checkpoint");
                    let hw = est.half_width.unwrap_or(0.0);
                    if let Some((prev_slot, prev_mean, prev_hw)) = previous {
                        if est.mean < prev_mean - 3.0 * hw.max(prev_hw) {
                            table.warnings.push(format!(
                                "{} theta {} T={horizon}: mean loss drops from {prev_mean:.6} at slot {prev_slot} to {:.6} at slot {slot}",
                                kind.name(),
                                env.id(),
                                est.mean
                            ));
                        }
                    }
                    previous = Some((slot, est.mean, hw));
                    table.rows.push(ResultRow {
                        strategy: kind.name().to_string(),
                        theta_id: env.id().to_string(),
                        horizon,
                        checkpoint: slot,
                        trials: est.trials,
                        mean_loss: est.mean,
                        ci_half_width: est.half_width,
                        lower_bound_at_checkpoint: bound.map(|c| c * (slot as f64).ln()),
                    });
                }
            }
        }
    }
    table.wall_clock = v
        .strategies
        .iter()
        .map(|k| k.name().to_string())
        .zip(wall)
        .collect();
    Ok(table)
}

fn mean_bound(values: &[Option<f64>]) -> Option<f64> {
    let defined: Option<Vec<f64>> = values.iter().copied().collect();
    let defined = defined?;
    if defined.is_empty() {
        return None;
    }
    Some(crate::scalar::compensated_sum(defined.iter().copied()) / defined.len() as f64)
}
