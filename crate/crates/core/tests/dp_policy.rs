use cogmac::belief::{BetaBelief, PriorBelief};
use cogmac::dp::{run_optimal_policy, DpSolver};
use cogmac::env::{block_payoff, sample_block, ChannelParams};
use cogmac::rng::stream_rng;
use cogmac::strategies::{run_strategy, Myopic, SingleIndex, Strategy};

fn draw_block(
    prior: &PriorBelief<f64>,
    horizon: usize,
    trial: u64,
) -> (ChannelParams<f64>, cogmac::Realization) {
    let mut rng = stream_rng(99, 1, trial);
    let params = ChannelParams::new(prior.draw_theta(&mut rng), 1.0, horizon).unwrap();
    let block = sample_block(&params, &mut rng);
    (params, block)
}

#[test]
fn rollout_payoff_matches_value() {
    let prior = BetaBelief::<f64>::uniform(2);
    let mut dp = DpSolver::new(2, 1.0);
    let value = dp.optimal_value(&prior, 2).unwrap().value;
    assert!((value - 13.0 / 12.0).abs() < 1e-12);
    let draw = PriorBelief::Beta(prior.clone());
    let trials = 100_000;
    let payoffs: Vec<f64> = (0..trials)
        .map(|t| {
            let (_, block) = draw_block(&draw, 2, t);
            block_payoff(&run_optimal_policy(&mut dp, &prior, &block).unwrap(), &1.0)
        })
        .collect();
    let mean = payoffs.iter().sum::<f64>() / trials as f64;
    let var = payoffs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
    let se = (var / trials as f64).sqrt();
    assert!(
        (mean - value).abs() < 4.0 * se,
        "mean {mean} value {value} se {se}"
    );
}

#[test]
fn optimal_policy_beats_heuristics_on_average() {
    // Bayes-optimality: under theta drawn from the prior, no policy has a
    // larger expected payoff than V*.
    let prior = BetaBelief::<f64>::uniform(2);
    let draw = PriorBelief::Beta(prior.clone());
    let horizon = 12;
    let mut dp = DpSolver::new(2, 1.0);
    let value = dp.optimal_value(&prior, horizon).unwrap().value;
    let trials = 40_000;
    let (mut dp_total, mut myopic_total, mut index_total) = (0.0, 0.0, 0.0);
    for t in 0..trials {
        let (params, block) = draw_block(&draw, horizon, t);
        dp_total += block_payoff(&run_optimal_policy(&mut dp, &prior, &block).unwrap(), &1.0);
        let mut m = Myopic::new(prior.clone());
        Strategy::<f64>::reset(&mut m, &params).unwrap();
        myopic_total += block_payoff(&run_strategy(&mut m, &params, &block).unwrap(), &1.0);
        let mut s = SingleIndex::<f64>::new();
        Strategy::<f64>::reset(&mut s, &params).unwrap();
        index_total += block_payoff(&run_strategy(&mut s, &params, &block).unwrap(), &1.0);
    }
    let n = trials as f64;
    assert!(
        (dp_total / n - value).abs() < 0.05,
        "dp mean {} value {value}",
        dp_total / n
    );
    // Paired on identical blocks, so the differences are low-variance.
    assert!(dp_total >= myopic_total);
    assert!(dp_total >= index_total);
}

#[test]
fn value_bounds_and_monotonicity() {
    let prior = BetaBelief::new(vec![(2.0, 1.0), (1.0, 3.0), (1.5, 1.5)]).unwrap();
    let mut dp = DpSolver::new(3, 1.0);
    let best_mean = 2.0 / 3.0;
    let mut previous = 0.0;
    for t in 1..=6 {
        let v = dp.optimal_value(&prior, t).unwrap().value;
        assert!(v >= previous);
        assert!(v >= t as f64 * best_mean - 1e-12);
        assert!(v <= t as f64);
        previous = v;
    }
    for ((_, remaining), d) in dp.cache().iter() {
        assert!(d.value >= 0.0 && d.value <= *remaining as f64);
    }
}
