//! Loss accounting against the genie, Bernoulli KL divergence, the
//! asymptotic lower-bound constant and log-horizon regret fits.

use thiserror::Error;

use crate::env::{Realization, SensingHistory};
use crate::scalar::{argmax_first, compensated_sum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum KlError {
    #[error("probability outside [0, 1]")]
    InvalidProbability,
    #[error("divergence is infinite (reference has zero mass where the other does not)")]
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LowerBoundError {
    #[error("no channels")]
    NoChannels,
    #[error("best channel is not unique: channels {channels:?} tie")]
    TiedOptimum { channels: Vec<usize> },
    #[error("best channel {channel} has availability 0 or 1; the constant is undefined")]
    DegenerateOptimum { channel: usize },
    #[error(transparent)]
    Kl(#[from] KlError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no records to aggregate")]
    Empty,
    #[error("slot {slot} is not a checkpoint of every record")]
    MissingCheckpoint { slot: usize },
    #[error("need at least 3 horizons to fit a slope, got {0}")]
    TooFewPoints(usize),
    #[error("horizons must be positive and distinct")]
    BadAbscissa,
}

fn p_ln_ratio<F: Real>(p: F, q: F) -> F {
    if p == F::zero() {
        F::zero()
    } else {
        p * (p / q).ln()
    }
}

/// `D(p || q)` in nats, with `0 ln 0 = 0`.
pub fn kl_bernoulli<F: Real>(p: F, q: F) -> Result<F, KlError> {
    let unit = |x: F| x >= F::zero() && x <= F::one();
    if !unit(p) || !unit(q) {
        return Err(KlError::InvalidProbability);
    }
    if p == q {
        return Ok(F::zero());
    }
    if q == F::zero() || q == F::one() {
        return Err(KlError::Infinite);
    }
    let d = p_ln_ratio(p, q) + p_ln_ratio(F::one() - p, F::one() - q);
    Ok(d.max(F::zero()))
}

/// `B * sum_{i != i*} (theta* - theta_i) / D(theta_i || theta*)`: the
/// coefficient of `ln T` that any consistent strategy's loss eventually
/// exceeds.
pub fn lower_bound_constant<F: Real>(theta: &[F], bandwidth: F) -> Result<F, LowerBoundError> {
    let best = argmax_first(theta).ok_or(LowerBoundError::NoChannels)?;
    let top = theta[best];
    let tied: Vec<usize> = theta
        .iter()
        .enumerate()
        .filter(|(_, &t)| t == top)
        .map(|(i, _)| i + 1)
        .collect();
    if tied.len() > 1 {
        return Err(LowerBoundError::TiedOptimum { channels: tied });
    }
    if theta.len() == 1 {
        return Ok(F::zero());
    }
    if top <= F::zero() || top >= F::one() {
        return Err(LowerBoundError::DegenerateOptimum { channel: best + 1 });
    }
    let mut terms = Vec::with_capacity(theta.len() - 1);
    for (i, &t) in theta.iter().enumerate() {
        if i != best {
            terms.push((top - t) / kl_bernoulli(t, top)?);
        }
    }
    Ok(bandwidth * compensated_sum(terms))
}

/// Closed-form loss of uniform random sensing over a block.
pub fn expected_loss_random<F: Real>(theta: &[F], bandwidth: F, horizon: usize) -> F {
    let Some(best) = argmax_first(theta) else {
        return F::zero();
    };
    let n = F::from(theta.len()).expect("channel count fits");
    let gap = compensated_sum(theta.iter().map(|&t| theta[best] - t));
    bandwidth * gap / n * F::from(horizon).expect("horizon fits")
}

/// Powers of two up to the horizon, plus the horizon itself.
pub fn checkpoint_slots(horizon: usize) -> Vec<usize> {
    let mut slots = Vec::new();
    let mut s = 1usize;
    while s < horizon {
        slots.push(s);
        s = s.saturating_mul(2);
    }
    if horizon > 0 {
        slots.push(horizon);
    }
    slots
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F> {
    pub slot: usize,
    /// `B * theta* * j`, the genie's expected payoff.
    pub genie_expected: F,
    pub payoff: F,
    /// Realized payoff of the genie's channel on the same draws.
    pub genie_realized: Option<F>,
}

impl<F: Real> Checkpoint<F> {
    pub fn loss(&self) -> F {
        self.genie_expected - self.payoff
    }

    pub fn same_realization_loss(&self) -> Option<F> {
        self.genie_realized.map(|g| g - self.payoff)
    }
}

/// Cumulative loss trajectory of one strategy over one block.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretRecord<F> {
    pub strategy: String,
    pub trial: u64,
    pub horizon: usize,
    pub checkpoints: Vec<Checkpoint<F>>,
}

impl<F: Real> RegretRecord<F> {
    pub fn from_history(
        strategy: impl Into<String>,
        trial: u64,
        theta: &[F],
        bandwidth: F,
        history: &SensingHistory,
        slots: &[usize],
        realization: Option<&Realization>,
    ) -> Self {
        let best = argmax_first(theta).expect("nonempty theta");
        let top = theta[best];
        let genie_column = realization.and_then(|r| r.channel_column(best + 1).ok());
        let mut checkpoints = Vec::with_capacity(slots.len());
        let (mut free, mut cursor) = (0u64, 0usize);
        let (mut genie_free, mut genie_cursor) = (0u64, 0usize);
        let outcomes = history.outcomes();
        for &slot in slots {
            while cursor < outcomes.len() && outcomes[cursor].slot <= slot {
                free += u64::from(outcomes[cursor].free);
                cursor += 1;
            }
            let genie_realized = genie_column.as_ref().map(|col| {
                while genie_cursor < slot.min(col.len()) {
                    genie_free += u64::from(col[genie_cursor]);
                    genie_cursor += 1;
                }
                bandwidth * F::from(genie_free).expect("count fits")
            });
            let j = F::from(slot).expect("slot fits");
            checkpoints.push(Checkpoint {
                slot,
                genie_expected: bandwidth * top * j,
                payoff: bandwidth * F::from(free).expect("count fits"),
                genie_realized,
            });
        }
        Self {
            strategy: strategy.into(),
            trial,
            horizon: history.horizon(),
            checkpoints,
        }
    }

    pub fn at(&self, slot: usize) -> Option<&Checkpoint<F>> {
        self.checkpoints.iter().find(|c| c.slot == slot)
    }

    pub fn loss_at(&self, slot: usize) -> Option<F> {
        self.at(slot).map(Checkpoint::loss)
    }
}

/// Monte Carlo loss estimate at one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEstimate<F> {
    pub mean: F,
    /// 95% normal-approximation half-width; `None` with a single trial.
    pub half_width: Option<F>,
    pub trials: usize,
}

impl<F: Real> LossEstimate<F> {
    pub fn standard_error(&self) -> Option<F> {
        self.half_width.map(|h| h / F::from(Z95).unwrap())
    }
}

const Z95: f64 = 1.959_963_984_540_054;

/// Mean and confidence half-width of a sample.
pub fn mean_and_half_width<F: Real>(values: &[F]) -> Result<LossEstimate<F>, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = F::from(values.len()).unwrap();
    let mean = compensated_sum(values.iter().copied()) / n;
    let half_width = if values.len() > 1 {
        let ss = compensated_sum(values.iter().map(|&v| (v - mean) * (v - mean)));
        let sd = (ss / (n - F::one())).sqrt();
        Some(F::from(Z95).unwrap() * sd / n.sqrt())
    } else {
        None
    };
    Ok(LossEstimate {
        mean,
        half_width,
        trials: values.len(),
    })
}

/// Loss against the genie's expected payoff, averaged over trials.
pub fn empirical_loss<F: Real>(
    records: &[RegretRecord<F>],
    slot: usize,
) -> Result<LossEstimate<F>, MetricsError> {
    let losses = records
        .iter()
        .map(|r| {
            r.loss_at(slot)
                .ok_or(MetricsError::MissingCheckpoint { slot })
        })
        .collect::<Result<Vec<_>, _>>()?;
    mean_and_half_width(&losses)
}

/// Least-squares fit of loss against `ln T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFit<F> {
    pub slope: F,
    pub intercept: F,
    pub r_squared: F,
    pub residuals: Vec<F>,
    /// Log-log slope; `None` unless every loss is positive.
    pub growth_exponent: Option<F>,
}

impl<F: Real> LogFit<F> {
    const LINEAR_EXPONENT: f64 = 0.75;
    const GOOD_FIT: f64 = 0.95;

    /// Loss grows like a power of `T` close to one.
    pub fn linear_growth(&self) -> bool {
        self.growth_exponent
            .is_some_and(|e| e >= F::from(Self::LINEAR_EXPONENT).unwrap())
    }

    pub fn poor_log_fit(&self) -> bool {
        self.r_squared < F::from(Self::GOOD_FIT).unwrap()
    }
}

fn ols<F: Real>(xs: &[F], ys: &[F]) -> (F, F, F, Vec<F>) {
    let n = F::from(xs.len()).unwrap();
    let mx = compensated_sum(xs.iter().copied()) / n;
    let my = compensated_sum(ys.iter().copied()) / n;
    let sxx = compensated_sum(xs.iter().map(|&x| (x - mx) * (x - mx)));
    let sxy = compensated_sum(xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)));
    let syy = compensated_sum(ys.iter().map(|&y| (y - my) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<F> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| y - (intercept + slope * x))
        .collect();
    let ss_res = compensated_sum(residuals.iter().map(|&r| r * r));
    let r_squared = if syy > F::zero() {
        F::one() - ss_res / syy
    } else {
        F::one()
    };
    (slope, intercept, r_squared, residuals)
}

/// Fits `loss = a + b ln T` over `(T, loss)` points.
pub fn regret_slope_vs_log_t<F: Real>(curve: &[(usize, F)]) -> Result<LogFit<F>, MetricsError> {
    if curve.len() < 3 {
        return Err(MetricsError::TooFewPoints(curve.len()));
    }
    if curve.iter().any(|&(t, _)| t == 0) {
        return Err(MetricsError::BadAbscissa);
    }
    let xs: Vec<F> = curve
        .iter()
        .map(|&(t, _)| F::from(t).unwrap().ln())
        .collect();
    let ys: Vec<F> = curve.iter().map(|&(_, l)| l).collect();
    let spread = xs.iter().fold(F::zero(), |m, &x| m.max((x - xs[0]).abs()));
    if spread == F::zero() {
        return Err(MetricsError::BadAbscissa);
    }
    let (slope, intercept, r_squared, residuals) = ols(&xs, &ys);
    let growth_exponent = if ys.iter().all(|&y| y > F::zero()) {
        let log_ys: Vec<F> = ys.iter().map(|y| y.ln()).collect();
        Some(ols(&xs, &log_ys).0)
    } else {
        None
    };
    Ok(LogFit {
        slope,
        intercept,
        r_squared,
        residuals,
        growth_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SensingOutcome;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kl_values() {
        assert_eq!(kl_bernoulli(0.5, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(
            kl_bernoulli(0.75, 0.25).unwrap(),
            0.5 * 3f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(kl_bernoulli(0.75, 0.25).unwrap(), 0.549306, epsilon = 1e-6);
        assert_abs_diff_eq!(
            kl_bernoulli(0.0, 0.5).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        assert_eq!(kl_bernoulli(0.3, 0.0), Err(KlError::Infinite));
        assert_eq!(kl_bernoulli(0.3, 1.0), Err(KlError::Infinite));
        assert_eq!(kl_bernoulli(1.0, 1.0), Ok(0.0));
        assert_eq!(kl_bernoulli(1.2, 0.5), Err(KlError::InvalidProbability));
        assert_abs_diff_eq!(
            kl_bernoulli(0.25f32, 0.75).unwrap(),
            0.549306,
            epsilon = 1e-6
        );
    }

    #[test]
    fn kl_convex_in_first_argument() {
        let h = 1e-3;
        for qi in 1..20 {
            let q = qi as f64 / 20.0;
            for pi in 1..99 {
                let p = pi as f64 / 100.0;
                let f = |x: f64| kl_bernoulli(x, q).unwrap();
                let second = (f(p + h) - 2.0 * f(p) + f(p - h)) / (h * h);
                assert!(second >= -1e-9, "p={p} q={q} second={second}");
            }
        }
    }

    #[test]
    fn lower_bound_values() {
        let d = 0.5 * (5.0f64 / 9.0).ln() + 0.5 * 5f64.ln();
        assert_abs_diff_eq!(d, 0.510826, epsilon = 1e-6);
        let c = lower_bound_constant(&[0.9, 0.5], 1.0).unwrap();
        assert_abs_diff_eq!(c, 0.4 / d, epsilon = 1e-12);
        // 0.4 / 0.5108256 = 0.7830461
        assert_abs_diff_eq!(c, 0.783045, epsilon = 2e-6);
        assert_eq!(lower_bound_constant(&[0.9], 1.0).unwrap(), 0.0);
        let d2 = 0.4 * 0.5f64.ln() + 0.6 * 3f64.ln();
        assert_abs_diff_eq!(
            lower_bound_constant(&[0.8, 0.4, 0.4], 2.0).unwrap(),
            2.0 * 2.0 * (0.4 / d2),
            epsilon = 1e-12
        );
    }

    #[test]
    fn lower_bound_signals() {
        assert_eq!(
            lower_bound_constant(&[0.7, 0.2, 0.7], 1.0),
            Err(LowerBoundError::TiedOptimum {
                channels: vec![1, 3]
            })
        );
        assert_eq!(
            lower_bound_constant(&[1.0, 0.2], 1.0),
            Err(LowerBoundError::DegenerateOptimum { channel: 1 })
        );
        assert_eq!(
            lower_bound_constant::<f64>(&[], 1.0),
            Err(LowerBoundError::NoChannels)
        );
    }

    #[test]
    fn duplicate_arm_adds_its_term() {
        let base = lower_bound_constant(&[0.9, 0.5, 0.3], 1.0).unwrap();
        let more = lower_bound_constant(&[0.9, 0.5, 0.3, 0.3], 1.0).unwrap();
        let term = 0.6 / kl_bernoulli(0.3, 0.9).unwrap();
        assert_abs_diff_eq!(more - base, term, epsilon = 1e-12);
    }

    #[test]
    fn random_loss_closed_form() {
        assert_abs_diff_eq!(
            expected_loss_random(&[0.8, 0.4], 1.0, 1000),
            200.0,
            epsilon = 1e-9
        );
        assert_eq!(expected_loss_random(&[0.3, 0.3, 0.3], 1.0, 1000), 0.0);
        assert_eq!(expected_loss_random(&[0.3], 1.0, 1000), 0.0);
        let base = expected_loss_random(&[0.9, 0.2, 0.5], 1.0, 100);
        assert_abs_diff_eq!(
            expected_loss_random(&[0.9, 0.2, 0.5], 3.0, 700),
            21.0 * base,
            epsilon = 1e-9
        );
    }

    #[test]
    fn checkpoints_are_geometric() {
        assert_eq!(checkpoint_slots(1), vec![1]);
        assert_eq!(checkpoint_slots(8), vec![1, 2, 4, 8]);
        assert_eq!(checkpoint_slots(10), vec![1, 2, 4, 8, 10]);
    }

    fn history(channels_free: &[(usize, bool)]) -> SensingHistory {
        let mut h = SensingHistory::new(channels_free.len());
        for (k, &(channel, free)) in channels_free.iter().enumerate() {
            h.push(SensingOutcome {
                slot: k + 1,
                channel,
                free,
            })
            .unwrap();
        }
        h
    }

    #[test]
    fn record_accounting_identity() {
        let h = history(&[(1, true), (2, false), (1, true), (1, false), (2, true)]);
        let r =
            RegretRecord::from_history("x", 0, &[0.8, 0.4], 2.0, &h, &checkpoint_slots(5), None);
        let last = r.at(5).unwrap();
        assert_abs_diff_eq!(last.loss(), 2.0 * 0.8 * 5.0 - 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            r.loss_at(2).unwrap(),
            2.0 * 0.8 * 2.0 - 2.0,
            epsilon = 1e-12
        );
        assert!(last.genie_realized.is_none());
    }

    #[test]
    fn record_genie_realized() {
        let block =
            Realization::from_rows(vec![vec![true, false], vec![false, true], vec![true, true]])
                .unwrap();
        let h = history(&[(2, false), (2, true), (2, true)]);
        let r = RegretRecord::from_history("x", 0, &[0.8, 0.4], 1.0, &h, &[1, 2, 3], Some(&block));
        let g: Vec<f64> = r
            .checkpoints
            .iter()
            .map(|c| c.genie_realized.unwrap())
            .collect();
        assert_eq!(g, vec![1.0, 1.0, 2.0]);
        assert_eq!(r.at(3).unwrap().same_realization_loss(), Some(0.0));
    }

    #[test]
    fn empirical_loss_edges() {
        assert_eq!(empirical_loss::<f64>(&[], 1), Err(MetricsError::Empty));
        let h = history(&[(1, true)]);
        let one = RegretRecord::from_history("g", 0, &[1.0], 1.0, &h, &[1], None);
        let est = empirical_loss(std::slice::from_ref(&one), 1).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.half_width, None);
        assert_eq!(
            empirical_loss(&[one], 2),
            Err(MetricsError::MissingCheckpoint { slot: 2 })
        );
        let est = mean_and_half_width(&[1.0, 3.0]).unwrap();
        assert_eq!(est.mean, 2.0);
        assert_abs_diff_eq!(
            est.half_width.unwrap(),
            Z95 * 2f64.sqrt() / 2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn exact_log_curve() {
        let curve: Vec<(usize, f64)> = [1_000, 10_000, 100_000]
            .iter()
            .map(|&t| (t, 5.0 * (t as f64).ln()))
            .collect();
        let fit = regret_slope_vs_log_t(&curve).unwrap();
        assert_abs_diff_eq!(fit.slope, 5.0, epsilon = 1e-9);
        assert!(!fit.linear_growth());
        assert!(!fit.poor_log_fit());
    }

    #[test]
    fn linear_curve_is_flagged() {
        let narrow: Vec<(usize, f64)> = [100, 200, 400]
            .iter()
            .map(|&t| (t, 0.01 * t as f64))
            .collect();
        let wide: Vec<(usize, f64)> = [1_000, 10_000, 100_000]
            .iter()
            .map(|&t| (t, 0.01 * t as f64))
            .collect();
        let (nf, wf) = (
            regret_slope_vs_log_t(&narrow).unwrap(),
            regret_slope_vs_log_t(&wide).unwrap(),
        );
        assert!(wf.slope > 10.0 * nf.slope);
        assert!(wf.linear_growth());
        assert!(wf.poor_log_fit());
        assert_abs_diff_eq!(wf.growth_exponent.unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fit_needs_three_points() {
        assert_eq!(
            regret_slope_vs_log_t(&[(10, 1.0), (100, 2.0)]),
            Err(MetricsError::TooFewPoints(2))
        );
        assert_eq!(
            regret_slope_vs_log_t(&[(10, 1.0), (10, 2.0), (10, 3.0)]),
            Err(MetricsError::BadAbscissa)
        );
    }
}
