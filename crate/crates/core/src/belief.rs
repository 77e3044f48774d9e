//! Posterior knowledge over the availability vector.
//!
//! Two representations: independent Beta pseudo-counts per channel (exact
//! conjugate updates, product priors only) and a finite grid of candidate
//! vectors with weights (any joint prior, including correlated ones). Both
//! are immutable values; `update` returns the posterior and leaves the input
//! alone, so the dynamic program can branch on hypothetical outcomes.

use std::fmt::Debug;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use thiserror::Error;

use crate::scalar::Scalar;

/// Observed `(free, busy)` counts for one channel.
pub type Counts = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeliefError {
    #[error("channel {channel} outside 1..={num_channels}")]
    ChannelOutOfRange { channel: usize, num_channels: usize },
    #[error("belief needs at least one channel")]
    NoChannels,
    #[error("beta parameters of channel {channel} must be positive")]
    NonPositivePseudoCount { channel: usize },
    #[error("grid has no points")]
    EmptyGrid,
    #[error("grid point {point} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        point: usize,
        found: usize,
        expected: usize,
    },
    #[error("grid point {point} has a coordinate outside [0, 1]")]
    PointOutOfRange { point: usize },
    #[error("grid has {points} points but {weights} weights")]
    WeightCount { points: usize, weights: usize },
    #[error("grid weight {point} is negative")]
    NegativeWeight { point: usize },
    #[error("grid weights must sum to 1")]
    WeightsNotNormalized,
    #[error("observing channel {channel} {} has zero probability under the belief", if *.free { "free" } else { "busy" })]
    DegenerateEvidence { channel: usize, free: bool },
}

pub trait Belief<S: Scalar>: Clone + Debug + Send + Sync {
    fn num_channels(&self) -> usize;

    /// Bayes update after sensing `channel` (1-based).
    fn update(&self, channel: usize, free: bool) -> Result<Self, BeliefError>;

    /// Expected availability of `channel`. Panics if `channel` is out of range.
    fn posterior_mean(&self, channel: usize) -> S;

    /// Probability that sensing `channel` now reveals a free slot. For
    /// Bernoulli observations this is the posterior mean.
    fn predictive_free_probability(&self, channel: usize) -> S {
        self.posterior_mean(channel)
    }

    /// Observation counts accumulated since the prior.
    fn observation_counts(&self) -> &[Counts];

    /// Sufficient statistic of the posterior relative to its prior: two
    /// beliefs derived from the same prior with equal fingerprints are equal.
    fn fingerprint(&self) -> Vec<Counts> {
        self.observation_counts().to_vec()
    }

    /// Number of channels whose observations can change the posterior.
    fn informative_channels(&self) -> usize {
        self.num_channels()
    }

    fn total_observations(&self) -> u64 {
        self.observation_counts()
            .iter()
            .map(|&(a, b)| u64::from(a) + u64::from(b))
            .sum()
    }
}

fn check_channel(channel: usize, num_channels: usize) -> Result<usize, BeliefError> {
    if channel == 0 || channel > num_channels {
        Err(BeliefError::ChannelOutOfRange {
            channel,
            num_channels,
        })
    } else {
        Ok(channel - 1)
    }
}

fn bump(counts: &mut [Counts], idx: usize, free: bool) {
    if free {
        counts[idx].0 += 1;
    } else {
        counts[idx].1 += 1;
    }
}

/// Product of independent Beta distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaBelief<S> {
    prior: Arc<[(S, S)]>,
    counts: Vec<Counts>,
}

impl<S: Scalar> BetaBelief<S> {
    pub fn new(params: Vec<(S, S)>) -> Result<Self, BeliefError> {
        if params.is_empty() {
            return Err(BeliefError::NoChannels);
        }
        for (i, (a, b)) in params.iter().enumerate() {
            if !(*a > S::zero() && *b > S::zero()) {
                return Err(BeliefError::NonPositivePseudoCount { channel: i + 1 });
            }
        }
        let counts = vec![(0, 0); params.len()];
        Ok(Self {
            prior: params.into(),
            counts,
        })
    }

    /// Beta(1, 1) on every channel.
    pub fn uniform(num_channels: usize) -> Self {
        Self::new(vec![(S::one(), S::one()); num_channels.max(1)])
            .expect("unit pseudo-counts are valid")
    }

    pub fn alpha(&self, channel: usize) -> S {
        let i = channel - 1;
        self.prior[i].0.clone() + S::from_count(u64::from(self.counts[i].0))
    }

    pub fn beta(&self, channel: usize) -> S {
        let i = channel - 1;
        self.prior[i].1.clone() + S::from_count(u64::from(self.counts[i].1))
    }

    pub fn prior_params(&self) -> &[(S, S)] {
        &self.prior
    }
}

impl<S: Scalar> Belief<S> for BetaBelief<S> {
    fn num_channels(&self) -> usize {
        self.counts.len()
    }

    fn update(&self, channel: usize, free: bool) -> Result<Self, BeliefError> {
        let idx = check_channel(channel, self.num_channels())?;
        let mut next = self.clone();
        bump(&mut next.counts, idx, free);
        Ok(next)
    }

    fn posterior_mean(&self, channel: usize) -> S {
        assert!(
            channel >= 1 && channel <= self.num_channels(),
            "channel {channel} out of range"
        );
        let a = self.alpha(channel);
        a.clone() / (a + self.beta(channel))
    }

    fn observation_counts(&self) -> &[Counts] {
        &self.counts
    }
}

/// Discrete prior over candidate availability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBelief<S> {
    points: Arc<[Vec<S>]>,
    weights: Vec<S>,
    counts: Vec<Counts>,
    // Channels whose coordinate differs across the prior's support. Counts
    // on the others never move the posterior.
    informative: Arc<[bool]>,
}

impl<S: Scalar> GridBelief<S> {
    const WEIGHT_TOLERANCE: f64 = 1e-12;

    pub fn new(points: Vec<Vec<S>>, weights: Vec<S>) -> Result<Self, BeliefError> {
        if points.is_empty() {
            return Err(BeliefError::EmptyGrid);
        }
        if points.len() != weights.len() {
            return Err(BeliefError::WeightCount {
                points: points.len(),
                weights: weights.len(),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(BeliefError::NoChannels);
        }
        for (k, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(BeliefError::DimensionMismatch {
                    point: k,
                    found: p.len(),
                    expected: dim,
                });
            }
            if p.iter().any(|x| !(*x >= S::zero() && *x <= S::one())) {
                return Err(BeliefError::PointOutOfRange { point: k });
            }
        }
        let mut total = S::zero();
        for (k, w) in weights.iter().enumerate() {
            if !(*w >= S::zero()) {
                return Err(BeliefError::NegativeWeight { point: k });
            }
            total = total + w.clone();
        }
        let tol = S::from_f64(Self::WEIGHT_TOLERANCE).expect("tolerance representable");
        if !(total.abs_diff(&S::one()) <= tol) {
            return Err(BeliefError::WeightsNotNormalized);
        }
        let weights: Vec<S> = weights.into_iter().map(|w| w / total.clone()).collect();

        let informative = (0..dim)
            .map(|i| {
                let mut support = points
                    .iter()
                    .zip(&weights)
                    .filter(|(_, w)| **w > S::zero())
                    .map(|(p, _)| &p[i]);
                match support.next() {
                    Some(first) => support.any(|x| x != first),
                    None => false,
                }
            })
            .collect();
        Ok(Self {
            points: points.into(),
            weights,
            counts: vec![(0, 0); dim],
            informative,
        })
    }

    /// Point mass at a known availability vector.
    pub fn point_mass(theta: Vec<S>) -> Result<Self, BeliefError> {
        Self::new(vec![theta], vec![S::one()])
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weight_sum(&self) -> S {
        self.weights
            .iter()
            .fold(S::zero(), |acc, w| acc + w.clone())
    }
}

impl<S: Scalar> Belief<S> for GridBelief<S> {
    fn num_channels(&self) -> usize {
        self.counts.len()
    }

    fn update(&self, channel: usize, free: bool) -> Result<Self, BeliefError> {
        let idx = check_channel(channel, self.num_channels())?;
        let mut reweighted = Vec::with_capacity(self.weights.len());
        let mut total = S::zero();
        for (p, w) in self.points.iter().zip(&self.weights) {
            let likelihood = if free {
                p[idx].clone()
            } else {
                S::one() - p[idx].clone()
            };
            let v = w.clone() * likelihood;
            total = total + v.clone();
            reweighted.push(v);
        }
        if !(total > S::zero()) {
            return Err(BeliefError::DegenerateEvidence { channel, free });
        }
        for w in &mut reweighted {
            *w = w.clone() / total.clone();
        }
        let mut counts = self.counts.clone();
        bump(&mut counts, idx, free);
        Ok(Self {
            points: Arc::clone(&self.points),
            weights: reweighted,
            counts,
            informative: Arc::clone(&self.informative),
        })
    }

    fn posterior_mean(&self, channel: usize) -> S {
        assert!(
            channel >= 1 && channel <= self.num_channels(),
            "channel {channel} out of range"
        );
        self.points
            .iter()
            .zip(&self.weights)
            .fold(S::zero(), |acc, (p, w)| {
                acc + w.clone() * p[channel - 1].clone()
            })
    }

    fn observation_counts(&self) -> &[Counts] {
        &self.counts
    }

    fn informative_channels(&self) -> usize {
        self.informative.iter().filter(|&&inf| inf).count()
    }

    fn fingerprint(&self) -> Vec<Counts> {
        self.counts
            .iter()
            .zip(self.informative.iter())
            .map(|(&c, &inf)| if inf { c } else { (0, 0) })
            .collect()
    }
}

/// Either representation, chosen at configuration time.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorBelief<S> {
    Beta(BetaBelief<S>),
    Grid(GridBelief<S>),
}

impl<S: Scalar> PriorBelief<S> {
    /// Draws an availability vector from the (prior) distribution.
    pub fn draw_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            PriorBelief::Beta(b) => (1..=b.num_channels())
                .map(|i| {
                    let dist =
                        rand_distr::Beta::new(b.alpha(i).to_f64_lossy(), b.beta(i).to_f64_lossy())
                            .expect("validated beta parameters");
                    dist.sample(rng)
                })
                .collect(),
            PriorBelief::Grid(g) => {
                let w: Vec<f64> = g.weights().iter().map(Scalar::to_f64_lossy).collect();
                let k = WeightedIndex::new(&w)
                    .expect("validated grid weights")
                    .sample(rng);
                g.points()[k].iter().map(Scalar::to_f64_lossy).collect()
            }
        }
    }
}

impl<S: Scalar> Belief<S> for PriorBelief<S> {
    fn num_channels(&self) -> usize {
        match self {
            PriorBelief::Beta(b) => b.num_channels(),
            PriorBelief::Grid(g) => g.num_channels(),
        }
    }

    fn update(&self, channel: usize, free: bool) -> Result<Self, BeliefError> {
        Ok(match self {
            PriorBelief::Beta(b) => PriorBelief::Beta(b.update(channel, free)?),
            PriorBelief::Grid(g) => PriorBelief::Grid(g.update(channel, free)?),
        })
    }

    fn posterior_mean(&self, channel: usize) -> S {
        match self {
            PriorBelief::Beta(b) => b.posterior_mean(channel),
            PriorBelief::Grid(g) => g.posterior_mean(channel),
        }
    }

    fn observation_counts(&self) -> &[Counts] {
        match self {
            PriorBelief::Beta(b) => b.observation_counts(),
            PriorBelief::Grid(g) => g.observation_counts(),
        }
    }

    fn fingerprint(&self) -> Vec<Counts> {
        match self {
            PriorBelief::Beta(b) => b.fingerprint(),
            PriorBelief::Grid(g) => g.fingerprint(),
        }
    }

    fn informative_channels(&self) -> usize {
        match self {
            PriorBelief::Beta(b) => b.informative_channels(),
            PriorBelief::Grid(g) => g.informative_channels(),
        }
    }
}

impl<S: Scalar> From<BetaBelief<S>> for PriorBelief<S> {
    fn from(b: BetaBelief<S>) -> Self {
        PriorBelief::Beta(b)
    }
}

impl<S: Scalar> From<GridBelief<S>> for PriorBelief<S> {
    fn from(g: GridBelief<S>) -> Self {
        PriorBelief::Grid(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn uniform_beta_then_free() {
        let post = BetaBelief::<f64>::uniform(2).update(1, true).unwrap();
        assert_eq!((post.alpha(1), post.beta(1)), (2.0, 1.0));
        assert_eq!((post.alpha(2), post.beta(2)), (1.0, 1.0));
        let exact = BetaBelief::<BigRational>::uniform(1)
            .update(1, true)
            .unwrap();
        assert_eq!(exact.posterior_mean(1), q(2, 3));
    }

    #[test]
    fn beta_mean() {
        let b = BetaBelief::new(vec![(3.0, 1.0)]).unwrap();
        assert_eq!(b.posterior_mean(1), 0.75);
        assert_eq!(b.predictive_free_probability(1), 0.75);
    }

    #[test]
    fn beta_rejects_bad_params() {
        assert_eq!(
            BetaBelief::new(vec![(1.0, 0.0)]).unwrap_err(),
            BeliefError::NonPositivePseudoCount { channel: 1 }
        );
        assert_eq!(
            BetaBelief::<f64>::new(vec![]).unwrap_err(),
            BeliefError::NoChannels
        );
        assert_eq!(
            BetaBelief::<f64>::uniform(2).update(3, true).unwrap_err(),
            BeliefError::ChannelOutOfRange {
                channel: 3,
                num_channels: 2
            }
        );
    }

    #[test]
    fn two_point_grid_update() {
        let g =
            GridBelief::new(vec![vec![q(1, 5)], vec![q(4, 5)]], vec![q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(g.posterior_mean(1), q(1, 2));
        let post = g.update(1, true).unwrap();
        assert_eq!(post.weights(), &[q(1, 5), q(4, 5)]);
        assert_eq!(g.weights(), &[q(1, 2), q(1, 2)]);

        let gf = GridBelief::new(vec![vec![0.2], vec![0.8]], vec![0.5, 0.5]).unwrap();
        let pf = gf.update(1, true).unwrap();
        assert_abs_diff_eq!(pf.weights()[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(pf.weights()[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn single_point_grid_is_fixed() {
        let g = GridBelief::point_mass(vec![0.9]).unwrap();
        assert_eq!(g.posterior_mean(1), 0.9);
        let post = g.update(1, false).unwrap().update(1, true).unwrap();
        assert_eq!(post.weights(), &[1.0]);
        assert_eq!(post.fingerprint(), vec![(0, 0)]);
    }

    #[test]
    fn degenerate_evidence() {
        let g = GridBelief::new(vec![vec![0.0, 0.5], vec![0.0, 0.7]], vec![0.3, 0.7]).unwrap();
        assert_eq!(
            g.update(1, true).unwrap_err(),
            BeliefError::DegenerateEvidence {
                channel: 1,
                free: true
            }
        );
        assert!(g.update(1, false).is_ok());
    }

    #[test]
    fn grid_validation() {
        assert_eq!(
            GridBelief::<f64>::new(vec![], vec![]).unwrap_err(),
            BeliefError::EmptyGrid
        );
        assert_eq!(
            GridBelief::new(vec![vec![0.2], vec![0.3, 0.1]], vec![0.5, 0.5]).unwrap_err(),
            BeliefError::DimensionMismatch {
                point: 1,
                found: 2,
                expected: 1
            }
        );
        assert_eq!(
            GridBelief::new(vec![vec![1.5]], vec![1.0]).unwrap_err(),
            BeliefError::PointOutOfRange { point: 0 }
        );
        assert_eq!(
            GridBelief::new(vec![vec![0.5]], vec![0.9]).unwrap_err(),
            BeliefError::WeightsNotNormalized
        );
        assert_eq!(
            GridBelief::new(vec![vec![0.5], vec![0.6]], vec![1.5, -0.5]).unwrap_err(),
            BeliefError::NegativeWeight { point: 1 }
        );
    }

    #[test]
    fn grid_fingerprint_ignores_known_channels() {
        let g = GridBelief::new(vec![vec![0.2, 0.5], vec![0.8, 0.5]], vec![0.5, 0.5]).unwrap();
        let post = g.update(2, true).unwrap().update(1, false).unwrap();
        assert_eq!(post.observation_counts(), &[(0, 1), (1, 0)]);
        assert_eq!(post.fingerprint(), vec![(0, 1), (0, 0)]);
    }

    #[test]
    fn discretized_beta_grid_matches_conjugate() {
        // Beta(2, 3) on 2000 midpoints.
        let n = 2000;
        let (a, b) = (2.0_f64, 3.0_f64);
        let xs: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
        let dens: Vec<f64> = xs
            .iter()
            .map(|x| x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0))
            .collect();
        let z: f64 = dens.iter().sum();
        let mut grid = GridBelief::new(
            xs.iter().map(|&x| vec![x]).collect(),
            dens.iter().map(|d| d / z).collect(),
        )
        .unwrap();
        let mut beta = BetaBelief::new(vec![(a, b)]).unwrap();
        for free in [true, false, true, true, false, false, true] {
            grid = grid.update(1, free).unwrap();
            beta = beta.update(1, free).unwrap();
            assert_abs_diff_eq!(grid.weight_sum(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            grid.posterior_mean(1),
            beta.posterior_mean(1),
            epsilon = 1e-3
        );
    }

    fn martingale_gap<B: Belief<f64>>(b: &B, channel: usize) -> f64 {
        let p = b.predictive_free_probability(channel);
        let mut lhs = 0.0;
        if p > 0.0 {
            lhs += p * b.update(channel, true).unwrap().posterior_mean(channel);
        }
        if p < 1.0 {
            lhs += (1.0 - p) * b.update(channel, false).unwrap().posterior_mean(channel);
        }
        (lhs - b.posterior_mean(channel)).abs()
    }

    proptest! {
        #[test]
        fn beta_update_order_does_not_matter(obs in proptest::collection::vec((1usize..=3, any::<bool>()), 0..20), seed in any::<u64>()) {
            let mut shuffled = obs.clone();
            let mut rng = crate::rng::stream_rng(seed, 0, 0);
            rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
            let fold = |seq: &[(usize, bool)]| seq.iter().fold(BetaBelief::<f64>::uniform(3), |b, &(c, z)| b.update(c, z).unwrap());
            prop_assert_eq!(fold(&obs), fold(&shuffled));
        }

        #[test]
        fn grid_weights_stay_normalized(
            raw in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.01f64..1.0), 1..12),
            obs in proptest::collection::vec((1usize..=2, any::<bool>()), 0..25),
        ) {
            let total: f64 = raw.iter().map(|r| r.2).sum();
            let mut g = GridBelief::new(raw.iter().map(|r| vec![r.0, r.1]).collect(), raw.iter().map(|r| r.2 / total).collect()).unwrap();
            for (c, z) in obs {
                match g.update(c, z) {
                    Ok(next) => g = next,
                    Err(BeliefError::DegenerateEvidence { .. }) => continue,
                    Err(e) => panic!("{e}"),
                }
                prop_assert!((g.weight_sum() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn total_expectation_identity(a in 0.1f64..20.0, b in 0.1f64..20.0, w in 0.01f64..0.99, x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let beta = BetaBelief::new(vec![(a, b)]).unwrap();
            prop_assert!(martingale_gap(&beta, 1) <= 1e-12);
            let grid = GridBelief::new(vec![vec![x], vec![y]], vec![w, 1.0 - w]).unwrap();
            prop_assert!(martingale_gap(&grid, 1) <= 1e-12);
        }
    }
}
