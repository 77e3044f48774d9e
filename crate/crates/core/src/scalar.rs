//! Numeric traits shared by every module.
//!
//! [`Scalar`] is the interface needed by the parts of the model that are
//! closed under field operations (beliefs, the exact dynamic program, the
//! channel parameters). It is implemented by `f32`, `f64` and by the exact
//! rationals from `num-rational`. [`Real`] adds transcendental functions and
//! is what the divergence, the index rule and the regret fits require.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

pub trait Scalar:
    Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// Lossy conversion used for sampling and reporting.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn abs_diff(&self, other: &Self) -> Self {
        if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }
}

impl<T> Scalar for T where
    T: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

/// Compensated (Neumaier) sum. Independent of the evaluation order up to
/// rounding of the compensation term, so serial and parallel reductions of
/// the same sorted data agree.
pub fn compensated_sum<F: Float, I: IntoIterator<Item = F>>(values: I) -> F {
    let mut sum = F::zero();
    let mut comp = F::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

/// Index of the largest value, lowest index on ties. Returns `None` on an
/// empty slice.
pub fn argmax_first<S: PartialOrd>(values: &[S]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if !(*v > values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_first(&[0.5, 0.5]), Some(0));
        assert_eq!(argmax_first(&[0.2, 0.9, 0.5]), Some(1));
        assert_eq!(argmax_first::<f64>(&[]), None);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn rationals_are_scalars() {
        let half = BigRational::from_count(1) / BigRational::from_count(2);
        assert_eq!(half.to_f64_lossy(), 0.5);
        assert_eq!(
            half.abs_diff(&BigRational::from_count(1)),
            BigRational::from_count(1) / BigRational::from_count(2)
        );
    }
}
