use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Piecewise cubic gate that is exactly 0 below `-gamma/2`, exactly 1 above
/// `gamma/2` and continuously differentiable in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothStep<F> {
    gamma: F,
}

impl<F: Scalar> SmoothStep<F> {
    pub fn new(gamma: F) -> Result<Self> {
        if gamma > F::zero() && gamma.is_finite() {
            Ok(Self { gamma })
        } else {
            Err(Error::contract(format!("gamma must be positive, got {gamma}")))
        }
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    pub fn value(&self, t: F) -> F {
        let half = self.gamma / F::lit(2.0);
        if t <= -half {
            F::zero()
        } else if t >= half {
            F::one()
        } else {
            let g3 = self.gamma * self.gamma * self.gamma;
            -(F::lit(2.0) / g3) * t * t * t + (F::lit(3.0) / (F::lit(2.0) * self.gamma)) * t
                + F::lit(0.5)
        }
    }

    pub fn derivative(&self, t: F) -> F {
        let half = self.gamma / F::lit(2.0);
        if t.abs() >= half {
            F::zero()
        } else {
            let g3 = self.gamma * self.gamma * self.gamma;
            -(F::lit(6.0) / g3) * t * t + F::lit(3.0) / (F::lit(2.0) * self.gamma)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_and_center_values() {
        let s = SmoothStep::<f64>::new(1.0).unwrap();
        assert_eq!(s.value(-0.5), 0.0);
        assert_eq!(s.value(-3.0), 0.0);
        assert_eq!(s.value(0.5), 1.0);
        assert_eq!(s.value(0.0), 0.5);
        // -2 * 0.25^3 + 1.5 * 0.25 + 0.5
        assert!((s.value(0.25) - 0.84375).abs() < 1e-15);
    }

    #[test]
    fn derivative_values() {
        let s = SmoothStep::<f64>::new(1.0).unwrap();
        assert_eq!(s.derivative(1.0), 0.0);
        assert_eq!(s.derivative(0.0), 1.5);
        // both one-sided limits at the joints vanish
        assert!(s.derivative(0.5 - 1e-12).abs() < 1e-9);
        assert_eq!(s.derivative(0.5), 0.0);
    }

    #[test]
    fn rejects_non_positive_gamma() {
        assert!(SmoothStep::new(0.0f64).is_err());
        assert!(SmoothStep::new(-1.0f64).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_monotone(gamma in 0.01f64..10.0, a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let s = SmoothStep::new(gamma).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!((0.0..=1.0).contains(&s.value(a)));
            prop_assert!(s.value(lo) <= s.value(hi) + 1e-15);
            prop_assert!(s.derivative(a) >= 0.0);
        }

        #[test]
        fn derivative_matches_finite_difference(gamma in 0.1f64..10.0, u in -0.998f64..0.998) {
            let s = SmoothStep::new(gamma).unwrap();
            // keep t at least 1e-3 (relative to gamma/2) away from the joints
            let t = u * gamma / 2.0;
            prop_assume!((t.abs() - gamma / 2.0).abs() > 1e-3);
            let h = 1e-5;
            let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
            let an = s.derivative(t);
            prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "fd={fd} an={an}");
        }
    }
}
