use crate::error::{check_len, Result};
use crate::scalar::Scalar;

const VARIANCE_FLOOR: f64 = 1e-5;

/// Per-feature running mean and variance used in place of a batch
/// normalization layer when instances arrive one at a time.
///
/// The statistics are exponentially weighted with weight `momentum` on the
/// previous value. Until `1 / (1 - momentum)` instances have been seen the
/// weight is capped at `(n - 1) / n`, so the early estimates are plain sample
/// statistics instead of being biased toward the zero initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningNormalizer<F> {
    count: u64,
    momentum: F,
    running_mean: Vec<F>,
    running_variance: Vec<F>,
}

impl<F: Scalar> RunningNormalizer<F> {
    pub fn new(dim: usize, momentum: F) -> Self {
        assert!(
            momentum > F::zero() && momentum <= F::one(),
            "momentum must lie in (0, 1]"
        );
        Self {
            count: 0,
            momentum,
            running_mean: vec![F::zero(); dim],
            running_variance: vec![F::zero(); dim],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[F] {
        &self.running_mean
    }

    pub fn variance(&self) -> &[F] {
        &self.running_variance
    }

    pub fn dim(&self) -> usize {
        self.running_mean.len()
    }

    fn observe(&mut self, x: &[F]) {
        self.count += 1;
        let n = F::from_u64(self.count).unwrap_or_else(F::max_value);
        let keep = self.momentum.min((n - F::one()) / n);
        let step = F::one() - keep;
        for ((mean, var), &xi) in self
            .running_mean
            .iter_mut()
            .zip(self.running_variance.iter_mut())
            .zip(x)
        {
            let diff = xi - *mean;
            let incr = step * diff;
            *mean = *mean + incr;
            *var = (keep * (*var + diff * incr)).max(F::zero());
        }
    }

    /// Normalizes `x`; when `training`, the running statistics absorb `x`
    /// first. Before any statistics exist the input is returned unchanged.
    pub fn normalize(&mut self, x: &[F], training: bool) -> Result<Vec<F>> {
        check_len(self.dim(), x.len())?;
        if training {
            self.observe(x);
        }
        Ok(self.apply(x))
    }

    /// Normalizes without touching the statistics.
    pub fn apply(&self, x: &[F]) -> Vec<F> {
        if self.count == 0 {
            return x.to_vec();
        }
        let floor = F::lit(VARIANCE_FLOOR);
        x.iter()
            .zip(&self.running_mean)
            .zip(&self.running_variance)
            .map(|((&xi, &m), &v)| (xi - m) / (v + floor).sqrt())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn fresh_normalizer_passes_input_through() {
        let mut norm = RunningNormalizer::<f64>::new(2, 0.99);
        assert_eq!(norm.normalize(&[3.0, -4.0], false).unwrap(), vec![3.0, -4.0]);
        assert_eq!(norm.count(), 0);
    }

    #[test]
    fn constant_stream_centers_to_zero() {
        let mut norm = RunningNormalizer::<f64>::new(1, 0.99);
        let mut out = vec![];
        for _ in 0..500 {
            out = norm.normalize(&[5.0], true).unwrap();
        }
        assert!(out[0].abs() < 1e-9, "{out:?}");
        assert!(norm.variance()[0] >= 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let mut norm = RunningNormalizer::<f64>::new(2, 0.99);
        assert!(norm.normalize(&[1.0], true).is_err());
    }

    #[test]
    fn first_instances_use_sample_statistics() {
        let mut norm = RunningNormalizer::<f64>::new(1, 0.99);
        norm.normalize(&[1.0], true).unwrap();
        norm.normalize(&[3.0], true).unwrap();
        assert!((norm.mean()[0] - 2.0).abs() < 1e-15);
        // population variance of {1, 3}
        assert!((norm.variance()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tracks_gaussian_stream_statistics() {
        // With momentum 0.99 the effective sample size is (1 + m) / (1 - m) = 199,
        // so the variance estimate has a relative standard error of about
        // sqrt(2 / 199) = 0.10 and the mean an absolute error of about
        // sd * sqrt(1 / 199). Tolerances are three standard errors.
        let (mu, sd) = (10.0, 2.0);
        let dist = Normal::new(mu, sd).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut norm = RunningNormalizer::<f64>::new(1, 0.99);
        let mut xs = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let x: f64 = dist.sample(&mut rng);
            xs.push(x);
            norm.normalize(&[x], true).unwrap();
        }
        let n = xs.len() as f64;
        let batch_mean = xs.iter().sum::<f64>() / n;
        let batch_var = xs.iter().map(|x| (x - batch_mean).powi(2)).sum::<f64>() / n;
        let ess = 1.99 / 0.01;
        assert!((norm.mean()[0] - batch_mean).abs() / batch_mean < 0.05);
        assert!((norm.mean()[0] - batch_mean).abs() < 3.0 * sd / f64::sqrt(ess));
        let rel_var = (norm.variance()[0] - batch_var).abs() / batch_var;
        assert!(rel_var < 3.0 * f64::sqrt(2.0 / ess), "relative variance error {rel_var}");
    }

    #[test]
    fn finite_output_for_constant_feature() {
        let mut norm = RunningNormalizer::<f64>::new(2, 0.99);
        for i in 0..50 {
            let out = norm.normalize(&[7.0, i as f64], true).unwrap();
            assert!(out.iter().all(|v| v.is_finite()));
        }
    }
}
