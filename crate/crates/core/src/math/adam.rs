use crate::error::{check_len, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<F> {
    pub learning_rate: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
}

impl<F: Scalar> AdamConfig<F> {
    pub fn with_learning_rate(learning_rate: F) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl<F: Scalar> Default for AdamConfig<F> {
    fn default() -> Self {
        Self {
            learning_rate: F::lit(1e-3),
            beta1: F::lit(0.9),
            beta2: F::lit(0.999),
            eps: F::lit(1e-8),
        }
    }
}

/// Adam moments for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<F> {
    config: AdamConfig<F>,
    step_count: u64,
    first_moment: Vec<F>,
    second_moment: Vec<F>,
}

impl<F: Scalar> Adam<F> {
    pub fn new(len: usize, config: AdamConfig<F>) -> Self {
        Self {
            config,
            step_count: 0,
            first_moment: vec![F::zero(); len],
            second_moment: vec![F::zero(); len],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }

    pub fn config(&self) -> &AdamConfig<F> {
        &self.config
    }

    /// One bias-corrected Adam step applied to `params` in place.
    pub fn update(&mut self, params: &mut [F], grads: &[F]) -> Result<()> {
        check_len(self.len(), params.len())?;
        check_len(self.len(), grads.len())?;
        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step_count as i32;
        let correction1 = F::one() - beta1.powi(t);
        let correction2 = F::one() - beta2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            *m = beta1 * *m + (F::one() - beta1) * g;
            *v = beta2 * *v + (F::one() - beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p = *p - learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh(len: usize, lr: f64) -> Adam<f64> {
        Adam::new(len, AdamConfig::with_learning_rate(lr))
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut adam = fresh(3, 0.1);
        let mut params = vec![1.0, -2.0, 0.5];
        adam.update(&mut params, &[0.0; 3]).unwrap();
        assert_eq!(params, vec![1.0, -2.0, 0.5]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = fresh(1, 0.1);
        let mut params = vec![0.0];
        adam.update(&mut params, &[1.0]).unwrap();
        // m_hat = 1, v_hat = 1 -> delta = -lr / (1 + eps)
        assert!((params[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn opposite_steps_partially_cancel() {
        let lr = 0.1;
        let mut adam = fresh(1, lr);
        let mut params = vec![0.0];
        adam.update(&mut params, &[1.0]).unwrap();
        adam.update(&mut params, &[-1.0]).unwrap();
        // step 2: m = -0.01, v = 0.001999, m_hat = -0.01 / 0.19, v_hat = 1
        let expected = -lr / (1.0 + 1e-8) + lr * (0.01 / 0.19) / (1.0 + 1e-8);
        assert!((params[0] - expected).abs() < 1e-12, "{}", params[0]);
        assert!(params[0].abs() < lr);
        assert_eq!(adam.step_count(), 2);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let mut adam = fresh(2, 0.1);
        let mut params = vec![0.0; 3];
        assert!(adam.update(&mut params, &[0.0; 3]).is_err());
        let mut params = vec![0.0; 2];
        assert!(adam.update(&mut params, &[0.0; 1]).is_err());
        assert_eq!(adam.step_count(), 0);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut adam = fresh(2, 0.01);
            let mut params = vec![0.3, -0.7];
            for i in 0..10 {
                let g = [(i as f64).sin(), (i as f64).cos()];
                adam.update(&mut params, &g).unwrap();
            }
            params
        };
        assert_eq!(run(), run());
    }
}
