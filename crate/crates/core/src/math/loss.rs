use crate::scalar::Scalar;

/// Numerically stable softmax.
pub fn softmax<F: Scalar>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of `softmax(logits)` against `true_class`, with its gradient
/// with respect to the logits.
///
/// Panics if `true_class` is out of range.
pub fn softmax_cross_entropy<F: Scalar>(logits: &[F], true_class: usize) -> (F, Vec<F>) {
    assert!(true_class < logits.len(), "class index out of range");
    let (arg_max, max) = logits
        .iter()
        .copied()
        .enumerate()
        .fold((0, F::neg_infinity()), |best, (i, z)| if z > best.1 { (i, z) } else { best });
    // the maximum contributes exactly 1 to the partition sum; ln_1p keeps
    // precision for confident predictions
    let rest: F = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != arg_max)
        .map(|(_, &z)| (z - max).exp())
        .sum();
    let log_sum = rest.ln_1p();
    let loss = log_sum + (max - logits[true_class]);
    let log_norm = max + log_sum;
    let mut grad: Vec<F> = logits.iter().map(|&z| (z - log_norm).exp()).collect();
    grad[true_class] = grad[true_class] - F::one();
    (loss.max(F::zero()), grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_binary() {
        let (loss, grad) = softmax_cross_entropy(&[0.0f64, 0.0], 0);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.5, 0.5]);
    }

    #[test]
    fn confident_correct_prediction() {
        let (loss, grad) = softmax_cross_entropy(&[10.0f64, -10.0], 0);
        // ln(1 + e^-20)
        let expected = (-20.0f64).exp().ln_1p();
        assert!((loss - expected).abs() < 1e-20);
        assert!((loss - 2.061e-9).abs() < 1e-12);
        assert!((grad[0] + 2.061e-9).abs() < 1e-12);
        assert!((grad[1] - 2.061e-9).abs() < 1e-12);
    }

    #[test]
    fn softmax_sums_to_one_with_large_logits() {
        let p = softmax(&[1000.0f64, 999.0, -1000.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    proptest! {
        #[test]
        fn gradient_sums_to_zero_and_matches_fd(
            logits in prop::collection::vec(-5.0f64..5.0, 2..6),
            class_seed in 0usize..100,
        ) {
            let y = class_seed % logits.len();
            let (_, grad) = softmax_cross_entropy(&logits, y);
            prop_assert!(grad.iter().sum::<f64>().abs() < 1e-12);
            let h = 1e-5;
            for j in 0..logits.len() {
                let mut up = logits.clone();
                let mut down = logits.clone();
                up[j] += h;
                down[j] -= h;
                let fd = (softmax_cross_entropy(&up, y).0 - softmax_cross_entropy(&down, y).0) / (2.0 * h);
                prop_assert!((fd - grad[j]).abs() < 1e-6, "j={j} fd={fd} g={}", grad[j]);
            }
        }
    }
}
