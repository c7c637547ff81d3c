use crate::scalar::Scalar;

/// Number of important features of one decision rule.
///
/// A feature counts when `alpha * |w_j x_j| / sigma >= 1/p`, with
/// `sigma = sum_j |w_j x_j|`; the split-test feature adds one more when
/// `1 - alpha >= 1/p`. With `alpha = 1` this is the plain soft-tree count.
/// When `sigma = 0` no feature acts through the gate.
pub fn transparency_count<F: Scalar>(weight: &[F], x: &[F], alpha: F) -> usize {
    let p = weight.len();
    assert_eq!(p, x.len(), "weight and input lengths differ");
    assert!(p >= 1, "need at least one feature");
    let inv_p = F::one() / F::from_usize_lossy(p);
    let impacts: Vec<F> = weight.iter().zip(x).map(|(&w, &xi)| (w * xi).abs()).collect();
    let sigma: F = impacts.iter().copied().sum();
    let gated = if sigma > F::zero() {
        impacts
            .iter()
            .filter(|&&impact| alpha * (impact / sigma) >= inv_p)
            .count()
    } else {
        0
    };
    gated + usize::from(F::one() - alpha >= inv_p)
}
