//! Hyperparameter grids for the model pools.

use crate::baselines::{HoeffdingTreeConfig, LeafPrediction, SoftTreeConfig};
use crate::scalar::Scalar;
use crate::sohot::SoHoTreeConfig;

const DEPTHS: [usize; 3] = [5, 6, 7];
const ALPHAS: [f64; 3] = [0.2, 0.3, 0.4];
pub const SOHOT_GAMMAS: [f64; 2] = [1.0, 0.1];
/// Gate widths used instead of [`SOHOT_GAMMAS`] on hyperplane streams.
pub const HYPERPLANE_GAMMAS: [f64; 2] = [0.5, 0.1];
const ST_GAMMAS: [f64; 3] = [1.0, 0.1, 0.01];
const ST_LEARNING_RATES: [f64; 2] = [1e-2, 1e-3];
const HT_DELTAS: [f64; 3] = [1e-6, 1e-7, 1e-8];
const HT_GRACE: [u64; 3] = [200, 400, 600];

/// Depth × gamma × alpha; every other field comes from `base`.
pub fn sohot_grid<F: Scalar>(base: &SoHoTreeConfig<F>, gammas: &[f64]) -> Vec<SoHoTreeConfig<F>> {
    let mut grid = Vec::new();
    for &max_depth in &DEPTHS {
        for &gamma in gammas {
            for &alpha in &ALPHAS {
                grid.push(SoHoTreeConfig {
                    max_depth,
                    gamma: F::lit(gamma),
                    alpha: F::lit(alpha),
                    ..base.clone()
                });
            }
        }
    }
    grid
}

/// Leaf prediction × delta × grace period.
pub fn ht_grid(base: &HoeffdingTreeConfig) -> Vec<HoeffdingTreeConfig> {
    let mut grid = Vec::new();
    for leaf_prediction in [LeafPrediction::MajorityClass, LeafPrediction::NaiveBayesAdaptive] {
        for &delta in &HT_DELTAS {
            for &grace_period in &HT_GRACE {
                grid.push(HoeffdingTreeConfig {
                    leaf_prediction,
                    delta,
                    grace_period,
                    ..base.clone()
                });
            }
        }
    }
    grid
}

/// Depth × gamma × learning rate.
pub fn st_grid<F: Scalar>(base: &SoftTreeConfig<F>) -> Vec<SoftTreeConfig<F>> {
    let mut grid = Vec::new();
    for &depth in &DEPTHS {
        for &gamma in &ST_GAMMAS {
            for &lr in &ST_LEARNING_RATES {
                grid.push(SoftTreeConfig {
                    depth,
                    gamma: F::lit(gamma),
                    learning_rate: F::lit(lr),
                    ..base.clone()
                });
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes_and_distinctness() {
        let s = sohot_grid(&SoHoTreeConfig::<f64>::default(), &SOHOT_GAMMAS);
        assert_eq!(s.len(), 18);
        for (i, a) in s.iter().enumerate() {
            for b in &s[i + 1..] {
                assert_ne!(a, b);
            }
        }
        assert_eq!(ht_grid(&HoeffdingTreeConfig::default()).len(), 18);
        assert_eq!(st_grid(&SoftTreeConfig::<f64>::default()).len(), 18);
    }

    #[test]
    fn limited_base_keeps_its_cap() {
        assert!(ht_grid(&HoeffdingTreeConfig::limited())
            .iter()
            .all(|c| c.node_limit == Some(127)));
    }
}
