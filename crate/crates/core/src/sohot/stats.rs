//! Sufficient statistics kept in leaves for the split heuristic.

/// Number of candidate thresholds evaluated per feature.
pub const CANDIDATE_THRESHOLDS: usize = 10;

const SD_FLOOR: f64 = 1e-9;

/// Incremental mean and variance (Welford).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaussianEstimator {
    count: f64,
    mean: f64,
    m2: f64,
}

impl GaussianEstimator {
    pub fn add(&mut self, x: f64) {
        self.count += 1.0;
        let diff = x - self.mean;
        self.mean += diff / self.count;
        self.m2 = (self.m2 + diff * (x - self.mean)).max(0.0);
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance; zero with fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.count > 1.0 {
            self.m2 / (self.count - 1.0)
        } else {
            0.0
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Estimated mass strictly below `x`.
    pub fn weight_below(&self, x: f64) -> f64 {
        let sd = self.std_dev();
        if sd > 0.0 {
            self.count * normal_cdf((x - self.mean) / sd)
        } else if x > self.mean {
            self.count
        } else {
            0.0
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let sd = self.std_dev().max(SD_FLOOR);
        let z = (x - self.mean) / sd;
        -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Per-class Gaussian observer for one numeric feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureObserver {
    per_class: Vec<GaussianEstimator>,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl FeatureObserver {
    pub fn new(n_classes: usize) -> Self {
        Self {
            per_class: vec![GaussianEstimator::default(); n_classes],
            min: vec![f64::INFINITY; n_classes],
            max: vec![f64::NEG_INFINITY; n_classes],
        }
    }

    pub fn observe(&mut self, x: f64, class: usize) {
        self.per_class[class].add(x);
        self.min[class] = self.min[class].min(x);
        self.max[class] = self.max[class].max(x);
    }

    pub fn class_estimator(&self, class: usize) -> &GaussianEstimator {
        &self.per_class[class]
    }

    pub fn total(&self) -> f64 {
        self.per_class.iter().map(GaussianEstimator::count).sum()
    }

    /// Observed range over all classes, if any value was seen.
    pub fn range(&self) -> Option<(f64, f64)> {
        let lo = self.min.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }

    /// Equally spaced interior points of the observed range.
    pub fn candidate_thresholds(&self) -> Vec<f64> {
        match self.range() {
            Some((lo, hi)) if hi > lo => {
                let step = (hi - lo) / (CANDIDATE_THRESHOLDS + 1) as f64;
                (1..=CANDIDATE_THRESHOLDS)
                    .map(|i| lo + step * i as f64)
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Estimated class distributions on each side of `x < threshold`.
    pub fn split_distributions(&self, threshold: f64) -> [Vec<f64>; 2] {
        let k = self.per_class.len();
        let mut left = vec![0.0; k];
        let mut right = vec![0.0; k];
        for c in 0..k {
            let est = &self.per_class[c];
            if est.count() == 0.0 {
                continue;
            }
            let below = if threshold <= self.min[c] {
                0.0
            } else if threshold > self.max[c] {
                est.count()
            } else {
                est.weight_below(threshold).clamp(0.0, est.count())
            };
            left[c] = below;
            right[c] = est.count() - below;
        }
        [left, right]
    }
}

/// Shannon entropy in bits of an unnormalized distribution.
pub fn entropy(dist: &[f64]) -> f64 {
    let total: f64 = dist.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    dist.iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of splitting `pre` into `branches`, in bits.
pub fn information_gain(pre: &[f64], branches: &[Vec<f64>]) -> f64 {
    let total: f64 = pre.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let post: f64 = branches
        .iter()
        .map(|b| b.iter().sum::<f64>() / total * entropy(b))
        .sum();
    entropy(pre) - post
}

/// Class counts and per-feature observers of a leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafStats {
    class_counts: Vec<u64>,
    features: Vec<FeatureObserver>,
    pub samples_since_last_attempt: u64,
}

impl LeafStats {
    pub fn new(n_features: usize, n_classes: usize) -> Self {
        Self {
            class_counts: vec![0; n_classes],
            features: (0..n_features).map(|_| FeatureObserver::new(n_classes)).collect(),
            samples_since_last_attempt: 0,
        }
    }

    pub fn observe(&mut self, x: &[f64], class: usize) {
        self.class_counts[class] += 1;
        for (obs, &xi) in self.features.iter_mut().zip(x) {
            obs.observe(xi, class);
        }
        self.samples_since_last_attempt += 1;
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.class_counts
    }

    pub fn class_distribution(&self) -> Vec<f64> {
        self.class_counts.iter().map(|&c| c as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.class_counts.iter().sum()
    }

    pub fn n_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, index: usize) -> &FeatureObserver {
        &self.features[index]
    }

    /// Number of classes observed at least once.
    pub fn observed_classes(&self) -> usize {
        self.class_counts.iter().filter(|&&c| c > 0).count()
    }

    /// Best threshold of `feature` by information gain; ties keep the lower
    /// threshold.
    pub fn best_threshold(&self, feature: usize) -> Option<(f64, f64)> {
        let pre = self.class_distribution();
        let obs = &self.features[feature];
        let mut best: Option<(f64, f64)> = None;
        for theta in obs.candidate_thresholds() {
            let gain = information_gain(&pre, &obs.split_distributions(theta));
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((theta, gain));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_batch() {
        let xs = [1.0, 4.0, 2.5, -3.0, 7.25];
        let mut est = GaussianEstimator::default();
        xs.iter().for_each(|&x| est.add(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((est.mean() - mean).abs() < 1e-12);
        assert!((est.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[5.0, 5.0]), 1.0);
        assert_eq!(entropy(&[3.0, 0.0]), 0.0);
        assert!((entropy(&[1.0, 1.0, 1.0, 1.0]) - 2.0).abs() < 1e-15);
        assert_eq!(entropy(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn pure_split_recovers_prior_entropy() {
        let pre = vec![30.0, 70.0];
        let gain = information_gain(&pre, &[vec![30.0, 0.0], vec![0.0, 70.0]]);
        assert!((gain - entropy(&pre)).abs() < 1e-15);
    }

    #[test]
    fn class_counts_follow_labels() {
        let mut stats = LeafStats::new(1, 2);
        for i in 0..100 {
            stats.observe(&[i as f64], usize::from(i >= 60));
        }
        assert_eq!(stats.class_counts(), &[60, 40]);
        assert_eq!(stats.feature(0).total(), 100.0);
        assert_eq!(stats.samples_since_last_attempt, 100);
    }

    #[test]
    fn candidates_span_the_observed_range() {
        let mut obs = FeatureObserver::new(2);
        obs.observe(-1.0, 0);
        obs.observe(10.0, 1);
        let c = obs.candidate_thresholds();
        assert_eq!(c.len(), CANDIDATE_THRESHOLDS);
        assert!((c[0] - 0.0).abs() < 1e-12);
        assert!((c[9] - 9.0).abs() < 1e-12);
        let mut constant = FeatureObserver::new(2);
        constant.observe(3.0, 0);
        constant.observe(3.0, 1);
        assert!(constant.candidate_thresholds().is_empty());
    }

    #[test]
    fn split_distributions_conserve_mass() {
        let mut obs = FeatureObserver::new(3);
        for i in 0..90 {
            obs.observe((i as f64 * 0.37).sin() * 5.0 + (i % 3) as f64, i % 3);
        }
        for theta in obs.candidate_thresholds() {
            let [l, r] = obs.split_distributions(theta);
            for c in 0..3 {
                assert!((l[c] + r[c] - 30.0).abs() < 1e-9);
                assert!(l[c] >= 0.0 && r[c] >= 0.0);
            }
        }
    }
}
