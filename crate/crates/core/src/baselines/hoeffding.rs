use std::fmt::Write as _;
use std::marker::PhantomData;

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;
use crate::sohot::{evaluate_split, LeafStats};

/// Internal-node cap matching a complete tree of depth 7.
pub const HT_LIMIT_INTERNAL_NODES: usize = 127;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafPrediction {
    MajorityClass,
    NaiveBayesAdaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingTreeConfig {
    pub leaf_prediction: LeafPrediction,
    pub delta: f64,
    pub tau: f64,
    pub grace_period: u64,
    /// Maximum number of internal nodes; `None` grows without bound.
    pub node_limit: Option<usize>,
}

impl Default for HoeffdingTreeConfig {
    fn default() -> Self {
        Self {
            leaf_prediction: LeafPrediction::NaiveBayesAdaptive,
            delta: 1e-7,
            tau: 0.05,
            grace_period: 200,
            node_limit: None,
        }
    }
}

impl HoeffdingTreeConfig {
    pub fn limited() -> Self {
        Self {
            node_limit: Some(HT_LIMIT_INTERNAL_NODES),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
struct Leaf {
    stats: LeafStats,
    /// Class weights for prediction; seeded from the parent's split estimate.
    class_dist: Vec<f64>,
    mc_correct: u64,
    nb_correct: u64,
    depth: usize,
}

#[derive(Debug, Clone)]
enum HtNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        depth: usize,
    },
    Leaf(Leaf),
}

/// Classic Hoeffding tree with Gaussian numeric observers and binary splits.
#[derive(Debug, Clone)]
pub struct HoeffdingTree<F> {
    config: HoeffdingTreeConfig,
    nodes: Vec<HtNode>,
    input_dim: usize,
    n_classes: usize,
    internal_count: usize,
    _scalar: PhantomData<F>,
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

impl Leaf {
    fn new(input_dim: usize, class_dist: Vec<f64>, depth: usize) -> Self {
        let k = class_dist.len();
        Self {
            stats: LeafStats::new(input_dim, k),
            class_dist,
            mc_correct: 0,
            nb_correct: 0,
            depth,
        }
    }

    /// Laplace-smoothed class frequencies.
    fn majority_proba(&self) -> Vec<f64> {
        let k = self.class_dist.len() as f64;
        let total: f64 = self.class_dist.iter().sum();
        self.class_dist.iter().map(|&c| (c + 1.0) / (total + k)).collect()
    }

    /// Naive Bayes posterior from the Gaussian observers; `None` before the
    /// leaf has observations of its own.
    fn naive_bayes_proba(&self, x: &[f64]) -> Option<Vec<f64>> {
        if self.stats.total() == 0 {
            return None;
        }
        let total: f64 = self.class_dist.iter().sum();
        let log_post: Vec<f64> = (0..self.class_dist.len())
            .map(|c| {
                if self.class_dist[c] <= 0.0 || self.stats.class_counts()[c] == 0 {
                    return f64::NEG_INFINITY;
                }
                let mut lp = (self.class_dist[c] / total).ln();
                for (j, &xj) in x.iter().enumerate() {
                    lp += self.stats.feature(j).class_estimator(c).log_density(xj);
                }
                lp
            })
            .collect();
        let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return None;
        }
        let exps: Vec<f64> = log_post.iter().map(|&l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        Some(exps.into_iter().map(|e| e / z).collect())
    }

    fn predict(&self, x: &[f64], mode: LeafPrediction) -> Vec<f64> {
        match mode {
            LeafPrediction::MajorityClass => self.majority_proba(),
            LeafPrediction::NaiveBayesAdaptive => {
                if self.nb_correct > self.mc_correct {
                    self.naive_bayes_proba(x).unwrap_or_else(|| self.majority_proba())
                } else {
                    self.majority_proba()
                }
            }
        }
    }
}

impl<F: Scalar> HoeffdingTree<F> {
    pub fn new(input_dim: usize, n_classes: usize, config: HoeffdingTreeConfig) -> Result<Self> {
        if input_dim == 0 || n_classes == 0 {
            return Err(Error::contract("input dimension and class count must be positive"));
        }
        if !(config.delta > 0.0 && config.delta < 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1)"));
        }
        if config.grace_period == 0 {
            return Err(Error::config("grace", "must be at least 1"));
        }
        if config.node_limit == Some(0) {
            return Err(Error::config("node-limit", "must be at least 1"));
        }
        Ok(Self {
            nodes: vec![HtNode::Leaf(Leaf::new(input_dim, vec![0.0; n_classes], 0))],
            config,
            input_dim,
            n_classes,
            internal_count: 0,
            _scalar: PhantomData,
        })
    }

    pub fn config(&self) -> &HoeffdingTreeConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn internal_count(&self) -> usize {
        self.internal_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                HtNode::Split { depth, .. } => *depth,
                HtNode::Leaf(l) => l.depth,
            })
            .max()
            .unwrap_or(0)
    }

    fn to_f64(x: &[F]) -> Vec<f64> {
        x.iter().map(|v| v.to_f64_lossy()).collect()
    }

    fn route(&self, x: &[f64]) -> usize {
        let mut id = 0;
        while let HtNode::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = &self.nodes[id]
        {
            id = if x[*feature] < *threshold { *left } else { *right };
        }
        id
    }

    fn leaf(&self, id: usize) -> &Leaf {
        match &self.nodes[id] {
            HtNode::Leaf(l) => l,
            HtNode::Split { .. } => unreachable!("route ends at a leaf"),
        }
    }

    fn leaf_mut(&mut self, id: usize) -> &mut Leaf {
        match &mut self.nodes[id] {
            HtNode::Leaf(l) => l,
            HtNode::Split { .. } => unreachable!("route ends at a leaf"),
        }
    }

    pub fn predict_proba(&self, x: &[F]) -> Result<Vec<F>> {
        check_len(self.input_dim, x.len())?;
        let xs = Self::to_f64(x);
        let leaf = self.leaf(self.route(&xs));
        Ok(leaf
            .predict(&xs, self.config.leaf_prediction)
            .into_iter()
            .map(F::lit)
            .collect())
    }

    fn can_grow(&self) -> bool {
        self.config
            .node_limit
            .is_none_or(|limit| self.internal_count < limit)
    }

    pub fn learn_one(&mut self, x: &[F], y: usize) -> Result<()> {
        check_len(self.input_dim, x.len())?;
        if y >= self.n_classes {
            return Err(Error::contract(format!("label {y} out of range")));
        }
        let xs = Self::to_f64(x);
        let id = self.route(&xs);
        let mode = self.config.leaf_prediction;
        let grace = self.config.grace_period;
        let can_grow = self.can_grow();
        let leaf = self.leaf_mut(id);
        if mode == LeafPrediction::NaiveBayesAdaptive {
            if argmax(&leaf.class_dist) == y {
                leaf.mc_correct += 1;
            }
            if let Some(nb) = leaf.naive_bayes_proba(&xs) {
                if argmax(&nb) == y {
                    leaf.nb_correct += 1;
                }
            }
        }
        leaf.class_dist[y] += 1.0;
        leaf.stats.observe(&xs, y);
        if can_grow && leaf.stats.samples_since_last_attempt >= grace {
            self.attempt_split(id)?;
        }
        Ok(())
    }

    fn attempt_split(&mut self, id: usize) -> Result<bool> {
        let (delta, tau) = (self.config.delta, self.config.tau);
        let input_dim = self.input_dim;
        let leaf = self.leaf_mut(id);
        leaf.stats.samples_since_last_attempt = 0;
        let depth = leaf.depth;
        let Some(eval) = evaluate_split(&leaf.stats, delta, tau)? else {
            return Ok(false);
        };
        let Some(feature) = eval.best.feature.filter(|_| eval.should_split) else {
            return Ok(false);
        };
        let threshold = eval.best.threshold;
        let [left_dist, right_dist] = leaf.stats.feature(feature).split_distributions(threshold);
        let left = self.nodes.len();
        self.nodes.push(HtNode::Leaf(Leaf::new(input_dim, left_dist, depth + 1)));
        self.nodes.push(HtNode::Leaf(Leaf::new(input_dim, right_dist, depth + 1)));
        self.nodes[id] = HtNode::Split {
            feature,
            threshold,
            left,
            right: left + 1,
            depth,
        };
        self.internal_count += 1;
        Ok(true)
    }

    /// Same layout as the soft-tree dump, without gate norms.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match &self.nodes[id] {
                HtNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    depth,
                } => {
                    let _ = writeln!(out, "{}I d={depth} f={feature} th={threshold:.6}", "  ".repeat(*depth));
                    stack.push(*right);
                    stack.push(*left);
                }
                HtNode::Leaf(l) => {
                    let probs = l
                        .majority_proba()
                        .iter()
                        .map(|p| format!("{p:.4}"))
                        .collect::<Vec<_>>()
                        .join(",");
                    let _ = writeln!(
                        out,
                        "{}L d={} p=[{probs}] n={}",
                        "  ".repeat(l.depth),
                        l.depth,
                        l.stats.total()
                    );
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mc() -> HoeffdingTreeConfig {
        HoeffdingTreeConfig {
            leaf_prediction: LeafPrediction::MajorityClass,
            ..Default::default()
        }
    }

    #[test]
    fn fresh_tree_is_uniform() {
        let tree = HoeffdingTree::<f64>::new(2, 2, mc()).unwrap();
        assert_eq!(tree.predict_proba(&[0.0, 1.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn laplace_smoothing() {
        let mut tree = HoeffdingTree::<f64>::new(1, 2, mc()).unwrap();
        for i in 0..10 {
            tree.learn_one(&[0.0], usize::from(i == 0)).unwrap();
        }
        let p = tree.predict_proba(&[0.0]).unwrap();
        assert!((p[0] - 10.0 / 12.0).abs() < 1e-15);
        assert!((p[1] - 2.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn order_of_samples_does_not_matter() {
        let data: Vec<([f64; 2], usize)> = (0..150)
            .map(|i| ([(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()], i % 3))
            .collect();
        let mut a = HoeffdingTree::<f64>::new(2, 3, mc()).unwrap();
        let mut b = a.clone();
        for (x, y) in &data {
            a.learn_one(x, *y).unwrap();
        }
        for (x, y) in data.iter().rev() {
            b.learn_one(x, *y).unwrap();
        }
        let qa = a.predict_proba(&[0.1, 0.2]).unwrap();
        let qb = b.predict_proba(&[0.1, 0.2]).unwrap();
        assert_eq!(qa, qb);
    }

    #[test]
    fn single_class_never_splits() {
        let mut tree = HoeffdingTree::<f64>::new(2, 2, HoeffdingTreeConfig::default()).unwrap();
        for i in 0..5000 {
            tree.learn_one(&[i as f64, -(i as f64)], 1).unwrap();
        }
        assert_eq!(tree.internal_count(), 0);
    }

    #[test]
    fn separable_stream_splits_on_signal_feature() {
        let mut tree = HoeffdingTree::<f64>::new(2, 2, mc()).unwrap();
        for i in 0..400 {
            let x0 = ((i * 37) % 200) as f64 / 100.0 - 1.0;
            let x1 = ((i * 11) % 50) as f64;
            tree.learn_one(&[x0, x1], usize::from(x0 >= 0.0)).unwrap();
        }
        assert!(tree.internal_count() >= 1);
        assert!(tree.dump().starts_with("I d=0 f=0 "));
    }

    #[test]
    fn node_limit_is_enforced() {
        let mut tree = HoeffdingTree::<f64>::new(
            1,
            2,
            HoeffdingTreeConfig {
                node_limit: Some(1),
                grace_period: 50,
                ..mc()
            },
        )
        .unwrap();
        for i in 0..20_000 {
            // alternating stripes: many splits would help
            let x = (i * 7919 % 10_000) as f64 / 10_000.0;
            tree.learn_one(&[x], ((x * 16.0) as usize) % 2).unwrap();
        }
        assert_eq!(tree.internal_count(), 1);
    }

    #[test]
    fn naive_bayes_adaptive_outputs_distribution() {
        let mut tree = HoeffdingTree::<f64>::new(2, 3, HoeffdingTreeConfig::default()).unwrap();
        for i in 0..3000 {
            let c = i % 3;
            let x = [c as f64 + ((i * 13) % 7) as f64 * 0.05, ((i * 5) % 11) as f64];
            let p = tree.predict_proba(&x).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            tree.learn_one(&x, c).unwrap();
        }
    }
}
