//! Soft Hoeffding tree: a soft tree that grows like a Hoeffding tree.
//!
//! Each internal node blends a learned oblique gate with the univariate split
//! test that created it; `alpha` sets the blend. Leaves collect class and
//! Gaussian feature statistics from instances that reach them with enough
//! probability and split once the Hoeffding bound is satisfied.

mod split;
mod stats;
mod transparency;
mod tree;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use split::{
    evaluate_split, gain_range, hoeffding_bound, rank_candidates, split_decision, SplitCandidate,
    SplitEvaluation,
};
pub use stats::{
    entropy, information_gain, FeatureObserver, GaussianEstimator, LeafStats, CANDIDATE_THRESHOLDS,
};
pub use transparency::transparency_count;
pub use tree::{
    routing_probability, Gradients, InternalNode, LeafNode, Node, NodeId, SplitTest, Trace,
    TraceEntry, TraceKind, Traversal, TreeArena,
};

use crate::error::{check_len, Error, Result};
use crate::math::{softmax, softmax_cross_entropy, Adam, AdamConfig, RunningNormalizer, SmoothStep};
use crate::scalar::{l2_norm, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SoHoTreeConfig<F> {
    /// Weight of the oblique gate against the split test, in `[0, 1]`.
    pub alpha: F,
    /// Width of the smooth-step gate.
    pub gamma: F,
    /// Leaves at this depth (root = 0) never split.
    pub max_depth: usize,
    pub delta: f64,
    pub tau: f64,
    /// Minimum reach probability for an instance to update leaf statistics.
    pub epsilon_s: F,
    pub grace_period: u64,
    pub learning_rate: F,
    /// Normalize inputs with running statistics before routing.
    pub normalize: bool,
    pub normalizer_momentum: F,
    /// Half-width of the uniform initialization of new gate weights.
    pub split_weight_init: F,
    pub seed: u64,
}

impl<F: Scalar> Default for SoHoTreeConfig<F> {
    fn default() -> Self {
        Self {
            alpha: F::lit(0.3),
            gamma: F::one(),
            max_depth: 7,
            delta: 1e-7,
            tau: 0.05,
            epsilon_s: F::lit(0.25),
            grace_period: 200,
            learning_rate: F::lit(1e-2),
            normalize: true,
            normalizer_momentum: F::lit(0.99),
            split_weight_init: F::lit(0.01),
            seed: 0,
        }
    }
}

impl<F: Scalar> SoHoTreeConfig<F> {
    /// The same configuration in another scalar type.
    pub fn cast<G: Scalar>(&self) -> SoHoTreeConfig<G> {
        let c = |v: F| G::lit(v.to_f64_lossy());
        SoHoTreeConfig {
            alpha: c(self.alpha),
            gamma: c(self.gamma),
            max_depth: self.max_depth,
            delta: self.delta,
            tau: self.tau,
            epsilon_s: c(self.epsilon_s),
            grace_period: self.grace_period,
            learning_rate: c(self.learning_rate),
            normalize: self.normalize,
            normalizer_momentum: c(self.normalizer_momentum),
            split_weight_init: c(self.split_weight_init),
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = F::zero()..=F::one();
        if !unit.contains(&self.alpha) {
            return Err(Error::config("alpha", "must lie in [0, 1]"));
        }
        if !(self.gamma > F::zero()) {
            return Err(Error::config("gamma", "must be positive"));
        }
        if self.max_depth == 0 {
            return Err(Error::config("max-depth", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1)"));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::config("tau", "must be non-negative"));
        }
        if !(self.epsilon_s > F::zero() && self.epsilon_s <= F::one()) {
            return Err(Error::config("epsilon-s", "must lie in (0, 1]"));
        }
        if self.grace_period == 0 {
            return Err(Error::config("grace", "must be at least 1"));
        }
        if !(self.learning_rate > F::zero()) {
            return Err(Error::config("learning-rate", "must be positive"));
        }
        if !(self.normalizer_momentum > F::zero() && self.normalizer_momentum <= F::one()) {
            return Err(Error::config("normalizer-momentum", "must lie in (0, 1]"));
        }
        if self.split_weight_init < F::zero() {
            return Err(Error::config("split-weight-init", "must be non-negative"));
        }
        Ok(())
    }
}

/// Structural summary plus the norm of the last output gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics<F> {
    pub node_count: usize,
    pub leaf_count: usize,
    pub depth: usize,
    pub last_grad_output_norm: Option<F>,
}

#[derive(Debug, Clone)]
pub struct SoHoTree<F> {
    config: SoHoTreeConfig<F>,
    gate: SmoothStep<F>,
    arena: TreeArena<F>,
    /// Indexed by node id; `Some` exactly for leaves.
    leaf_stats: Vec<Option<LeafStats>>,
    /// One optimizer per node parameter vector (gate weight or leaf output).
    optimizers: Vec<Adam<F>>,
    normalizer: Option<RunningNormalizer<F>>,
    rng: ChaCha8Rng,
    last_grad_norm: Option<F>,
}

impl<F: Scalar> SoHoTree<F> {
    pub fn new(input_dim: usize, n_classes: usize, config: SoHoTreeConfig<F>) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::contract("input dimension must be positive"));
        }
        if n_classes == 0 {
            return Err(Error::contract("class count must be positive"));
        }
        let gate = SmoothStep::new(config.gamma)?;
        let normalizer = config
            .normalize
            .then(|| RunningNormalizer::new(input_dim, config.normalizer_momentum));
        Ok(Self {
            gate,
            arena: TreeArena::single_leaf(input_dim, vec![F::zero(); n_classes]),
            leaf_stats: vec![Some(LeafStats::new(input_dim, n_classes))],
            optimizers: vec![Adam::new(n_classes, AdamConfig::with_learning_rate(config.learning_rate))],
            normalizer,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            last_grad_norm: None,
            config,
        })
    }

    pub fn config(&self) -> &SoHoTreeConfig<F> {
        &self.config
    }

    pub fn gate(&self) -> &SmoothStep<F> {
        &self.gate
    }

    pub fn arena(&self) -> &TreeArena<F> {
        &self.arena
    }

    /// Direct access to weights and outputs. Structural changes must go
    /// through [`SoHoTree::split_leaf`].
    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut Node<F>> {
        self.arena.node_mut(id)
    }

    pub fn input_dim(&self) -> usize {
        self.arena.input_dim()
    }

    pub fn n_classes(&self) -> usize {
        self.arena.n_classes()
    }

    pub fn leaf_stats(&self, id: NodeId) -> Option<&LeafStats> {
        self.leaf_stats.get(id).and_then(Option::as_ref)
    }

    pub fn normalizer(&self) -> Option<&RunningNormalizer<F>> {
        self.normalizer.as_ref()
    }

    /// Forward pass on an already normalized input.
    pub fn forward(&self, x: &[F]) -> Result<(Vec<F>, Trace<F>)> {
        self.arena.forward(x, self.config.alpha, &self.gate, Traversal::Pruned)
    }

    pub fn backward(&self, x: &[F], trace: &Trace<F>, grad_output: &[F]) -> Result<Gradients<F>> {
        self.arena
            .backward(x, trace, grad_output, self.config.alpha, &self.gate)
    }

    fn prepare_input(&self, x: &[F]) -> Result<Vec<F>> {
        check_len(self.input_dim(), x.len())?;
        Ok(match &self.normalizer {
            Some(norm) => norm.apply(x),
            None => x.to_vec(),
        })
    }

    /// Logits for a raw input; statistics are not touched.
    pub fn predict_logits(&self, x: &[F]) -> Result<Vec<F>> {
        let z = self.prepare_input(x)?;
        Ok(self.forward(&z)?.0)
    }

    pub fn predict_proba(&self, x: &[F]) -> Result<Vec<F>> {
        Ok(softmax(&self.predict_logits(x)?))
    }

    /// Whether an instance reaching a leaf at `depth` with probability
    /// `reach` contributes to its split statistics.
    pub fn accepts_statistics(&self, depth: usize, reach: F) -> bool {
        depth <= self.config.max_depth && reach > self.config.epsilon_s
    }

    /// Adds one unweighted observation to the leaf statistics if the depth
    /// and reach-probability guards pass. Returns whether it was recorded.
    pub fn update_leaf_statistics(&mut self, leaf: NodeId, x: &[F], y: usize, reach: F) -> Result<bool> {
        check_len(self.input_dim(), x.len())?;
        if y >= self.n_classes() {
            return Err(Error::contract(format!("label {y} out of range")));
        }
        let depth = match self.arena.node(leaf) {
            Some(Node::Leaf(l)) => l.depth,
            _ => return Err(Error::contract(format!("node {leaf} is not a leaf"))),
        };
        if !self.accepts_statistics(depth, reach) {
            return Ok(false);
        }
        let xs: Vec<f64> = x.iter().map(|v| v.to_f64_lossy()).collect();
        self.leaf_stats[leaf]
            .as_mut()
            .expect("leaf has statistics")
            .observe(&xs, y);
        Ok(true)
    }

    /// Splits `leaf` with the given test. The new gate weight is drawn
    /// uniformly from `[-split_weight_init, split_weight_init]`.
    pub fn split_leaf(&mut self, leaf: NodeId, split: SplitTest<F>) -> Result<(NodeId, NodeId)> {
        let scale = self.config.split_weight_init;
        let weight: Vec<F> = (0..self.input_dim())
            .map(|_| {
                if scale > F::zero() {
                    let u = F::lit(self.rng.random::<f64>() * 2.0 - 1.0);
                    u * scale
                } else {
                    F::zero()
                }
            })
            .collect();
        let (left, right) = self.arena.split_leaf(leaf, weight, Some(split))?;
        let (p, k) = (self.input_dim(), self.n_classes());
        let adam = AdamConfig::with_learning_rate(self.config.learning_rate);
        self.leaf_stats[leaf] = None;
        self.optimizers[leaf] = Adam::new(p, adam);
        for _ in [left, right] {
            self.leaf_stats.push(Some(LeafStats::new(p, k)));
            self.optimizers.push(Adam::new(k, adam));
        }
        Ok((left, right))
    }

    /// Runs the Hoeffding split test on `leaf` and splits when it passes.
    pub fn attempt_split(&mut self, leaf: NodeId) -> Result<bool> {
        let depth = match self.arena.node(leaf) {
            Some(Node::Leaf(l)) => l.depth,
            _ => return Err(Error::contract(format!("node {leaf} is not a leaf"))),
        };
        let stats = self.leaf_stats[leaf].as_mut().expect("leaf has statistics");
        stats.samples_since_last_attempt = 0;
        if depth >= self.config.max_depth {
            return Ok(false);
        }
        let Some(eval) = evaluate_split(stats, self.config.delta, self.config.tau)? else {
            return Ok(false);
        };
        match (eval.should_split, eval.best.feature) {
            (true, Some(feature)) => {
                let split = SplitTest {
                    feature,
                    threshold: F::lit(eval.best.threshold),
                };
                self.split_leaf(leaf, split)?;
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    /// One test-free training step on `(x, y)`; returns the loss before the
    /// update.
    pub fn train_step(&mut self, x: &[F], y: usize) -> Result<F> {
        check_len(self.input_dim(), x.len())?;
        if y >= self.n_classes() {
            return Err(Error::contract(format!("label {y} out of range")));
        }
        let z = match &mut self.normalizer {
            Some(norm) => norm.normalize(x, true)?,
            None => x.to_vec(),
        };
        let (logits, trace) = self.forward(&z)?;
        let (loss, grad_output) = softmax_cross_entropy(&logits, y);
        self.last_grad_norm = Some(l2_norm(&grad_output));
        let grads = self.backward(&z, &trace, &grad_output)?;

        for (leaf, reach) in trace.leaves() {
            self.update_leaf_statistics(leaf, &z, y, reach)?;
        }

        for (id, g) in grads.weights.iter().chain(&grads.outputs) {
            if g.iter().all(|v| *v == F::zero()) {
                continue;
            }
            let params = match self.arena.node_mut(*id) {
                Some(Node::Internal(n)) => &mut n.weight,
                Some(Node::Leaf(l)) => &mut l.output,
                None => unreachable!("gradient for a node that exists"),
            };
            self.optimizers[*id].update(params, g)?;
        }

        for leaf in self.arena.leaf_ids() {
            let due = self.leaf_stats[leaf]
                .as_ref()
                .is_some_and(|s| s.samples_since_last_attempt >= self.config.grace_period);
            if due {
                self.attempt_split(leaf)?;
            }
        }
        Ok(loss)
    }

    /// Transparency counts of every internal node the (raw) input reaches.
    pub fn transparency_counts(&self, x: &[F]) -> Result<Vec<usize>> {
        let z = self.prepare_input(x)?;
        let (_, trace) = self.forward(&z)?;
        Ok(trace
            .internals()
            .map(|(id, _)| match self.arena.node(id) {
                Some(Node::Internal(n)) => transparency_count(&n.weight, &z, self.config.alpha),
                _ => unreachable!("trace internals are internal nodes"),
            })
            .collect())
    }

    pub fn diagnostics(&self) -> Diagnostics<F> {
        Diagnostics {
            node_count: self.arena.node_count(),
            leaf_count: self.arena.leaf_count(),
            depth: self.arena.depth(),
            last_grad_output_norm: self.last_grad_norm,
        }
    }

    /// Text dump, one node per line in pre-order, two spaces per level.
    pub fn dump(&self) -> String {
        dump_arena(&self.arena, |id| {
            self.leaf_stats(id).map(LeafStats::total).unwrap_or(0)
        })
    }
}

/// Shared tree dump. Internal nodes print as
/// `I d=<depth> f=<feature> th=<threshold> |w|=<norm>` (feature and threshold
/// omitted for gate-only nodes), leaves as `L d=<depth> p=[...] n=<count>`.
pub fn dump_arena<F: Scalar>(arena: &TreeArena<F>, samples: impl Fn(NodeId) -> u64) -> String {
    let mut out = String::new();
    let mut stack = vec![TreeArena::<F>::ROOT];
    while let Some(id) = stack.pop() {
        let node = arena.node(id).expect("node ids come from the arena");
        let indent = "  ".repeat(node.depth());
        match node {
            Node::Internal(n) => {
                let _ = write!(out, "{indent}I d={}", n.depth);
                if let Some(s) = &n.split {
                    let _ = write!(out, " f={} th={:.6}", s.feature, s.threshold.to_f64_lossy());
                }
                let _ = writeln!(out, " |w|={:.4}", l2_norm(&n.weight).to_f64_lossy());
                stack.push(n.right);
                stack.push(n.left);
            }
            Node::Leaf(l) => {
                let _ = writeln!(
                    out,
                    "{indent}L d={} p=[{}] n={}",
                    l.depth,
                    format_probs(&softmax(&l.output)),
                    samples(id)
                );
            }
        }
    }
    out
}

pub(crate) fn format_probs<F: Scalar>(p: &[F]) -> String {
    p.iter()
        .map(|v| format!("{:.4}", v.to_f64_lossy()))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(alpha: f64) -> SoHoTreeConfig<f64> {
        SoHoTreeConfig {
            alpha,
            normalize: false,
            ..SoHoTreeConfig::default()
        }
    }

    #[test]
    fn fresh_tree() {
        let tree = SoHoTree::new(3, 2, config(0.3)).unwrap();
        let d = tree.diagnostics();
        assert_eq!((d.node_count, d.leaf_count, d.depth), (1, 1, 0));
        assert_eq!(d.last_grad_output_norm, None);
        assert_eq!(tree.predict_proba(&[1.0, 2.0, 3.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn first_loss_is_uniform() {
        let mut tree = SoHoTree::new(3, 2, config(0.3)).unwrap();
        let loss = tree.train_step(&[0.1, -4.0, 2.0], 0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn root_prediction_before_split() {
        let mut tree = SoHoTree::new(2, 2, config(0.3)).unwrap();
        if let Some(Node::Leaf(l)) = tree.node_mut(0) {
            l.output = vec![0.2, 0.8];
        }
        for x in [[0.0, 0.0], [5.0, -3.0], [-1e3, 1e3]] {
            assert_eq!(tree.predict_logits(&x).unwrap(), vec![0.2, 0.8]);
        }
    }

    #[test]
    fn repeated_sample_loss_decreases() {
        let mut tree = SoHoTree::new(2, 2, config(0.3)).unwrap();
        let first = tree.train_step(&[0.5, 0.5], 1).unwrap();
        let mut last = first;
        for _ in 0..199 {
            last = tree.train_step(&[0.5, 0.5], 1).unwrap();
        }
        assert!(last < 0.15 * first, "first {first} last {last}");
    }

    #[test]
    fn statistics_guard() {
        let mut tree = SoHoTree::new(1, 2, config(0.3)).unwrap();
        assert!(!tree.update_leaf_statistics(0, &[0.0], 0, 0.1).unwrap());
        assert!(!tree.update_leaf_statistics(0, &[0.0], 0, 0.25).unwrap());
        assert_eq!(tree.leaf_stats(0).unwrap().total(), 0);
        assert!(tree.update_leaf_statistics(0, &[0.0], 1, 1.0).unwrap());
        assert_eq!(tree.leaf_stats(0).unwrap().class_counts(), &[0, 1]);
    }

    #[test]
    fn split_accounting() {
        let mut tree = SoHoTree::new(2, 2, config(0.3)).unwrap();
        let (l, r) = tree.split_leaf(0, SplitTest { feature: 1, threshold: 0.5 }).unwrap();
        let d = tree.diagnostics();
        assert_eq!((d.node_count, d.leaf_count, d.depth), (3, 2, 1));
        assert!(tree.leaf_stats(0).is_none());
        assert!(tree.leaf_stats(l).is_some() && tree.leaf_stats(r).is_some());
        match tree.arena().node(0).unwrap() {
            Node::Internal(n) => assert!(n.weight.iter().all(|w| w.abs() <= 0.01)),
            _ => panic!("root should be internal"),
        }
    }

    #[test]
    fn split_preserves_output() {
        let mut tree = SoHoTree::new(2, 3, config(0.6)).unwrap();
        if let Some(Node::Leaf(l)) = tree.node_mut(0) {
            l.output = vec![0.3, -0.2, 1.1];
        }
        let before = tree.predict_logits(&[0.2, 0.9]).unwrap();
        tree.split_leaf(0, SplitTest { feature: 0, threshold: 0.0 }).unwrap();
        let after = tree.predict_logits(&[0.2, 0.9]).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn depth_capped_leaf_never_splits() {
        let mut tree = SoHoTree::new(
            1,
            2,
            SoHoTreeConfig {
                max_depth: 1,
                normalize: false,
                ..SoHoTreeConfig::default()
            },
        )
        .unwrap();
        let (l, _) = tree.split_leaf(0, SplitTest { feature: 0, threshold: 0.0 }).unwrap();
        for i in 0..500 {
            let x = i as f64 / 500.0 - 0.5;
            tree.update_leaf_statistics(l, &[x], usize::from(x >= 0.0), 1.0).unwrap();
        }
        assert!(!tree.attempt_split(l).unwrap());
    }

    #[test]
    fn dump_format() {
        let mut tree = SoHoTree::new(2, 2, config(0.3)).unwrap();
        let (l, _) = tree.split_leaf(0, SplitTest { feature: 1, threshold: 0.5 }).unwrap();
        tree.update_leaf_statistics(l, &[0.0, 0.0], 0, 1.0).unwrap();
        let dump = tree.dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("I d=0 f=1 th=0.500000 |w|="));
        assert_eq!(lines[1], "  L d=1 p=[0.5000,0.5000] n=1");
        assert_eq!(lines[2], "  L d=1 p=[0.5000,0.5000] n=0");
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SoHoTree::<f64>::new(2, 2, SoHoTreeConfig { alpha: 1.5, ..Default::default() }).is_err());
        assert!(SoHoTree::<f64>::new(2, 2, SoHoTreeConfig { gamma: 0.0, ..Default::default() }).is_err());
        assert!(SoHoTree::<f64>::new(0, 2, SoHoTreeConfig::default()).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let mut tree = SoHoTree::<f32>::new(2, 2, SoHoTreeConfig::default()).unwrap();
        for i in 0..2000 {
            let x = [(i % 17) as f32 / 17.0 - 0.5, (i % 5) as f32];
            tree.train_step(&x, usize::from(x[0] > 0.0)).unwrap();
        }
        let p = tree.predict_proba(&[0.4, 1.0]).unwrap();
        assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-5);
    }
}
