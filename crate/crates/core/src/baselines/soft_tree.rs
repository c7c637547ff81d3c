use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::math::{softmax, softmax_cross_entropy, Adam, AdamConfig, RunningNormalizer, SmoothStep};
use crate::scalar::{l2_norm, Scalar};
use crate::sohot::{
    dump_arena, transparency_count, Diagnostics, Gradients, Node, SoHoTree, Trace, Traversal,
    TreeArena,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SoftTreeConfig<F> {
    pub depth: usize,
    pub gamma: F,
    pub learning_rate: F,
    pub normalize: bool,
    pub normalizer_momentum: F,
    /// Half-width of the uniform initialization of all weights.
    pub init_scale: F,
    pub seed: u64,
}

impl<F: Scalar> Default for SoftTreeConfig<F> {
    fn default() -> Self {
        Self {
            depth: 7,
            gamma: F::one(),
            learning_rate: F::lit(1e-2),
            normalize: true,
            normalizer_momentum: F::lit(0.99),
            init_scale: F::lit(0.05),
            seed: 0,
        }
    }
}

impl<F: Scalar> SoftTreeConfig<F> {
    /// The same configuration in another scalar type.
    pub fn cast<G: Scalar>(&self) -> SoftTreeConfig<G> {
        let c = |v: F| G::lit(v.to_f64_lossy());
        SoftTreeConfig {
            depth: self.depth,
            gamma: c(self.gamma),
            learning_rate: c(self.learning_rate),
            normalize: self.normalize,
            normalizer_momentum: c(self.normalizer_momentum),
            init_scale: c(self.init_scale),
            seed: self.seed,
        }
    }
}

/// Complete soft decision tree routed only by the smooth-step gate.
#[derive(Debug, Clone)]
pub struct SoftTree<F> {
    gate: SmoothStep<F>,
    arena: TreeArena<F>,
    optimizers: Vec<Adam<F>>,
    normalizer: Option<RunningNormalizer<F>>,
    last_grad_norm: Option<F>,
}

impl<F: Scalar> SoftTree<F> {
    pub fn new(input_dim: usize, n_classes: usize, config: SoftTreeConfig<F>) -> Result<Self> {
        if config.depth == 0 {
            return Err(Error::config("max-depth", "soft tree depth must be at least 1"));
        }
        if input_dim == 0 || n_classes == 0 {
            return Err(Error::contract("input dimension and class count must be positive"));
        }
        if !(config.learning_rate > F::zero()) {
            return Err(Error::config("learning-rate", "must be positive"));
        }
        SmoothStep::<F>::new(config.gamma).map_err(|_| Error::config("gamma", "must be positive"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let scale = config.init_scale;
        let mut draw = |n: usize| -> Vec<F> {
            (0..n)
                .map(|_| F::lit(rng.random::<f64>() * 2.0 - 1.0) * scale)
                .collect()
        };
        let mut arena = TreeArena::single_leaf(input_dim, vec![F::zero(); n_classes]);
        let mut frontier = vec![TreeArena::<F>::ROOT];
        for _ in 0..config.depth {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for id in frontier {
                let (l, r) = arena.split_leaf(id, draw(input_dim), None)?;
                next.extend([l, r]);
            }
            frontier = next;
        }
        for id in frontier {
            if let Some(Node::Leaf(leaf)) = arena.node_mut(id) {
                leaf.output = draw(n_classes);
            }
        }
        let mut tree = Self::from_arena(arena, config.gamma, config.learning_rate)?;
        tree.normalizer = config
            .normalize
            .then(|| RunningNormalizer::new(input_dim, config.normalizer_momentum));
        Ok(tree)
    }

    /// Soft tree with an explicit topology and weights; split tests are
    /// dropped. No input normalization.
    pub fn from_arena(arena: TreeArena<F>, gamma: F, learning_rate: F) -> Result<Self> {
        let gate = SmoothStep::new(gamma)?;
        let mut arena = arena;
        let adam = AdamConfig::with_learning_rate(learning_rate);
        let mut optimizers = Vec::with_capacity(arena.node_count());
        for id in 0..arena.node_count() {
            match arena.node_mut(id) {
                Some(Node::Internal(n)) => {
                    n.split = None;
                    optimizers.push(Adam::new(n.weight.len(), adam));
                }
                Some(Node::Leaf(l)) => optimizers.push(Adam::new(l.output.len(), adam)),
                None => unreachable!(),
            }
        }
        Ok(Self {
            gate,
            arena,
            optimizers,
            normalizer: None,
            last_grad_norm: None,
        })
    }

    /// Copies the topology and weights of a soft Hoeffding tree.
    pub fn from_sohot(tree: &SoHoTree<F>) -> Result<Self> {
        Self::from_arena(
            tree.arena().clone(),
            tree.gate().gamma(),
            tree.config().learning_rate,
        )
    }

    pub fn arena(&self) -> &TreeArena<F> {
        &self.arena
    }

    pub fn node_mut(&mut self, id: usize) -> Option<&mut Node<F>> {
        self.arena.node_mut(id)
    }

    pub fn input_dim(&self) -> usize {
        self.arena.input_dim()
    }

    pub fn n_classes(&self) -> usize {
        self.arena.n_classes()
    }

    pub fn forward(&self, x: &[F]) -> Result<(Vec<F>, Trace<F>)> {
        self.arena.forward(x, F::one(), &self.gate, Traversal::Pruned)
    }

    pub fn forward_with(&self, x: &[F], traversal: Traversal) -> Result<(Vec<F>, Trace<F>)> {
        self.arena.forward(x, F::one(), &self.gate, traversal)
    }

    pub fn backward(&self, x: &[F], trace: &Trace<F>, grad_output: &[F]) -> Result<Gradients<F>> {
        self.arena.backward(x, trace, grad_output, F::one(), &self.gate)
    }

    fn prepare_input(&self, x: &[F]) -> Result<Vec<F>> {
        check_len(self.input_dim(), x.len())?;
        Ok(match &self.normalizer {
            Some(norm) => norm.apply(x),
            None => x.to_vec(),
        })
    }

    pub fn predict_logits(&self, x: &[F]) -> Result<Vec<F>> {
        let z = self.prepare_input(x)?;
        Ok(self.forward(&z)?.0)
    }

    pub fn predict_proba(&self, x: &[F]) -> Result<Vec<F>> {
        Ok(softmax(&self.predict_logits(x)?))
    }

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
        for (id, g) in grads.weights.iter().chain(&grads.outputs) {
            if g.iter().all(|v| *v == F::zero()) {
                continue;
            }
            let params = match self.arena.node_mut(*id) {
                Some(Node::Internal(n)) => &mut n.weight,
                Some(Node::Leaf(l)) => &mut l.output,
                None => unreachable!(),
            };
            self.optimizers[*id].update(params, g)?;
        }
        Ok(loss)
    }

    pub fn transparency_counts(&self, x: &[F]) -> Result<Vec<usize>> {
        let z = self.prepare_input(x)?;
        let (_, trace) = self.forward(&z)?;
        Ok(trace
            .internals()
            .map(|(id, _)| match self.arena.node(id) {
                Some(Node::Internal(n)) => transparency_count(&n.weight, &z, F::one()),
                _ => unreachable!(),
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

    pub fn dump(&self) -> String {
        dump_arena(&self.arena, |_| 0)
    }
}
