//! Binary tree arena with soft routing, shared by the soft Hoeffding tree and
//! the fixed-topology soft tree.
//!
//! Internal node `i` sends an instance left with probability
//! `alpha * S(<w_i, x>) + (1 - alpha) * 1(x[a] < theta)`. With `alpha = 1` the
//! split test is ignored and the node behaves like a plain soft-tree gate.
//! Subtrees reached with probability exactly zero are skipped in both passes.

use crate::error::{check_len, Error, Result};
use crate::math::SmoothStep;
use crate::scalar::{dot, Scalar};

pub type NodeId = usize;

/// Univariate test `x[feature] < threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitTest<F> {
    pub feature: usize,
    pub threshold: F,
}

impl<F: Scalar> SplitTest<F> {
    #[inline]
    pub fn goes_left(&self, x: &[F]) -> bool {
        x[self.feature] < self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InternalNode<F> {
    pub weight: Vec<F>,
    /// `None` for soft-tree nodes that only use the gate.
    pub split: Option<SplitTest<F>>,
    pub left: NodeId,
    pub right: NodeId,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafNode<F> {
    pub output: Vec<F>,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node<F> {
    Internal(InternalNode<F>),
    Leaf(LeafNode<F>),
}

impl<F> Node<F> {
    pub fn depth(&self) -> usize {
        match self {
            Node::Internal(n) => n.depth,
            Node::Leaf(l) => l.depth,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }
}

/// Whether zero-probability subtrees are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Traversal {
    #[default]
    Pruned,
    /// Visits every node; only useful to check that pruning is exact.
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind<F> {
    Leaf,
    Internal {
        preactivation: F,
        probability: F,
        /// Subtree output `a(left)`; `None` when the left child was not visited.
        left_output: Option<Vec<F>>,
        right_output: Option<Vec<F>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry<F> {
    pub node: NodeId,
    /// Probability of reaching `node` from the root.
    pub reach: F,
    pub kind: TraceKind<F>,
}

/// Per-instance record of a forward pass, in post-order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace<F> {
    pub entries: Vec<TraceEntry<F>>,
}

impl<F: Scalar> Trace<F> {
    /// Visited leaves with their reach probabilities.
    pub fn leaves(&self) -> impl Iterator<Item = (NodeId, F)> + '_ {
        self.entries
            .iter()
            .filter(|e| matches!(e.kind, TraceKind::Leaf))
            .map(|e| (e.node, e.reach))
    }

    /// Visited internal nodes with their reach probabilities.
    pub fn internals(&self) -> impl Iterator<Item = (NodeId, F)> + '_ {
        self.entries
            .iter()
            .filter(|e| matches!(e.kind, TraceKind::Internal { .. }))
            .map(|e| (e.node, e.reach))
    }
}

/// Sparse gradients: only visited nodes appear.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradients<F> {
    pub input: Vec<F>,
    pub weights: Vec<(NodeId, Vec<F>)>,
    pub outputs: Vec<(NodeId, Vec<F>)>,
}

/// Probability of routing `x` to the left child of `node`.
pub fn routing_probability<F: Scalar>(
    node: &InternalNode<F>,
    x: &[F],
    alpha: F,
    gate: &SmoothStep<F>,
) -> Result<F> {
    check_len(node.weight.len(), x.len())?;
    blend(alpha, gate.value(dot(&node.weight, x)), node.split.as_ref(), x)
}

/// Evaluates the blend so that exact 0 and 1 survive rounding: with the
/// indicator on, `1 - alpha * (1 - s)` is exactly 1 when `s` is 1.
#[inline]
fn blend<F: Scalar>(alpha: F, s: F, split: Option<&SplitTest<F>>, x: &[F]) -> Result<F> {
    if alpha == F::one() {
        return Ok(s);
    }
    let split = split.ok_or_else(|| Error::contract("node without split test needs alpha = 1"))?;
    let indicator = split.goes_left(x);
    Ok(if alpha == F::zero() {
        if indicator {
            F::one()
        } else {
            F::zero()
        }
    } else if indicator {
        F::one() - alpha * (F::one() - s)
    } else {
        alpha * s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeArena<F> {
    nodes: Vec<Node<F>>,
    input_dim: usize,
    n_classes: usize,
}

impl<F: Scalar> TreeArena<F> {
    /// A single leaf holding `output`.
    pub fn single_leaf(input_dim: usize, output: Vec<F>) -> Self {
        let n_classes = output.len();
        Self {
            nodes: vec![Node::Leaf(LeafNode { output, depth: 0 })],
            input_dim,
            n_classes,
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn nodes(&self) -> &[Node<F>] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&Node<F>> {
        self.nodes.get(id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut Node<F>> {
        self.nodes.get_mut(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn internal_count(&self) -> usize {
        self.node_count() - self.leaf_count()
    }

    pub fn leaf_ids(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_leaf())
            .collect()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(Node::depth).max().unwrap_or(0)
    }

    /// Turns leaf `id` into an internal node with the given gate weight and
    /// split test. Both new leaves start with a copy of the old leaf output,
    /// so the tree output does not jump at the moment of splitting.
    pub fn split_leaf(
        &mut self,
        id: NodeId,
        weight: Vec<F>,
        split: Option<SplitTest<F>>,
    ) -> Result<(NodeId, NodeId)> {
        check_len(self.input_dim, weight.len())?;
        if let Some(s) = &split {
            if s.feature >= self.input_dim {
                return Err(Error::contract(format!(
                    "split feature {} out of range for {} inputs",
                    s.feature, self.input_dim
                )));
            }
        }
        let (output, depth) = match self.nodes.get(id) {
            Some(Node::Leaf(leaf)) => (leaf.output.clone(), leaf.depth),
            Some(Node::Internal(_)) => {
                return Err(Error::contract(format!("node {id} is not a leaf")))
            }
            None => return Err(Error::contract(format!("node {id} does not exist"))),
        };
        let left = self.nodes.len();
        let right = left + 1;
        self.nodes.push(Node::Leaf(LeafNode {
            output: output.clone(),
            depth: depth + 1,
        }));
        self.nodes.push(Node::Leaf(LeafNode {
            output,
            depth: depth + 1,
        }));
        self.nodes[id] = Node::Internal(InternalNode {
            weight,
            split,
            left,
            right,
            depth,
        });
        Ok((left, right))
    }

    /// Computes the tree output `sum_l P(x -> l) o_l` through the subtree
    /// recurrence `a(i) = p_i a(left) + (1 - p_i) a(right)`.
    pub fn forward(
        &self,
        x: &[F],
        alpha: F,
        gate: &SmoothStep<F>,
        traversal: Traversal,
    ) -> Result<(Vec<F>, Trace<F>)> {
        check_len(self.input_dim, x.len())?;
        let mut trace = Trace {
            entries: Vec::with_capacity(self.nodes.len()),
        };
        let logits = self.visit(Self::ROOT, F::one(), x, alpha, gate, traversal, &mut trace)?;
        Ok((logits, trace))
    }

    #[allow(clippy::too_many_arguments)]
    fn visit(
        &self,
        id: NodeId,
        reach: F,
        x: &[F],
        alpha: F,
        gate: &SmoothStep<F>,
        traversal: Traversal,
        trace: &mut Trace<F>,
    ) -> Result<Vec<F>> {
        match &self.nodes[id] {
            Node::Leaf(leaf) => {
                trace.entries.push(TraceEntry {
                    node: id,
                    reach,
                    kind: TraceKind::Leaf,
                });
                Ok(leaf.output.clone())
            }
            Node::Internal(node) => {
                let preactivation = dot(&node.weight, x);
                let p = blend(alpha, gate.value(preactivation), node.split.as_ref(), x)?;
                let q = F::one() - p;
                let dense = traversal == Traversal::Dense;
                let left_output = if p > F::zero() || dense {
                    Some(self.visit(node.left, reach * p, x, alpha, gate, traversal, trace)?)
                } else {
                    None
                };
                let right_output = if q > F::zero() || dense {
                    Some(self.visit(node.right, reach * q, x, alpha, gate, traversal, trace)?)
                } else {
                    None
                };
                let out = match (&left_output, &right_output) {
                    (Some(l), Some(r)) => l.iter().zip(r).map(|(&a, &b)| p * a + q * b).collect(),
                    (Some(l), None) => l.iter().map(|&a| p * a).collect(),
                    (None, Some(r)) => r.iter().map(|&b| q * b).collect(),
                    (None, None) => unreachable!("p and 1 - p cannot both be zero"),
                };
                trace.entries.push(TraceEntry {
                    node: id,
                    reach,
                    kind: TraceKind::Internal {
                        preactivation,
                        probability: p,
                        left_output,
                        right_output,
                    },
                });
                Ok(out)
            }
        }
    }

    /// Back-propagates `grad_output = dL/dT(x)` through the trace of a forward
    /// pass on the same `x` and tree state.
    ///
    /// The indicator term of the routing function is piecewise constant and
    /// contributes nothing; all gradient flows through `alpha * S`.
    pub fn backward(
        &self,
        x: &[F],
        trace: &Trace<F>,
        grad_output: &[F],
        alpha: F,
        gate: &SmoothStep<F>,
    ) -> Result<Gradients<F>> {
        check_len(self.input_dim, x.len())?;
        check_len(self.n_classes, grad_output.len())?;
        let mut grads = Gradients {
            input: vec![F::zero(); self.input_dim],
            weights: Vec::new(),
            outputs: Vec::new(),
        };
        for entry in &trace.entries {
            let node = self
                .nodes
                .get(entry.node)
                .ok_or_else(|| Error::contract(format!("trace names missing node {}", entry.node)))?;
            match (node, &entry.kind) {
                (Node::Leaf(_), TraceKind::Leaf) => {
                    let g = grad_output.iter().map(|&g| entry.reach * g).collect();
                    grads.outputs.push((entry.node, g));
                }
                (
                    Node::Internal(internal),
                    TraceKind::Internal {
                        preactivation,
                        left_output,
                        right_output,
                        ..
                    },
                ) => {
                    // A child is skipped only when the gate saturated (S' = 0)
                    // or alpha = 0, so its missing output carries no gradient.
                    let d = match (left_output, right_output) {
                        (Some(l), Some(r)) => {
                            check_len(self.n_classes, l.len())?;
                            check_len(self.n_classes, r.len())?;
                            grad_output
                                .iter()
                                .zip(l.iter().zip(r))
                                .fold(F::zero(), |acc, (&g, (&a, &b))| acc + g * (a - b))
                        }
                        _ => F::zero(),
                    };
                    let coef = entry.reach * d * alpha * gate.derivative(*preactivation);
                    let gw: Vec<F> = x.iter().map(|&xi| coef * xi).collect();
                    for (gx, &w) in grads.input.iter_mut().zip(&internal.weight) {
                        *gx = *gx + coef * w;
                    }
                    grads.weights.push((entry.node, gw));
                }
                _ => {
                    return Err(Error::contract(format!(
                        "trace entry for node {} does not match the tree",
                        entry.node
                    )))
                }
            }
        }
        Ok(grads)
    }
}
