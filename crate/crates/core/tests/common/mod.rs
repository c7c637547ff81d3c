//! Shared builders for the integration and acceptance tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sohot::sohot::{Node, NodeId, SoHoTree, SoHoTreeConfig, SplitTest};
use sohot::streams::{DataStream, Sample};

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub p: usize,
    pub k: usize,
    pub max_depth: usize,
    pub alpha: f64,
    pub gamma: f64,
    /// Standard deviation of the gate weights.
    pub weight_scale: f64,
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// A soft Hoeffding tree with random topology (root always split when
/// `max_depth > 0`), split tests, gate weights and leaf outputs. Inputs are
/// not normalized.
pub fn random_sohot(rng: &mut ChaCha8Rng, shape: Shape) -> SoHoTree<f64> {
    let config = SoHoTreeConfig {
        alpha: shape.alpha,
        gamma: shape.gamma,
        max_depth: shape.max_depth.max(1),
        normalize: false,
        ..Default::default()
    };
    let mut tree = SoHoTree::new(shape.p, shape.k, config).unwrap();
    let mut frontier: Vec<(NodeId, usize)> = vec![(0, 0)];
    while let Some((id, depth)) = frontier.pop() {
        let grow = depth < shape.max_depth && (depth == 0 || rng.random_bool(0.6));
        if !grow {
            continue;
        }
        let split = SplitTest {
            feature: rng.random_range(0..shape.p),
            threshold: rng.random_range(-1.0..1.0),
        };
        let (l, r) = tree.split_leaf(id, split).unwrap();
        frontier.push((l, depth + 1));
        frontier.push((r, depth + 1));
    }
    for id in 0..tree.arena().node_count() {
        match tree.node_mut(id).unwrap() {
            Node::Internal(n) => {
                for w in &mut n.weight {
                    *w = normal(rng) * shape.weight_scale;
                }
            }
            Node::Leaf(l) => {
                for o in &mut l.output {
                    *o = normal(rng);
                }
            }
        }
    }
    tree
}

/// Random shape within the given caps; alpha is 0 or 1 a tenth of the time
/// each.
pub fn random_shape(rng: &mut ChaCha8Rng, max_p: usize, max_k: usize, max_depth: usize, gamma: f64) -> Shape {
    let alpha = match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random_range(0.0..1.0),
    };
    let p = rng.random_range(1..=max_p);
    Shape {
        p,
        k: rng.random_range(2..=max_k),
        max_depth: rng.random_range(1..=max_depth),
        alpha,
        gamma,
        weight_scale: 1.0 / (p as f64).sqrt(),
    }
}

/// Two classes separated on feature 0 (class 0 in `[0, 4]`, class 1 in
/// `[6, 10]`); feature 1 is uniform noise on `[0, 10]` and feature 2 is
/// constant.
pub fn separable_sample(rng: &mut ChaCha8Rng, class: usize) -> Vec<f64> {
    let f0 = if class == 0 {
        rng.random_range(0.0..4.0)
    } else {
        rng.random_range(6.0..10.0)
    };
    vec![f0, rng.random_range(0.0..10.0), 5.0]
}

/// Endless stationary stream of [`separable_sample`] instances with balanced
/// random labels.
pub struct SeparableStream {
    pub rng: ChaCha8Rng,
}

impl Iterator for SeparableStream {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        let label = usize::from(self.rng.random_bool(0.5));
        Some(Sample {
            features: separable_sample(&mut self.rng, label),
            label,
        })
    }
}

impl DataStream for SeparableStream {
    fn n_features(&self) -> usize {
        3
    }

    fn n_classes(&self) -> usize {
        2
    }
}

/// Softmax cross-entropy computed directly.
pub fn cross_entropy(logits: &[f64], y: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    lse - logits[y]
}
