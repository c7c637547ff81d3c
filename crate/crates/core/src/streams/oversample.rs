use log::warn;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{DataStream, Sample};

/// Share of instances in each context that carry the context's class.
pub const OVERSAMPLE_FRACTION: f64 = 0.75;

const DEFAULT_CONTEXTS: u64 = 10;
const MAX_REJECTIONS: u64 = 100_000;

/// Injects abrupt drifts into `inner` by oversampling one randomly chosen
/// class per context. With a single class the operator passes `inner`
/// through unchanged.
pub struct OversampleDrift<S> {
    inner: S,
    boundaries: Vec<u64>,
    n_instances: u64,
    fraction: f64,
    rng: ChaCha8Rng,
    context: usize,
    class: usize,
    t: u64,
    done: bool,
}

impl<S: DataStream> OversampleDrift<S> {
    /// `positions` are the context boundaries; an empty list splits the
    /// stream into ten equal contexts.
    pub fn new(inner: S, positions: Vec<u64>, n_instances: u64, mut rng: ChaCha8Rng) -> Result<Self> {
        if positions.windows(2).any(|w| w[0] >= w[1]) || positions.last().is_some_and(|&p| p >= n_instances) {
            return Err(Error::config(
                "drift-at",
                "positions must be strictly increasing and below the stream length",
            ));
        }
        let boundaries = if positions.is_empty() {
            (1..DEFAULT_CONTEXTS)
                .map(|i| n_instances * i / DEFAULT_CONTEXTS)
                .filter(|&p| p > 0)
                .collect()
        } else {
            positions
        };
        let k = inner.n_classes();
        let class = if k > 1 { rng.random_range(0..k) } else { 0 };
        Ok(Self {
            inner,
            boundaries,
            n_instances,
            fraction: OVERSAMPLE_FRACTION,
            rng,
            context: 0,
            class,
            t: 0,
            done: false,
        })
    }

    /// Class oversampled in the current context.
    pub fn context_class(&self) -> usize {
        self.class
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    fn draw(&mut self, want_class: bool) -> Option<Sample> {
        for _ in 0..MAX_REJECTIONS {
            let s = self.inner.next()?;
            if (s.label == self.class) == want_class {
                return Some(s);
            }
        }
        warn!(
            "oversampling gave up after {MAX_REJECTIONS} rejected draws at instance {}; truncating",
            self.t
        );
        None
    }
}

impl<S: DataStream> Iterator for OversampleDrift<S> {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        if self.done || self.t >= self.n_instances {
            return None;
        }
        let k = self.inner.n_classes();
        let sample = if k <= 1 {
            self.inner.next()
        } else {
            while self.boundaries.get(self.context).is_some_and(|&b| self.t >= b) {
                self.context += 1;
                self.class = self.rng.random_range(0..k);
            }
            let want = self.rng.random::<f64>() < self.fraction;
            self.draw(want)
        };
        match sample {
            Some(s) => {
                self.t += 1;
                Some(s)
            }
            None => {
                warn!(
                    "oversampled stream ended after {} of {} instances; truncating",
                    self.t, self.n_instances
                );
                self.done = true;
                None
            }
        }
    }
}

impl<S: DataStream> DataStream for OversampleDrift<S> {
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }
}
