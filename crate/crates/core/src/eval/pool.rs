use crate::error::{Error, Result};

use super::classifier::Classifier;
use super::prequential::CE_CLIP;

/// Weight of the previous loss estimate in the running average.
pub const POOL_DECAY: f64 = 0.99;

/// What happened to the pool on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolStep {
    /// Member whose prediction was served.
    pub served: usize,
    /// Loss estimates the serving choice was made from.
    pub estimates_before: Vec<Option<f64>>,
    /// Each member's loss on the instance.
    pub losses: Vec<f64>,
    pub estimates_after: Vec<f64>,
    /// Members trained on the instance, in index order.
    pub trained: Vec<usize>,
}

/// Hyperparameter tuning on the stream: the member with the lowest running
/// loss estimate serves predictions and the better half keeps training.
pub struct ModelPool<M> {
    members: Vec<M>,
    estimates: Vec<Option<f64>>,
    decay: f64,
    last_step: Option<PoolStep>,
}

fn argmin(estimates: &[Option<f64>]) -> usize {
    let key = |e: &Option<f64>| e.unwrap_or(f64::INFINITY);
    let mut best = 0;
    for (i, e) in estimates.iter().enumerate() {
        if key(e) < key(&estimates[best]) {
            best = i;
        }
    }
    best
}

impl<M: Classifier> ModelPool<M> {
    pub fn new(members: Vec<M>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::config("model", "a pool needs at least one member"));
        };
        let (p, k) = (first.input_dim(), first.n_classes());
        if members.iter().any(|m| m.input_dim() != p || m.n_classes() != k) {
            return Err(Error::contract("pool members disagree on input or output shape"));
        }
        Ok(Self {
            estimates: vec![None; members.len()],
            members,
            decay: POOL_DECAY,
            last_step: None,
        })
    }

    pub fn with_decay(mut self, decay: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&decay) {
            return Err(Error::config("pool-decay", "must lie in [0, 1)"));
        }
        self.decay = decay;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[M] {
        &self.members
    }

    /// Running loss estimates; `None` until a member has been scored.
    pub fn estimates(&self) -> &[Option<f64>] {
        &self.estimates
    }

    /// Lowest estimate wins, ties go to the lower index, unscored members
    /// count as infinitely bad.
    pub fn serving_index(&self) -> usize {
        argmin(&self.estimates)
    }

    pub fn last_step(&self) -> Option<&PoolStep> {
        self.last_step.as_ref()
    }

    fn train_count(&self) -> usize {
        self.members.len().div_ceil(2)
    }

    /// Serves the best member's prediction for `x`, updates every estimate
    /// with that member's own loss on `y`, then trains the ⌈n/2⌉ members with
    /// the lowest updated estimates.
    pub fn predict_train(&mut self, x: &[f64], y: usize) -> Result<(Vec<f64>, PoolStep)> {
        let served = self.serving_index();
        let estimates_before = self.estimates.clone();
        let predictions = self
            .members
            .iter()
            .map(|m| m.predict_proba(x))
            .collect::<Result<Vec<_>>>()?;
        let losses: Vec<f64> = predictions.iter().map(|p| -p[y].max(CE_CLIP).ln()).collect();
        for (e, &l) in self.estimates.iter_mut().zip(&losses) {
            *e = Some(match *e {
                None => l,
                Some(old) => self.decay * old + (1.0 - self.decay) * l,
            });
        }
        let estimates_after: Vec<f64> = self.estimates.iter().map(|e| e.expect("just updated")).collect();
        let mut order: Vec<usize> = (0..self.members.len()).collect();
        order.sort_by(|&a, &b| estimates_after[a].total_cmp(&estimates_after[b]).then(a.cmp(&b)));
        let mut trained: Vec<usize> = order[..self.train_count()].to_vec();
        trained.sort_unstable();
        for &i in &trained {
            self.members[i].learn_one(x, y)?;
        }
        let step = PoolStep {
            served,
            estimates_before,
            losses,
            estimates_after,
            trained,
        };
        self.last_step = Some(step.clone());
        Ok((predictions.into_iter().nth(served).expect("served index in range"), step))
    }
}

impl<M: Classifier> Classifier for ModelPool<M> {
    fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    fn n_classes(&self) -> usize {
        self.members[0].n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.members[self.serving_index()].predict_proba(x)
    }

    fn learn_one(&mut self, x: &[f64], y: usize) -> Result<()> {
        self.predict_train(x, y).map(|_| ())
    }

    fn node_count(&self) -> usize {
        self.members[self.serving_index()].node_count()
    }

    fn grad_norm(&self) -> Option<f64> {
        self.members[self.serving_index()].grad_norm()
    }

    fn transparency_counts(&self, x: &[f64]) -> Option<Result<Vec<usize>>> {
        self.members[self.serving_index()].transparency_counts(x)
    }

    fn dump(&self) -> String {
        self.members[self.serving_index()].dump()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Always predicts `class` with probability `confidence`.
    struct Fixed {
        class: usize,
        confidence: f64,
        trained: u64,
    }

    impl Classifier for Fixed {
        fn input_dim(&self) -> usize {
            1
        }
        fn n_classes(&self) -> usize {
            2
        }
        fn predict_proba(&self, _x: &[f64]) -> Result<Vec<f64>> {
            let mut p = vec![1.0 - self.confidence; 2];
            p[self.class] = self.confidence;
            Ok(p)
        }
        fn learn_one(&mut self, _x: &[f64], _y: usize) -> Result<()> {
            self.trained += 1;
            Ok(())
        }
        fn node_count(&self) -> usize {
            1
        }
        fn dump(&self) -> String {
            String::new()
        }
    }

    fn fixed(class: usize, confidence: f64) -> Fixed {
        Fixed { class, confidence, trained: 0 }
    }

    #[test]
    fn correct_member_takes_over() {
        let mut pool = ModelPool::new(vec![fixed(0, 0.9), fixed(1, 0.9)]).unwrap();
        assert_eq!(pool.serving_index(), 0);
        let (proba, step) = pool.predict_train(&[0.0], 1).unwrap();
        assert_eq!(step.served, 0);
        assert_eq!(proba[0], 0.9);
        for _ in 0..10 {
            pool.predict_train(&[0.0], 1).unwrap();
            assert_eq!(pool.serving_index(), 1);
        }
    }

    #[test]
    fn half_the_pool_trains() {
        let mut pool = ModelPool::new((0..4).map(|i| fixed(i % 2, 0.6 + 0.1 * (i / 2) as f64)).collect()).unwrap();
        for t in 0..50 {
            let (_, step) = pool.predict_train(&[0.0], t % 2).unwrap();
            assert_eq!(step.trained.len(), 2);
        }
        let total: u64 = pool.members().iter().map(|m| m.trained).sum();
        assert_eq!(total, 100);
        let mut odd = ModelPool::new((0..5).map(|_| fixed(0, 0.7)).collect()).unwrap();
        assert_eq!(odd.predict_train(&[0.0], 0).unwrap().1.trained, vec![0, 1, 2]);
    }

    #[test]
    fn ema_step() {
        let mut pool = ModelPool::new(vec![fixed(0, 0.5), fixed(0, 0.5)]).unwrap();
        pool.estimates[0] = Some(0.0);
        let (_, step) = pool.predict_train(&[0.0], 0).unwrap();
        let l = std::f64::consts::LN_2;
        assert!((step.estimates_after[0] - 0.01 * l).abs() < 1e-15);
        // a fresh estimate takes the first loss as is
        assert!((step.estimates_after[1] - l).abs() < 1e-15);
    }

    #[test]
    fn single_member_is_the_member() {
        let mut pool = ModelPool::new(vec![fixed(1, 0.8)]).unwrap();
        for t in 0..10 {
            let (p, step) = pool.predict_train(&[0.0], t % 2).unwrap();
            assert_eq!(p[1], 0.8);
            assert_eq!(step.trained, vec![0]);
        }
        assert_eq!(pool.members()[0].trained, 10);
    }

    #[test]
    fn empty_pool_rejected() {
        assert!(ModelPool::<Fixed>::new(vec![]).is_err());
    }
}
