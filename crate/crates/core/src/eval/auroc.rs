use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of (scores, label) pairs kept before reservoir sampling starts.
pub const AUROC_CAPACITY: usize = 1_000_000;

/// Rank-based AUROC of `scores` for `positive[i] == true` against the rest,
/// with average ranks for ties. `None` unless both groups are non-empty.
pub fn auroc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), positive.len());
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mean_rank = (i + j + 2) as f64 / 2.0;
        rank_sum += mean_rank * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Collects predicted class probabilities and labels over a stream. Binary
/// streams score class 1; multiclass streams average one-vs-rest AUROC over
/// the classes that occur.
#[derive(Debug, Clone)]
pub struct AurocAccumulator {
    n_classes: usize,
    capacity: usize,
    scores: Vec<f64>,
    labels: Vec<usize>,
    seen: u64,
    rng: ChaCha8Rng,
}

impl AurocAccumulator {
    pub fn new(n_classes: usize) -> Self {
        Self::with_capacity(n_classes, AUROC_CAPACITY)
    }

    pub fn with_capacity(n_classes: usize, capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            n_classes,
            capacity,
            scores: Vec::new(),
            labels: Vec::new(),
            seen: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn add(&mut self, proba: &[f64], label: usize) {
        assert_eq!(proba.len(), self.n_classes);
        self.seen += 1;
        if self.labels.len() < self.capacity {
            self.scores.extend_from_slice(proba);
            self.labels.push(label);
            return;
        }
        let j = self.rng.random_range(0..self.seen) as usize;
        if j < self.capacity {
            let k = self.n_classes;
            self.scores[j * k..(j + 1) * k].copy_from_slice(proba);
            self.labels[j] = label;
        }
    }

    pub fn clear(&mut self) {
        self.scores.clear();
        self.labels.clear();
        self.seen = 0;
    }

    fn class_auroc(&self, class: usize) -> Option<f64> {
        let k = self.n_classes;
        let scores: Vec<f64> = (0..self.labels.len()).map(|i| self.scores[i * k + class]).collect();
        let positive: Vec<bool> = self.labels.iter().map(|&l| l == class).collect();
        auroc(&scores, &positive)
    }

    pub fn value(&self) -> Option<f64> {
        if self.n_classes == 2 {
            return self.class_auroc(1);
        }
        let per_class: Vec<f64> = (0..self.n_classes).filter_map(|c| self.class_auroc(c)).collect();
        (!per_class.is_empty()).then(|| per_class.iter().sum::<f64>() / per_class.len() as f64)
    }
}
