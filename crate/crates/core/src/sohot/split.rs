//! Hoeffding-bound split decisions shared by the soft Hoeffding tree and the
//! classic Hoeffding tree.

use std::cmp::Ordering;

use crate::error::{Error, Result};

use super::stats::LeafStats;

/// `sqrt(R^2 ln(1/delta) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::contract("hoeffding bound needs n >= 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::contract(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Range of the information gain in bits for `k` classes.
pub fn gain_range(n_classes: usize) -> f64 {
    (n_classes.max(1) as f64).log2()
}

/// A candidate split; `feature == None` is the null split (do not split),
/// which always has gain 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub gain: f64,
}

impl SplitCandidate {
    pub const NULL: SplitCandidate = SplitCandidate {
        feature: None,
        threshold: 0.0,
        gain: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEvaluation {
    pub best: SplitCandidate,
    pub second: SplitCandidate,
    pub gain_difference: f64,
    pub epsilon: f64,
    pub should_split: bool,
}

/// Best threshold of every feature plus the null split, sorted by gain
/// (descending). Exact ties go to the lower feature index; the null split
/// ranks after any feature with equal gain.
pub fn rank_candidates(stats: &LeafStats) -> Vec<SplitCandidate> {
    let mut candidates: Vec<SplitCandidate> = (0..stats.n_features())
        .filter_map(|f| {
            stats.best_threshold(f).map(|(threshold, gain)| SplitCandidate {
                feature: Some(f),
                threshold,
                gain,
            })
        })
        .collect();
    candidates.push(SplitCandidate::NULL);
    candidates.sort_by(|a, b| {
        b.gain
            .partial_cmp(&a.gain)
            .unwrap_or(Ordering::Equal)
            .then_with(|| match (a.feature, b.feature) {
                (Some(x), Some(y)) => x.cmp(&y),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            })
    });
    candidates
}

/// Split if the best candidate beats the runner-up by more than `epsilon`
/// (and is not the null split), or if `epsilon < tau`.
pub fn split_decision(best: &SplitCandidate, second: &SplitCandidate, epsilon: f64, tau: f64) -> bool {
    if best.feature.is_none() {
        return false;
    }
    best.gain - second.gain > epsilon || epsilon < tau
}

/// Runs the split test on a leaf's statistics. Returns `None` when fewer than
/// two classes have been observed.
pub fn evaluate_split(stats: &LeafStats, delta: f64, tau: f64) -> Result<Option<SplitEvaluation>> {
    if stats.observed_classes() < 2 {
        return Ok(None);
    }
    let ranked = rank_candidates(stats);
    let best = ranked[0];
    let second = ranked.get(1).copied().unwrap_or(SplitCandidate::NULL);
    let epsilon = hoeffding_bound(gain_range(stats.n_classes()), delta, stats.total())?;
    Ok(Some(SplitEvaluation {
        best,
        second,
        gain_difference: best.gain - second.gain,
        epsilon,
        should_split: split_decision(&best, &second, epsilon, tau),
    }))
}
