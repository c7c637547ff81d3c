use std::thread;

use log::warn;

use crate::error::{Error, Result};
use crate::streams::DataStream;

use super::auroc::AurocAccumulator;
use super::classifier::Classifier;
use super::report::EvalReport;

/// Probabilities are clipped here before taking the log loss.
pub const CE_CLIP: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct PrequentialConfig {
    pub n_instances: u64,
    pub window: u64,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Evaluate important-feature counts per instance (one extra forward pass).
    pub track_transparency: bool,
}

impl Default for PrequentialConfig {
    fn default() -> Self {
        Self {
            n_instances: 100_000,
            window: 1000,
            repetitions: 5,
            base_seed: 0,
            track_transparency: true,
        }
    }
}

impl PrequentialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 {
            return Err(Error::config("instances", "must be positive"));
        }
        if self.window == 0 {
            return Err(Error::config("window", "must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("reps", "must be at least 1"));
        }
        Ok(())
    }

    pub fn seed(&self, repetition: usize) -> u64 {
        self.base_seed.wrapping_add(repetition as u64)
    }
}

/// Aggregates over one window of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    /// Instances seen at the end of the window.
    pub instances: u64,
    pub ce_loss: f64,
    pub auroc: Option<f64>,
    /// Node count at the end of the window.
    pub node_count: f64,
    pub grad_norm: Option<f64>,
    pub transparency_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionResult {
    pub seed: u64,
    pub instances: u64,
    pub ce_loss: f64,
    pub auroc: Option<f64>,
    pub accuracy: f64,
    /// Final node count.
    pub node_count: usize,
    pub grad_norm: Option<f64>,
    pub transparency_ratio: Option<f64>,
    /// The stream ended before `n_instances`.
    pub partial: bool,
    pub windows: Vec<WindowRow>,
}

#[derive(Default)]
struct Running {
    n: u64,
    ce: f64,
    grad: f64,
    grad_n: u64,
    ratio: f64,
    ratio_n: u64,
}

impl Running {
    fn grad_mean(&self) -> Option<f64> {
        (self.grad_n > 0).then(|| self.grad / self.grad_n as f64)
    }

    fn ratio_mean(&self) -> Option<f64> {
        (self.ratio_n > 0).then(|| self.ratio / self.ratio_n as f64)
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// One test-then-train pass: every instance is scored before the model sees
/// its label.
pub fn prequential_single<M: Classifier + ?Sized>(
    model: &mut M,
    stream: &mut dyn DataStream,
    config: &PrequentialConfig,
    seed: u64,
) -> Result<RepetitionResult> {
    config.validate()?;
    let k = model.n_classes();
    let p = model.input_dim();
    if stream.n_classes() > k || stream.n_features() != p {
        return Err(Error::contract(format!(
            "stream shape ({} features, {} classes) does not fit the model ({p}, {k})",
            stream.n_features(),
            stream.n_classes()
        )));
    }
    let mut total_auroc = AurocAccumulator::new(k);
    let mut window_auroc = AurocAccumulator::new(k);
    let mut total = Running::default();
    let mut window = Running::default();
    let mut correct = 0u64;
    let mut windows = Vec::new();

    while total.n < config.n_instances {
        let Some(sample) = stream.next() else { break };
        let proba = model.predict_proba(&sample.features)?;
        let ce = -proba[sample.label].max(CE_CLIP).ln();
        correct += u64::from(argmax(&proba) == sample.label);
        total_auroc.add(&proba, sample.label);
        window_auroc.add(&proba, sample.label);
        if config.track_transparency {
            if let Some(counts) = model.transparency_counts(&sample.features) {
                let counts = counts?;
                let ratio: f64 = counts.iter().map(|&c| c as f64 / p as f64).sum();
                for acc in [&mut total, &mut window] {
                    acc.ratio += ratio;
                    acc.ratio_n += counts.len() as u64;
                }
            }
        }

        model.learn_one(&sample.features, sample.label)?;

        let grad = model.grad_norm();
        for acc in [&mut total, &mut window] {
            acc.n += 1;
            acc.ce += ce;
            if let Some(g) = grad {
                acc.grad += g;
                acc.grad_n += 1;
            }
        }
        if window.n == config.window || total.n == config.n_instances {
            windows.push(WindowRow {
                instances: total.n,
                ce_loss: window.ce / window.n as f64,
                auroc: window_auroc.value(),
                node_count: model.node_count() as f64,
                grad_norm: window.grad_mean(),
                transparency_ratio: window.ratio_mean(),
            });
            window = Running::default();
            window_auroc.clear();
        }
    }
    let partial = total.n < config.n_instances;
    if partial {
        warn!("stream ended after {} of {} instances", total.n, config.n_instances);
        if window.n > 0 {
            windows.push(WindowRow {
                instances: total.n,
                ce_loss: window.ce / window.n as f64,
                auroc: window_auroc.value(),
                node_count: model.node_count() as f64,
                grad_norm: window.grad_mean(),
                transparency_ratio: window.ratio_mean(),
            });
        }
    }
    let n = total.n.max(1) as f64;
    Ok(RepetitionResult {
        seed,
        instances: total.n,
        ce_loss: total.ce / n,
        auroc: total_auroc.value(),
        accuracy: correct as f64 / n,
        node_count: model.node_count(),
        grad_norm: total.grad_mean(),
        transparency_ratio: total.ratio_mean(),
        partial,
        windows,
    })
}

/// Runs `config.repetitions` independent passes, repetition `r` seeding both
/// the model and the stream with `base_seed + r`. Repetitions run on separate
/// threads; the result does not depend on scheduling.
pub fn prequential_run<M, S, MF, SF>(
    name: &str,
    make_model: MF,
    make_stream: SF,
    config: &PrequentialConfig,
) -> Result<EvalReport>
where
    M: Classifier,
    S: DataStream,
    MF: Fn(u64, usize, usize) -> Result<M> + Sync,
    SF: Fn(u64) -> Result<S> + Sync,
{
    prequential_run_with_models(name, make_model, make_stream, config).map(|(report, _)| report)
}

/// [`prequential_run`] that also hands back the trained models, one per
/// repetition.
pub fn prequential_run_with_models<M, S, MF, SF>(
    name: &str,
    make_model: MF,
    make_stream: SF,
    config: &PrequentialConfig,
) -> Result<(EvalReport, Vec<M>)>
where
    M: Classifier,
    S: DataStream,
    MF: Fn(u64, usize, usize) -> Result<M> + Sync,
    SF: Fn(u64) -> Result<S> + Sync,
{
    config.validate()?;
    let run = |r: usize| -> Result<(RepetitionResult, M)> {
        let seed = config.seed(r);
        let mut stream = make_stream(seed)?;
        let mut model = make_model(seed, stream.n_features(), stream.n_classes())?;
        let result = prequential_single(&mut model, &mut stream, config, seed)?;
        Ok((result, model))
    };
    let results: Vec<Result<(RepetitionResult, M)>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..config.repetitions).map(|r| scope.spawn(move || run(r))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::contract("repetition thread panicked"))))
            .collect()
    });
    let (reps, models): (Vec<_>, Vec<_>) = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok((EvalReport::new(name, reps), models))
}

/// Mean ratio of important features to `p` over every (instance, visited
/// decision rule) pair among the first `n` instances, without training.
/// `None` if the model has no gates or no rule was visited.
pub fn transparency_series<M: Classifier + ?Sized>(
    model: &M,
    stream: &mut dyn DataStream,
    n: u64,
) -> Result<Option<f64>> {
    let p = model.input_dim() as f64;
    let (mut sum, mut pairs) = (0.0, 0u64);
    for sample in stream.take(n as usize) {
        let Some(counts) = model.transparency_counts(&sample.features) else {
            return Ok(None);
        };
        for c in counts? {
            sum += c as f64 / p;
            pairs += 1;
        }
    }
    Ok((pairs > 0).then(|| sum / pairs as f64))
}
