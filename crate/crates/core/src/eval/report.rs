use std::io::Write;

use crate::error::Result;

use super::prequential::{RepetitionResult, WindowRow};

pub const REPORT_HEADER: &str = "instances,ce_loss,auroc,node_count,grad_norm,transparency_ratio";

const REPS_HEADER: &str = "repetition,seed,instances,ce_loss,auroc,accuracy,node_count,transparency_ratio,partial";

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Summary {
    /// `None` for an empty slice; a single value has zero standard error.
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std_error, n })
    }
}

/// Results of all repetitions of one model on one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub repetitions: Vec<RepetitionResult>,
    pub ce: Summary,
    pub auroc: Option<Summary>,
    pub accuracy: Summary,
    pub transparency_ratio: Option<Summary>,
    /// At least one repetition ran out of data.
    pub partial: bool,
}

fn summarize(reps: &[RepetitionResult], f: impl Fn(&RepetitionResult) -> Option<f64>) -> Option<Summary> {
    Summary::of(&reps.iter().filter_map(f).collect::<Vec<_>>())
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn count(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

impl EvalReport {
    /// Panics if `repetitions` is empty.
    pub fn new(model: &str, repetitions: Vec<RepetitionResult>) -> Self {
        assert!(!repetitions.is_empty(), "a report needs at least one repetition");
        Self {
            model: model.to_owned(),
            ce: summarize(&repetitions, |r| Some(r.ce_loss)).expect("non-empty"),
            auroc: summarize(&repetitions, |r| r.auroc),
            accuracy: summarize(&repetitions, |r| Some(r.accuracy)).expect("non-empty"),
            transparency_ratio: summarize(&repetitions, |r| r.transparency_ratio),
            partial: repetitions.iter().any(|r| r.partial),
            repetitions,
        }
    }

    /// Window series averaged over repetitions, row by row.
    pub fn windows(&self) -> Vec<WindowRow> {
        let rows = self.repetitions.iter().map(|r| r.windows.len()).max().unwrap_or(0);
        (0..rows)
            .map(|i| {
                let present: Vec<&WindowRow> = self.repetitions.iter().filter_map(|r| r.windows.get(i)).collect();
                let n = present.len() as f64;
                WindowRow {
                    instances: present[0].instances,
                    ce_loss: present.iter().map(|w| w.ce_loss).sum::<f64>() / n,
                    auroc: mean_of(present.iter().map(|w| w.auroc)),
                    node_count: present.iter().map(|w| w.node_count).sum::<f64>() / n,
                    grad_norm: mean_of(present.iter().map(|w| w.grad_norm)),
                    transparency_ratio: mean_of(present.iter().map(|w| w.transparency_ratio)),
                }
            })
            .collect()
    }

    /// Window rows followed by a whole-stream row whose `instances` field is
    /// `all`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{REPORT_HEADER}")?;
        for w in self.windows() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                w.instances,
                num(w.ce_loss),
                opt(w.auroc),
                count(w.node_count),
                opt(w.grad_norm),
                opt(w.transparency_ratio)
            )?;
        }
        let reps = &self.repetitions;
        let nodes = reps.iter().map(|r| r.node_count as f64).sum::<f64>() / reps.len() as f64;
        writeln!(
            out,
            "all,{},{},{},{},{}",
            num(self.ce.mean),
            opt(self.auroc.map(|s| s.mean)),
            count(nodes),
            opt(mean_of(reps.iter().map(|r| r.grad_norm))),
            opt(self.transparency_ratio.map(|s| s.mean))
        )?;
        Ok(())
    }

    /// One row per repetition, then `mean` and `stderr` rows.
    pub fn write_repetitions_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{REPS_HEADER}")?;
        for (i, r) in self.repetitions.iter().enumerate() {
            writeln!(
                out,
                "{i},{},{},{},{},{},{},{},{}",
                r.seed,
                r.instances,
                num(r.ce_loss),
                opt(r.auroc),
                num(r.accuracy),
                r.node_count,
                opt(r.transparency_ratio),
                r.partial
            )?;
        }
        let nodes = Summary::of(&self.repetitions.iter().map(|r| r.node_count as f64).collect::<Vec<_>>())
            .expect("non-empty");
        let instances = Summary::of(&self.repetitions.iter().map(|r| r.instances as f64).collect::<Vec<_>>())
            .expect("non-empty");
        for (label, pick) in [("mean", 0), ("stderr", 1)] {
            let f = |s: Summary| if pick == 0 { s.mean } else { s.std_error };
            writeln!(
                out,
                "{label},,{},{},{},{},{},{},{}",
                count(f(instances)),
                num(f(self.ce)),
                opt(self.auroc.map(f)),
                num(f(self.accuracy)),
                num(f(nodes)),
                opt(self.transparency_ratio.map(f)),
                self.partial
            )?;
        }
        Ok(())
    }
}
