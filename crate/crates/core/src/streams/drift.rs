use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{ConceptGenerator, DataStream, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftKind {
    #[default]
    None,
    Abrupt,
    Gradual,
    Perturbation,
    Oversample,
}

impl std::str::FromStr for DriftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "abrupt" => Ok(Self::Abrupt),
            "gradual" => Ok(Self::Gradual),
            "perturbation" => Ok(Self::Perturbation),
            "oversample" => Ok(Self::Oversample),
            other => Err(Error::config(
                "drift-kind",
                format!("unknown drift kind `{other}` (none|abrupt|gradual|perturbation|oversample)"),
            )),
        }
    }
}

impl std::fmt::Display for DriftKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Abrupt => "abrupt",
            Self::Gradual => "gradual",
            Self::Perturbation => "perturbation",
            Self::Oversample => "oversample",
        })
    }
}

/// When and how the concept changes.
///
/// `width` is only used by gradual drift, `magnitude` only by perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSchedule {
    pub kind: DriftKind,
    pub positions: Vec<u64>,
    pub width: u64,
    pub magnitude: f64,
}

impl Default for DriftSchedule {
    fn default() -> Self {
        Self {
            kind: DriftKind::None,
            positions: Vec::new(),
            width: 1000,
            magnitude: 0.1,
        }
    }
}

impl DriftSchedule {
    pub fn abrupt(positions: Vec<u64>) -> Self {
        Self {
            kind: DriftKind::Abrupt,
            positions,
            ..Self::default()
        }
    }

    pub fn gradual(positions: Vec<u64>, width: u64) -> Self {
        Self {
            kind: DriftKind::Gradual,
            positions,
            width,
            ..Self::default()
        }
    }

    pub fn perturbation(positions: Vec<u64>, magnitude: f64) -> Self {
        Self {
            kind: DriftKind::Perturbation,
            positions,
            magnitude,
            ..Self::default()
        }
    }

    pub fn validate(&self, n_instances: u64) -> Result<()> {
        if self.positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("drift-at", "positions must be strictly increasing"));
        }
        if let Some(&last) = self.positions.last() {
            if last >= n_instances {
                return Err(Error::config(
                    "drift-at",
                    format!("position {last} is not below the stream length {n_instances}"),
                ));
            }
        }
        if self.kind == DriftKind::Gradual && self.width == 0 {
            return Err(Error::config("drift-width", "must be positive for gradual drift"));
        }
        if !(self.magnitude >= 0.0 && self.magnitude.is_finite()) {
            return Err(Error::config("drift-magnitude", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// Probability that instance `t` uses the concept after drift `index`.
    pub fn ramp(&self, index: usize, t: u64) -> f64 {
        let center = self.positions[index] as f64;
        let start = center - self.width as f64 / 2.0;
        ((t as f64 - start) / self.width as f64).clamp(0.0, 1.0)
    }

    /// Concept index for instance `t`; gradual drift draws from `rng` only
    /// inside a transition window.
    pub fn concept_at(&self, t: u64, rng: &mut ChaCha8Rng) -> usize {
        match self.kind {
            DriftKind::Abrupt => self.positions.iter().take_while(|&&p| p <= t).count(),
            DriftKind::Gradual => {
                for i in 0..self.positions.len() {
                    let p = self.ramp(i, t);
                    if p >= 1.0 {
                        continue;
                    }
                    if p <= 0.0 {
                        return i;
                    }
                    return if rng.random::<f64>() < p { i + 1 } else { i };
                }
                self.positions.len()
            }
            _ => 0,
        }
    }

    fn perturbs(&self, t: u64) -> bool {
        self.kind == DriftKind::Perturbation && self.positions.first().is_none_or(|&p| t >= p)
    }
}

/// A concept generator driven by a drift schedule for a fixed number of
/// instances.
pub struct DriftingStream<G> {
    generator: G,
    schedule: DriftSchedule,
    scales: Vec<f64>,
    rng: ChaCha8Rng,
    n_instances: u64,
    t: u64,
}

impl<G: ConceptGenerator> DriftingStream<G> {
    pub fn new(generator: G, schedule: DriftSchedule, n_instances: u64, rng: ChaCha8Rng) -> Result<Self> {
        schedule.validate(n_instances)?;
        Ok(Self {
            scales: generator.feature_scales(),
            generator,
            schedule,
            rng,
            n_instances,
            t: 0,
        })
    }

    pub fn generator(&self) -> &G {
        &self.generator
    }

    pub fn position(&self) -> u64 {
        self.t
    }
}

impl<G: ConceptGenerator> Iterator for DriftingStream<G> {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        if self.t >= self.n_instances {
            return None;
        }
        let concept = self.schedule.concept_at(self.t, &mut self.rng);
        let mut sample = self.generator.sample(concept, &mut self.rng);
        if self.schedule.perturbs(self.t) {
            for (x, scale) in sample.features.iter_mut().zip(&self.scales) {
                if *scale > 0.0 {
                    *x += self.rng.random_range(-1.0..1.0) * self.schedule.magnitude * scale;
                }
            }
        }
        self.t += 1;
        Some(sample)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.n_instances - self.t) as usize;
        (left, Some(left))
    }
}

impl<G: ConceptGenerator> DataStream for DriftingStream<G> {
    fn n_features(&self) -> usize {
        self.generator.n_features()
    }

    fn n_classes(&self) -> usize {
        self.generator.n_classes()
    }
}
