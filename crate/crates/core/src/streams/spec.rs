use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{
    csv_stream, AgrawalGenerator, ConceptGenerator, DataStream, DriftKind, DriftSchedule, DriftingStream,
    HyperplaneGenerator, LabelColumn, OversampleDrift, RbfGenerator, Sample, SeaGenerator, SEA_THRESHOLDS,
};

/// Stream source and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    Sea {
        thresholds: Vec<f64>,
        noise: f64,
    },
    Agrawal {
        functions: Vec<u8>,
        noise: f64,
    },
    Hyperplane {
        n_features: usize,
        n_drift_features: usize,
        magnitude: f64,
        flip_probability: f64,
        noise: f64,
    },
    Rbf {
        n_centroids: usize,
        n_classes: usize,
        n_features: usize,
        speed: f64,
    },
    Csv {
        path: PathBuf,
        label_column: LabelColumn,
        shuffle: bool,
    },
}

impl GeneratorKind {
    pub fn sea() -> Self {
        Self::Sea {
            thresholds: SEA_THRESHOLDS.to_vec(),
            noise: 0.0,
        }
    }

    pub fn agrawal() -> Self {
        Self::Agrawal {
            functions: (1..=10).collect(),
            noise: 0.0,
        }
    }

    pub fn hyperplane(magnitude: f64) -> Self {
        Self::Hyperplane {
            n_features: 10,
            n_drift_features: 10,
            magnitude,
            flip_probability: 0.1,
            noise: 0.05,
        }
    }

    pub fn rbf(speed: f64) -> Self {
        Self::Rbf {
            n_centroids: 50,
            n_classes: 5,
            n_features: 10,
            speed,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sea { .. } => "sea",
            Self::Agrawal { .. } => "agrawal",
            Self::Hyperplane { .. } => "hyperplane",
            Self::Rbf { .. } => "rbf",
            Self::Csv { .. } => "csv",
        }
    }
}

/// Everything needed to reproduce a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub generator: GeneratorKind,
    pub n_instances: u64,
    pub drift: DriftSchedule,
    pub seed: u64,
}

const OVERSAMPLE_SEED_SALT: u64 = 0x5eed_0f_c1a55;

struct Truncated<S> {
    inner: S,
    left: u64,
}

impl<S: DataStream> Iterator for Truncated<S> {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        self.inner.next()
    }
}

impl<S: DataStream> DataStream for Truncated<S> {
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }
}

impl StreamSpec {
    pub fn new(generator: GeneratorKind, n_instances: u64, seed: u64) -> Self {
        Self {
            generator,
            n_instances,
            drift: DriftSchedule::default(),
            seed,
        }
    }

    pub fn with_drift(mut self, drift: DriftSchedule) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 {
            return Err(Error::config("instances", "must be positive"));
        }
        self.drift.validate(self.n_instances)
    }

    /// Instantiates the stream. Identical specs yield identical sequences.
    pub fn build(&self) -> Result<Box<dyn DataStream>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match &self.generator {
            GeneratorKind::Sea { thresholds, noise } => {
                self.wrap(SeaGenerator::new(thresholds.clone(), *noise)?, rng)
            }
            GeneratorKind::Agrawal { functions, noise } => {
                self.wrap(AgrawalGenerator::new(functions.clone(), *noise)?, rng)
            }
            GeneratorKind::Hyperplane {
                n_features,
                n_drift_features,
                magnitude,
                flip_probability,
                noise,
            } => {
                let gen = HyperplaneGenerator::new(
                    *n_features,
                    *n_drift_features,
                    *magnitude,
                    *flip_probability,
                    *noise,
                    &mut rng,
                )?;
                self.wrap(gen, rng)
            }
            GeneratorKind::Rbf {
                n_centroids,
                n_classes,
                n_features,
                speed,
            } => {
                let gen = RbfGenerator::new(*n_centroids, *n_classes, *n_features, *speed, &mut rng)?;
                self.wrap(gen, rng)
            }
            GeneratorKind::Csv {
                path,
                label_column,
                shuffle,
            } => {
                let (stream, _) = csv_stream(path, label_column, shuffle.then_some(self.seed))?;
                match self.drift.kind {
                    DriftKind::None => Ok(Box::new(Truncated {
                        inner: stream,
                        left: self.n_instances,
                    })),
                    DriftKind::Oversample => Ok(Box::new(OversampleDrift::new(
                        stream,
                        self.drift.positions.clone(),
                        self.n_instances,
                        self.oversample_rng(),
                    )?)),
                    other => Err(Error::config(
                        "drift-kind",
                        format!("`{other}` drift needs a synthetic generator; CSV streams support none|oversample"),
                    )),
                }
            }
        }
    }

    fn oversample_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ OVERSAMPLE_SEED_SALT)
    }

    fn wrap<G: ConceptGenerator + 'static>(&self, gen: G, rng: ChaCha8Rng) -> Result<Box<dyn DataStream>> {
        if self.drift.kind == DriftKind::Oversample {
            let inner = DriftingStream::new(gen, DriftSchedule::default(), u64::MAX, rng)?;
            Ok(Box::new(OversampleDrift::new(
                inner,
                self.drift.positions.clone(),
                self.n_instances,
                self.oversample_rng(),
            )?))
        } else {
            Ok(Box::new(DriftingStream::new(gen, self.drift.clone(), self.n_instances, rng)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_specs_identical_streams() {
        for gen in [
            GeneratorKind::sea(),
            GeneratorKind::agrawal(),
            GeneratorKind::hyperplane(0.001),
            GeneratorKind::rbf(0.001),
        ] {
            let spec = StreamSpec::new(gen, 500, 9).with_drift(DriftSchedule::abrupt(vec![250]));
            let a: Vec<_> = spec.build().unwrap().collect();
            let b: Vec<_> = spec.build().unwrap().collect();
            assert_eq!(a.len(), 500);
            assert_eq!(a, b);
            let c: Vec<_> = spec.clone().with_seed(10).build().unwrap().collect();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn dimensions_constant() {
        let spec = StreamSpec::new(GeneratorKind::rbf(0.01), 1000, 1).with_drift(DriftSchedule {
            kind: DriftKind::Oversample,
            ..DriftSchedule::default()
        });
        let stream = spec.build().unwrap();
        let (p, k) = (stream.n_features(), stream.n_classes());
        let samples: Vec<_> = stream.collect();
        assert_eq!(samples.len(), 1000);
        assert!(samples.iter().all(|s| s.features.len() == p && s.label < k));
    }

    #[test]
    fn csv_rejects_generator_drift() {
        let spec = StreamSpec::new(
            GeneratorKind::Csv {
                path: "/nonexistent.csv".into(),
                label_column: LabelColumn::default(),
                shuffle: false,
            },
            10,
            0,
        );
        assert!(spec.build().is_err());
    }

    #[test]
    fn zero_instances_rejected() {
        assert!(StreamSpec::new(GeneratorKind::sea(), 0, 0).build().is_err());
    }
}
