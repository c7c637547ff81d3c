//! Instance streams: synthetic drifting generators, CSV ingestion and the
//! class-oversampling drift injector.

mod csv_stream;
mod drift;
mod generators;
mod oversample;
mod spec;

pub use csv_stream::{csv_stream, CsvStream, LabelColumn};
pub use drift::{DriftKind, DriftSchedule, DriftingStream};
pub use generators::{
    agrawal_label, AgrawalGenerator, ConceptGenerator, HyperplaneGenerator, RbfGenerator, SeaGenerator,
    SEA_THRESHOLDS,
};
pub use oversample::{OversampleDrift, OVERSAMPLE_FRACTION};
pub use spec::{GeneratorKind, StreamSpec};

/// One stream instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Shape of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamStats {
    pub n_features: usize,
    pub n_classes: usize,
    pub n_emitted: u64,
}

pub trait DataStream: Iterator<Item = Sample> + Send {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;
}

impl<S: DataStream + ?Sized> DataStream for Box<S> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }
}
