//! Soft Hoeffding trees for drifting data streams.
//!
//! The crate bundles the soft Hoeffding tree learner ([`sohot::SoHoTree`]), the
//! Hoeffding-tree and soft-tree baselines, synthetic drift generators, a
//! prequential evaluation harness and the command-line front end.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The `*64` and
//! `*32` aliases below pin the common concrete instantiations.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod eval;
pub mod math;
pub mod scalar;
pub mod sohot;
pub mod streams;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SoHoTree64 = sohot::SoHoTree<f64>;
pub type SoHoTree32 = sohot::SoHoTree<f32>;
pub type SoftTree64 = baselines::SoftTree<f64>;
pub type SoftTree32 = baselines::SoftTree<f32>;
pub type HoeffdingTree64 = baselines::HoeffdingTree<f64>;
pub type HoeffdingTree32 = baselines::HoeffdingTree<f32>;
pub type Adam64 = math::Adam<f64>;
pub type RunningNormalizer64 = math::RunningNormalizer<f64>;
pub type SmoothStep64 = math::SmoothStep<f64>;
