//! Numerics shared by the learners: the smooth-step gate, softmax
//! cross-entropy, Adam and streaming input normalization.

mod adam;
mod loss;
mod normalizer;
mod smooth_step;

pub use adam::{Adam, AdamConfig};
pub use loss::{softmax, softmax_cross_entropy};
pub use normalizer::RunningNormalizer;
pub use smooth_step::SmoothStep;
