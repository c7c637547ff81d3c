//! Prequential evaluation, metrics and the model pool.

mod auroc;
mod classifier;
mod grid;
mod pool;
mod prequential;
mod report;

pub use auroc::{auroc, AurocAccumulator, AUROC_CAPACITY};
pub use classifier::Classifier;
pub use grid::{ht_grid, sohot_grid, st_grid, HYPERPLANE_GAMMAS, SOHOT_GAMMAS};
pub use pool::{ModelPool, PoolStep, POOL_DECAY};
pub use prequential::{
    prequential_run, prequential_run_with_models, prequential_single, transparency_series, PrequentialConfig, RepetitionResult, WindowRow,
    CE_CLIP,
};
pub use report::{EvalReport, Summary, REPORT_HEADER};
