//! Comparison learners: the Hoeffding tree (optionally capped in size) and
//! the fixed-topology soft tree.

mod hoeffding;
mod soft_tree;

pub use hoeffding::{HoeffdingTree, HoeffdingTreeConfig, LeafPrediction, HT_LIMIT_INTERNAL_NODES};
pub use soft_tree::{SoftTree, SoftTreeConfig};
