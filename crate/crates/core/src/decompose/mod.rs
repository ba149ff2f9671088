//! Influential-coordinate restriction trees, block partitions, and exact
//! checks of the block and tree sensitivity identities.

pub mod blocks;
pub mod trace;
pub mod tree;

pub use blocks::{
    block_alpha_reference, block_alpha_sum, block_partition, block_sensitivity_identity_check,
    BlockAlphaConfig, BlockAlphaSum, BlockIdentityCheck, BlockPartition, BLOCK_IDENTITY_CAP,
};
pub use trace::{recursion_trace, small_alpha_check, AlephSummary, RecursionTrace, SmallAlphaCheck, TraceLevel, TraceSchedule};
pub use tree::{
    build_regularity_tree, classify_leaf, default_threshold, influential_set, split_once,
    tree_sensitivity_check, trivial_tree, ClassMethod, DecisionTree, Leaf, LeafClass, PathStep,
    RegularityConfig, TreeNode, TreeSensitivityCheck,
};
