//! Training losses and ranking metrics.

mod losses;
mod metrics;
mod sort;

pub use losses::{
    bce_pair_loss, comparator_loss, hinge_pair_loss, listmle_loss, mse_loss, ordered_pairs,
    LossConfig, LossKind,
};
pub use metrics::{
    kendall_tau, kendall_tau_variant, n_at_k, pair_counts, pair_counts_brute, precision_at_k,
    rank_desc, PairCounts, TauVariant,
};
pub use sort::{comparator_sort, order_to_scores, Comparator};
