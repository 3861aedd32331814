//! Predictor-based architecture search and its baselines.
//!
//! Every strategy evaluates an architecture at most once per canonical form
//! and records each evaluation as one [`TraceRow`].

mod baselines;
mod candidates;
mod inner;
mod pbnas;
mod sweep;
mod trace;

pub use baselines::{random_search_baseline, regularized_evolution_baseline, NOVELTY_WALK_LIMIT};
pub use candidates::{
    Candidate, Evaluator, LookupEvaluator, OracleEvaluator, SearchSpace, POOL_WALK_LIMIT,
};
pub use inner::{inner_ea, inner_random, InnerPick, Scorer};
pub use pbnas::{pbnas_run, InnerMethod, SearchConfig, SearchResult};
pub use sweep::{sweep_sample_ratio, SweepRow, SweepTable};
pub use trace::{true_top_ids, SearchTrace, TraceRow};
