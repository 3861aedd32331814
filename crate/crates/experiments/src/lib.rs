//! Seeded, scaled-down experiments that gate a release.
//!
//! Each experiment returns an [`Outcome`]: a verdict, a one-line summary and
//! a plain-text report. Reports contain only seeded results, so re-running
//! an experiment must reproduce its report byte for byte.

mod checks;
mod criteria;
mod search;
mod util;

pub use checks::{inner_ea_optimum, memorization};
pub use criteria::{
    comparator_sort_stability, encoder_ordering, gradient_checks, iso_invariance, loss_examples,
    metric_oracles, nb101_ground_truth, ranking_vs_regression, NB101_ENV,
};
pub use search::{sample_ratio_shape, search_config, search_efficiency};

use gateslab::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub summary: String,
    pub report: String,
}

impl Outcome {
    pub fn judged(ok: bool, summary: String, report: String) -> Self {
        Outcome {
            status: if ok { Status::Pass } else { Status::Fail },
            summary,
            report,
        }
    }

    pub fn skipped(summary: impl Into<String>) -> Self {
        Outcome {
            status: Status::Skip,
            summary: summary.into(),
            report: String::new(),
        }
    }
}

pub type Experiment = fn() -> Result<Outcome>;

/// The reproducible criteria, numbered as in the release checklist.
pub const SEEDED: [(usize, Experiment); 9] = [
    (1, gradient_checks),
    (2, iso_invariance),
    (3, metric_oracles),
    (4, loss_examples),
    (5, encoder_ordering),
    (6, ranking_vs_regression),
    (7, search_efficiency),
    (8, sample_ratio_shape),
    (9, comparator_sort_stability),
];
