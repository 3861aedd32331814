//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use gateslab::archspace::{sample_random, ArchDag, SpaceSpec};
use gateslab::dataset::{gen_synth_dataset, Dataset, OracleSpec};

/// `n` seeded samples from a preset space.
pub fn archs(space_id: &str, n: u64) -> Vec<ArchDag> {
    let space: Arc<SpaceSpec> = SpaceSpec::by_id(space_id).expect("preset exists");
    (0..n)
        .map(|i| sample_random(&space, i).expect("preset samples"))
        .collect()
}

/// Oracle-scored dataset over a preset space.
pub fn dataset(space_id: &str, n: usize) -> Dataset {
    let space = SpaceSpec::by_id(space_id).expect("preset exists");
    gen_synth_dataset(&space, n, &OracleSpec::new(0), 0).expect("generation succeeds")
}
