//! Cell search spaces: architecture DAGs, sampling, mutation, padding and
//! isomorphism handling.

mod dag;
mod enumerate;
mod flatten;
mod iso;
mod pad;
mod sample;
mod space;

pub use dag::{ArchDag, Edge};
pub use enumerate::{enumerate_nodes, enumerate_space, MAX_ENUMERATION};
pub use flatten::{flat_len, flatten_for_mlp};
pub use iso::{
    canonical_key, canonicalize, is_isomorphic, isomorphic_variants, CanonKey, MAX_ISO_NODES,
};
pub use pad::{pad_batch, PaddedBatch};
pub use sample::{mutate, sample_random, sample_with, toggle_edge, MAX_MUTATION_ATTEMPTS};
pub use space::{SpaceKind, SpaceSpec, Wiring, INPUT, NONE, OUTPUT};
