use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Dataset, EvalRecord};
use crate::archspace::{
    canonical_key, canonicalize, enumerate_space, sample_with, ArchDag, CanonKey, SpaceKind,
    SpaceSpec,
};
use crate::error::{Error, Result};
use crate::numerics::ops::sigmoid;
use crate::seed;

/// Consecutive duplicate draws after which sampling falls back to enumeration.
pub const STALL_LIMIT: usize = 20_000;

/// Deterministic stand-in for benchmark ground truth:
/// `σ(mean op weight + depth_coef · longest_path / V + noise_coef · u)`,
/// with `u ∈ [-1, 1)` hashed from the canonical form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub seed: u64,
    pub weights: BTreeMap<String, f64>,
    pub depth_coef: f64,
    pub noise_coef: f64,
}

/// Weights for every operation of the preset spaces.
pub fn default_weights() -> BTreeMap<String, f64> {
    [
        ("conv3x3", 0.5),
        ("conv1x1", 0.2),
        ("maxpool3x3", -0.1),
        ("avgpool3x3", 0.0),
        ("zero", -0.5),
        ("skip_connect", 0.1),
        ("sep_conv3x3", 0.4),
        ("sep_conv5x5", 0.45),
        ("identity", 0.05),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl OracleSpec {
    pub fn new(seed: u64) -> Self {
        OracleSpec {
            seed,
            weights: default_weights(),
            depth_coef: 0.3,
            noise_coef: 0.05,
        }
    }

    pub fn validate(&self, space: &SpaceSpec) -> Result<()> {
        for op in space.op_choices() {
            let name = &space.op_vocab[op];
            match self.weights.get(name) {
                Some(w) if w.is_finite() => {}
                Some(w) => return Err(Error::Config(format!("oracle weight for `{name}` is {w}"))),
                None => return Err(Error::Config(format!("oracle has no weight for `{name}`"))),
            }
        }
        if !(self.depth_coef.is_finite() && self.noise_coef.is_finite()) {
            return Err(Error::Config("oracle coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// `u ∈ [-1, 1)` from SHA-256 over the seed and canonical key bytes.
pub fn oracle_noise(seed: u64, key: &CanonKey) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.to_bytes());
    let d = h.finalize();
    let x = u64::from_le_bytes(d[..8].try_into().expect("eight bytes"));
    2.0 * ((x >> 11) as f64 / (1u64 << 53) as f64) - 1.0
}

fn perf_of(canon: &ArchDag, key: &CanonKey, oracle: &OracleSpec) -> f64 {
    let space = canon.space();
    let ops: Vec<usize> = match space.kind {
        SpaceKind::Oon => canon.node_ops().to_vec(),
        SpaceKind::Ooe => canon.edges().iter().map(|e| e.op).collect(),
    };
    let ws: Vec<f64> = ops
        .into_iter()
        .filter(|&o| !space.is_reserved(o))
        .map(|o| oracle.weights[&space.op_vocab[o]])
        .collect();
    let mean = if ws.is_empty() {
        0.0
    } else {
        ws.iter().sum::<f64>() / ws.len() as f64
    };
    let depth = canon.longest_path() as f64 / space.max_nodes as f64;
    sigmoid(mean + oracle.depth_coef * depth + oracle.noise_coef * oracle_noise(oracle.seed, key))
}

pub fn synth_perf(arch: &ArchDag, oracle: &OracleSpec) -> Result<f64> {
    oracle.validate(arch.space())?;
    let canon = canonicalize(arch)?;
    let key = canonical_key(&canon)?;
    Ok(perf_of(&canon, &key, oracle))
}

/// `count` architectures, distinct up to isomorphism, labelled by the
/// oracle. Ids are the canonical short ids.
pub fn gen_synth_dataset(
    space: &Arc<SpaceSpec>,
    count: usize,
    oracle: &OracleSpec,
    seed: u64,
) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::Range("count must be at least 1".into()));
    }
    space.validate()?;
    oracle.validate(space)?;
    let mut rng = seed::rng(seed, "gen", 0);
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(count);
    let push = |arch: ArchDag, key: CanonKey, records: &mut Vec<EvalRecord>| -> Result<()> {
        let canon = canonicalize(&arch)?;
        records.push(EvalRecord {
            id: key.short_id(),
            perf: perf_of(&canon, &key, oracle),
            arch,
        });
        Ok(())
    };
    let mut stall = 0;
    while records.len() < count && stall < STALL_LIMIT {
        let arch = sample_with(space, &mut rng)?;
        let key = canonical_key(&arch)?;
        if seen.insert(key.clone()) {
            push(arch, key, &mut records)?;
            stall = 0;
        } else {
            stall += 1;
        }
    }
    if records.len() < count {
        let mut rest: Vec<(ArchDag, CanonKey)> = enumerate_space(space)?
            .into_iter()
            .map(|a| canonical_key(&a).map(|k| (a, k)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|(_, k)| !seen.contains(k))
            .collect();
        let need = count - records.len();
        if rest.len() < need {
            return Err(Error::Space(format!(
                "{} has only {} distinct architectures, {count} requested",
                space.id,
                records.len() + rest.len()
            )));
        }
        log::info!(
            "sampling stalled at {} distinct; filling from enumeration",
            records.len()
        );
        rest.shuffle(&mut seed::rng(seed, "gen-fill", 0));
        for (arch, key) in rest.into_iter().take(need) {
            push(arch, key, &mut records)?;
        }
    }
    Dataset::new(records)
}
