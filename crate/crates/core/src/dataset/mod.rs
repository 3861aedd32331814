//! Evaluated-architecture datasets, splits and the synthetic oracle.

mod format;
mod oracle;

use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use crate::archspace::{ArchDag, SpaceSpec};
use crate::error::{Error, Result};

pub use format::{format_float, parse_dataset, record_line, to_jsonl};
pub use oracle::{
    default_weights, gen_synth_dataset, oracle_noise, synth_perf, OracleSpec, STALL_LIMIT,
};

/// One evaluated architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub id: String,
    pub arch: ArchDag,
    pub perf: f64,
}

/// Ordered records over a single space; file order is meaningful.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    records: Vec<EvalRecord>,
}

impl Dataset {
    /// Checks id uniqueness, a shared space and finite performances in `[0, 1]`.
    pub fn new(records: Vec<EvalRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            let fail = |msg: String| Error::Record {
                line: i + 1,
                id: r.id.clone(),
                msg,
            };
            if !seen.insert(r.id.as_str()) {
                return Err(fail("duplicate id".into()));
            }
            if !(r.perf.is_finite() && (0.0..=1.0).contains(&r.perf)) {
                return Err(fail(format!("performance {} outside [0, 1]", r.perf)));
            }
            if r.arch.space().id != records[0].arch.space().id {
                return Err(fail(format!(
                    "space {} differs from {}",
                    r.arch.space().id,
                    records[0].arch.space().id
                )));
            }
        }
        Ok(Dataset { records })
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<EvalRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `None` for an empty dataset.
    pub fn space(&self) -> Option<&Arc<SpaceSpec>> {
        self.records.first().map(|r| r.arch.space())
    }

    pub fn archs(&self) -> Vec<ArchDag> {
        self.records.iter().map(|r| r.arch.clone()).collect()
    }

    pub fn perfs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.perf).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.id.as_str()).collect()
    }

    /// Records at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// The first `n` records.
    pub fn prefix(&self, n: usize) -> Dataset {
        Dataset {
            records: self.records[..n.min(self.len())].to_vec(),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let ds = parse_dataset(&text)?;
    if ds.is_empty() {
        log::warn!("{} holds no records", path.as_ref().display());
    }
    Ok(ds)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_jsonl(ds))?;
    Ok(())
}

/// Train/test split at `fraction`, rounding the train size half up
/// (`0.9 · 423624 → 381262`, `0.5 · 15625 → 7813`).
pub fn split_prefix(ds: &Dataset, fraction: f64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Range(format!(
            "split fraction {fraction} outside (0, 1)"
        )));
    }
    let n_train = (fraction * ds.len() as f64 + 0.5).floor() as usize;
    if n_train == 0 || n_train >= ds.len() {
        return Err(Error::Empty(format!(
            "splitting {} records at {fraction} leaves one side empty",
            ds.len()
        )));
    }
    let test = Dataset {
        records: ds.records[n_train..].to_vec(),
    };
    Ok((ds.prefix(n_train), test))
}
