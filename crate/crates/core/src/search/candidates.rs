use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::archspace::{
    canonical_key, mutate, sample_with, toggle_edge, ArchDag, CanonKey, SpaceKind, SpaceSpec,
    Wiring,
};
use crate::dataset::{synth_perf, Dataset, OracleSpec, STALL_LIMIT};
use crate::error::{Error, Result};

/// Longest mutation walk looking for a member of a closed pool.
pub const POOL_WALK_LIMIT: usize = 1000;

/// An architecture together with its canonical key.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub arch: ArchDag,
    pub key: CanonKey,
}

impl Candidate {
    pub fn new(arch: ArchDag) -> Result<Self> {
        let key = canonical_key(&arch)?;
        Ok(Candidate { arch, key })
    }
}

/// The set a search draws from: either a whole generative space or a closed
/// pool of architectures (e.g. the cells of a benchmark table).
#[derive(Clone, Debug)]
pub struct SearchSpace {
    space: Arc<SpaceSpec>,
    pool: Option<Pool>,
}

#[derive(Clone, Debug)]
struct Pool {
    items: Vec<Candidate>,
    index: HashMap<CanonKey, usize>,
}

impl SearchSpace {
    pub fn open(space: Arc<SpaceSpec>) -> Result<Self> {
        space.validate()?;
        Ok(SearchSpace { space, pool: None })
    }

    /// Closed pool; isomorphic duplicates keep their first occurrence.
    pub fn pool(archs: Vec<ArchDag>) -> Result<Self> {
        let space = archs
            .first()
            .ok_or_else(|| Error::Empty("search pool is empty".into()))?
            .space()
            .clone();
        let mut items = Vec::with_capacity(archs.len());
        let mut index = HashMap::with_capacity(archs.len());
        for a in archs {
            if a.space().id != space.id {
                return Err(Error::Space(format!(
                    "pool mixes {} and {}",
                    space.id,
                    a.space().id
                )));
            }
            let c = Candidate::new(a)?;
            if !index.contains_key(&c.key) {
                index.insert(c.key.clone(), items.len());
                items.push(c);
            }
        }
        Ok(SearchSpace {
            space,
            pool: Some(Pool { items, index }),
        })
    }

    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        Self::pool(ds.archs())
    }

    pub fn spec(&self) -> &Arc<SpaceSpec> {
        &self.space
    }

    /// Number of distinct architectures, when the space is a closed pool.
    pub fn size(&self) -> Option<usize> {
        self.pool.as_ref().map(|p| p.items.len())
    }

    pub fn contains(&self, key: &CanonKey) -> bool {
        self.pool.as_ref().is_none_or(|p| p.index.contains_key(key))
    }

    /// Up to `count` distinct architectures drawn uniformly (over canonical
    /// forms for pools) whose keys are not in `exclude`. The flag is set when
    /// fewer than `count` could be found.
    pub fn sample_fresh<R: Rng>(
        &self,
        count: usize,
        exclude: &HashSet<CanonKey>,
        rng: &mut R,
    ) -> Result<(Vec<Candidate>, bool)> {
        match &self.pool {
            Some(p) => {
                let free: Vec<usize> = (0..p.items.len())
                    .filter(|&i| !exclude.contains(&p.items[i].key))
                    .collect();
                let picked: Vec<usize> = if free.len() <= count {
                    let mut all = free.clone();
                    all.shuffle(rng);
                    all
                } else {
                    index::sample(rng, free.len(), count)
                        .into_iter()
                        .map(|j| free[j])
                        .collect()
                };
                Ok((
                    picked.iter().map(|&i| p.items[i].clone()).collect(),
                    free.len() < count,
                ))
            }
            None => {
                let mut out = Vec::with_capacity(count);
                let mut taken = HashSet::new();
                let mut stall = 0;
                while out.len() < count {
                    let c = Candidate::new(sample_with(&self.space, rng)?)?;
                    if exclude.contains(&c.key) || !taken.insert(c.key.clone()) {
                        stall += 1;
                        if stall >= STALL_LIMIT {
                            return Ok((out, true));
                        }
                        continue;
                    }
                    stall = 0;
                    out.push(c);
                }
                Ok((out, false))
            }
        }
    }

    /// One random mutation that stays inside the space. Free-wired OON
    /// spaces also toggle single edges (one move in three), since op redraws
    /// and rewiring alone never change a cell's in-degree profile. In a pool,
    /// mutation keeps walking until it lands on a pool member.
    pub fn mutate<R: Rng>(&self, arch: &ArchDag, rng: &mut R) -> Result<Candidate> {
        let toggles = self.space.kind == SpaceKind::Oon && self.space.wiring == Wiring::Free;
        let step = |a: &ArchDag, rng: &mut R| -> Result<ArchDag> {
            if toggles && rng.random_range(0..3) == 0 {
                toggle_edge(a, rng).or_else(|_| mutate(a, rng))
            } else {
                mutate(a, rng)
            }
        };
        let Some(p) = &self.pool else {
            return Candidate::new(step(arch, rng)?);
        };
        let mut cur = arch.clone();
        for _ in 0..POOL_WALK_LIMIT {
            cur = step(&cur, rng)?;
            let key = canonical_key(&cur)?;
            if p.index.contains_key(&key) {
                return Ok(Candidate { arch: cur, key });
            }
        }
        Err(Error::Mutation(POOL_WALK_LIMIT))
    }
}

/// Ground-truth performance source.
pub trait Evaluator {
    /// Returns the record id and true performance of `c`.
    fn evaluate(&self, c: &Candidate) -> Result<(String, f64)>;
}

/// Table lookup by canonical form.
#[derive(Clone, Debug)]
pub struct LookupEvaluator {
    table: HashMap<CanonKey, (String, f64)>,
}

impl LookupEvaluator {
    pub fn new(ds: &Dataset) -> Result<Self> {
        let mut table = HashMap::with_capacity(ds.len());
        for r in ds.records() {
            table
                .entry(canonical_key(&r.arch)?)
                .or_insert_with(|| (r.id.clone(), r.perf));
        }
        Ok(LookupEvaluator { table })
    }
}

impl Evaluator for LookupEvaluator {
    fn evaluate(&self, c: &Candidate) -> Result<(String, f64)> {
        self.table
            .get(&c.key)
            .cloned()
            .ok_or_else(|| Error::Eval(c.key.short_id()))
    }
}

/// Evaluates with the synthetic oracle; ids are canonical short ids.
#[derive(Clone, Debug)]
pub struct OracleEvaluator {
    pub oracle: OracleSpec,
}

impl Evaluator for OracleEvaluator {
    fn evaluate(&self, c: &Candidate) -> Result<(String, f64)> {
        Ok((c.key.short_id(), synth_perf(&c.arch, &self.oracle)?))
    }
}
