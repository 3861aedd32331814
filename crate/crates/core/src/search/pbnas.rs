use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::archspace::ArchDag;
use crate::dataset::{Dataset, EvalRecord};
use crate::encoders::Predictor;
use crate::error::{Error, Result};
use crate::seed;
use crate::trainer::{fit_predictor, TrainConfig};

use super::baselines::uniform_stage;
use super::candidates::{Evaluator, SearchSpace};
use super::inner::{inner_ea, inner_random, InnerPick};
use super::trace::{SearchTrace, Tracker};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerMethod {
    /// Score `n` uniform samples, evaluate the best `k`.
    Random { n: usize, k: usize },
    /// Predictor-driven aging evolution for `n` steps, evaluate the best `k`.
    Ea {
        n: usize,
        k: usize,
        pop: usize,
        tournament: usize,
    },
}

impl InnerMethod {
    pub fn k(&self) -> usize {
        match *self {
            InnerMethod::Random { k, .. } | InnerMethod::Ea { k, .. } => k,
        }
    }

    /// The predictor has no influence (pure random sampling).
    fn blind(&self) -> bool {
        matches!(*self, InnerMethod::Random { n, k } if n == k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_stages: usize,
    /// Uniform evaluations in the first stage; later stages evaluate `k`.
    pub initial: usize,
    pub inner: InnerMethod,
    pub train: TrainConfig,
    /// Total evaluation budget across stages.
    pub max_evals: usize,
    /// Continue training the previous stage's predictor instead of
    /// starting from a fresh initialization.
    pub warm_start: bool,
    pub seed: u64,
}

impl SearchConfig {
    /// Defaults: 100 initial samples (50 for EA), 50 training epochs per stage.
    pub fn new(inner: InnerMethod, mut train: TrainConfig) -> Self {
        train.epochs = 50;
        train.eval_every_epoch = false;
        SearchConfig {
            max_stages: 1000,
            initial: if matches!(inner, InnerMethod::Ea { .. }) {
                50
            } else {
                100
            },
            inner,
            train,
            max_evals: usize::MAX,
            warm_start: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.inner {
            InnerMethod::Random { n, k } if k == 0 || n < k => {
                return Err(Error::Config(format!(
                    "inner random search needs n >= k >= 1, got n={n}, k={k}"
                )));
            }
            InnerMethod::Ea {
                k, pop, tournament, ..
            } if k == 0 || tournament == 0 || pop < tournament => {
                return Err(Error::Config(format!(
                    "inner evolution needs k >= 1 and pop >= tournament >= 1, got k={k}, pop={pop}, tournament={tournament}"
                )));
            }
            _ => {}
        }
        if self.max_stages == 0 || self.initial == 0 || self.max_evals == 0 {
            return Err(Error::Config(
                "stages, initial samples and budget must be positive".into(),
            ));
        }
        if self.train.encoder.comparator {
            return Err(Error::Unsupported(
                "search needs a scoring predictor, not a comparator".into(),
            ));
        }
        self.train.validate()
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best: EvalRecord,
    pub trace: SearchTrace,
}

/// Predictor-based search: a uniform first stage (identical to
/// [`random_search_baseline`](super::random_search_baseline) with the same seed), then per stage a predictor
/// trained on everything evaluated so far proposes `k` new architectures.
/// Stops after `max_stages`, `max_evals`, exhaustion, or as soon as an id in
/// `stop_on` has been evaluated.
pub fn pbnas_run(
    cfg: &SearchConfig,
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    stop_on: Option<&HashSet<String>>,
) -> Result<SearchResult> {
    cfg.validate()?;
    let mut t = Tracker::new(evaluator, cfg.max_evals, stop_on);
    let mut exhausted = uniform_stage(&mut t, space, cfg.initial, cfg.seed)?;
    let mut prev: Option<Predictor> = None;
    for stage in 2..=cfg.max_stages {
        if t.done() {
            break;
        }
        let mut rng = seed::rng(cfg.seed, "inner", stage as u64);
        let pick: InnerPick = if cfg.inner.blind() {
            let blank = |a: &[ArchDag]| Ok(vec![f64::NAN; a.len()]);
            inner_random(
                &blank,
                space,
                cfg.inner.k(),
                cfg.inner.k(),
                &t.seen,
                &mut rng,
            )?
        } else {
            let train = Dataset::new(t.records.clone())?;
            let mut tcfg = cfg.train.clone();
            tcfg.seed = seed::derive(cfg.seed, "stage", stage as u64);
            let init = if cfg.warm_start { prev.take() } else { None };
            let pred = fit_predictor(&train, &tcfg, init)?;
            let pick = match cfg.inner {
                InnerMethod::Random { n, k } => {
                    inner_random(&pred, space, n, k, &t.seen, &mut rng)?
                }
                InnerMethod::Ea {
                    n,
                    k,
                    pop,
                    tournament,
                } => inner_ea(&pred, space, n, k, pop, tournament, &t.seen, &mut rng)?,
            };
            prev = Some(pred);
            pick
        };
        exhausted |= pick.exhausted;
        if pick.picks.is_empty() {
            break;
        }
        for (c, s) in &pick.picks {
            if t.done() {
                break;
            }
            t.evaluate(stage, c, *s)?;
        }
    }
    let best = t
        .best()
        .cloned()
        .ok_or_else(|| Error::Empty("search evaluated nothing".into()))?;
    let mut trace = t.trace;
    trace.exhausted = exhausted;
    Ok(SearchResult { best, trace })
}
