use std::collections::HashSet;

use crate::archspace::CanonKey;
use crate::dataset::{format_float, EvalRecord};
use crate::error::{Error, Result};
use crate::objectives::rank_desc;

use super::candidates::{Candidate, Evaluator};

/// One ground-truth evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub stage: usize,
    /// 1-based cumulative evaluation count.
    pub eval_index: usize,
    pub arch_id: String,
    pub true_perf: f64,
    /// NaN when no predictor was involved.
    pub pred_score: f64,
    pub best_so_far: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchTrace {
    pub rows: Vec<TraceRow>,
    /// The space ran out of unevaluated architectures.
    pub exhausted: bool,
}

impl SearchTrace {
    pub fn evals(&self) -> usize {
        self.rows.len()
    }

    pub fn best(&self) -> Option<f64> {
        self.rows.last().map(|r| r.best_so_far)
    }

    /// Evaluation count at which any of `targets` was first evaluated.
    pub fn evals_to(&self, targets: &HashSet<String>) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| targets.contains(&r.arch_id))
            .map(|r| r.eval_index)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("stage,eval_index,arch_id,true_perf,pred_score,best_so_far\n");
        for r in &self.rows {
            let pred = if r.pred_score.is_nan() {
                String::new()
            } else {
                format_float(r.pred_score)
            };
            s += &format!(
                "{},{},{},{},{},{}\n",
                r.stage,
                r.eval_index,
                r.arch_id,
                format_float(r.true_perf),
                pred,
                format_float(r.best_so_far)
            );
        }
        s
    }
}

/// Ids of the `k` best records (ties by id).
pub fn true_top_ids(records: &[EvalRecord], k: usize) -> HashSet<String> {
    let perf: Vec<f64> = records.iter().map(|r| r.perf).collect();
    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    rank_desc(&perf, &ids)
        .into_iter()
        .take(k)
        .map(|i| records[i].id.clone())
        .collect()
}

/// Evaluation bookkeeping shared by all strategies: dedup, budget, targets.
pub(crate) struct Tracker<'a> {
    evaluator: &'a dyn Evaluator,
    pub seen: HashSet<CanonKey>,
    pub records: Vec<EvalRecord>,
    pub trace: SearchTrace,
    best: Option<usize>,
    budget: usize,
    targets: Option<&'a HashSet<String>>,
    hit: bool,
}

impl<'a> Tracker<'a> {
    pub fn new(
        evaluator: &'a dyn Evaluator,
        budget: usize,
        targets: Option<&'a HashSet<String>>,
    ) -> Self {
        Tracker {
            evaluator,
            seen: HashSet::new(),
            records: Vec::new(),
            trace: SearchTrace::default(),
            best: None,
            budget,
            targets,
            hit: false,
        }
    }

    /// Budget spent or a target found.
    pub fn done(&self) -> bool {
        self.hit || self.records.len() >= self.budget
    }

    pub fn evaluate(&mut self, stage: usize, c: &Candidate, pred_score: f64) -> Result<f64> {
        if self.seen.contains(&c.key) {
            return Err(Error::Eval(format!(
                "{} would be evaluated twice",
                c.key.short_id()
            )));
        }
        let (id, perf) = self.evaluator.evaluate(c)?;
        self.seen.insert(c.key.clone());
        if self.best.is_none_or(|b| perf > self.records[b].perf) {
            self.best = Some(self.records.len());
        }
        self.hit |= self.targets.is_some_and(|t| t.contains(&id));
        self.records.push(EvalRecord {
            id: id.clone(),
            arch: c.arch.clone(),
            perf,
        });
        let best_so_far = self.records[self.best.unwrap()].perf;
        self.trace.rows.push(TraceRow {
            stage,
            eval_index: self.records.len(),
            arch_id: id,
            true_perf: perf,
            pred_score,
            best_so_far,
        });
        Ok(perf)
    }

    pub fn best(&self) -> Option<&EvalRecord> {
        self.best.map(|b| &self.records[b])
    }
}
