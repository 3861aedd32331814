use std::collections::HashSet;

use crate::dataset::format_float;
use crate::error::{Error, Result};

use super::candidates::{Evaluator, SearchSpace};
use super::pbnas::{pbnas_run, InnerMethod, SearchConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub r: usize,
    pub seed: u64,
    /// `None` when no target was reached within the budget.
    pub evals: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Median evaluations for ratio `r`; misses count as +inf.
    pub fn median(&self, r: usize) -> f64 {
        let mut v: Vec<f64> = self
            .rows
            .iter()
            .filter(|row| row.r == r)
            .map(|row| row.evals.map_or(f64::INFINITY, |e| e as f64))
            .collect();
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            (v[m - 1] + v[m]) / 2.0
        }
    }

    pub fn ratios(&self) -> Vec<usize> {
        let mut rs: Vec<usize> = Vec::new();
        for row in &self.rows {
            if !rs.contains(&row.r) {
                rs.push(row.r);
            }
        }
        rs
    }

    /// `r,seed,evals` rows, then one `r,median,...` row per ratio. Misses
    /// are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,seed,evals\n");
        for row in &self.rows {
            let e = row.evals.map_or("NA".to_string(), |e| e.to_string());
            s += &format!("{},{},{}\n", row.r, row.seed, e);
        }
        for r in self.ratios() {
            let m = self.median(r);
            let m = if m.is_finite() {
                format_float(m)
            } else {
                "NA".into()
            };
            s += &format!("{r},median,{m}\n");
        }
        s
    }
}

/// Runs [`pbnas_run`] with random inner search `n = r·k` for every ratio and
/// seed, recording evaluations until any id in `targets` is evaluated.
pub fn sweep_sample_ratio(
    base: &SearchConfig,
    r_values: &[usize],
    seeds: &[u64],
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    targets: &HashSet<String>,
) -> Result<SweepTable> {
    let InnerMethod::Random { k, .. } = base.inner else {
        return Err(Error::Config(
            "sample-ratio sweeps need the random inner search".into(),
        ));
    };
    if r_values.contains(&0) {
        return Err(Error::Config("sample ratio must be at least 1".into()));
    }
    let mut table = SweepTable::default();
    for &r in r_values {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.inner = InnerMethod::Random { n: r * k, k };
            cfg.seed = seed;
            let res = pbnas_run(&cfg, space, evaluator, Some(targets))?;
            table.rows.push(SweepRow {
                r,
                seed,
                evals: res.trace.evals_to(targets),
            });
        }
    }
    Ok(table)
}
