use crate::archspace::ArchDag;
use crate::dataset::Dataset;
use crate::encoders::Predictor;
use crate::error::{Error, Result};
use crate::numerics::{Tape, Tensor};
use crate::objectives::{comparator_sort, kendall_tau, n_at_k, order_to_scores, precision_at_k};

pub const DEFAULT_KS: [usize; 4] = [5, 10, 50, 100];

/// Ranking metrics of a predictor on one test set.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub n: usize,
    /// Kendall tau-b; NaN when the predictor ties everything.
    pub tau: f64,
    pub n_at_k: Vec<(usize, usize)>,
    pub precision_at_k: Vec<(usize, f64)>,
}

impl Metrics {
    pub fn to_record(&self) -> String {
        let tau = if self.tau.is_finite() {
            crate::dataset::format_float(self.tau)
        } else {
            "null".into()
        };
        let nk: Vec<String> = self
            .n_at_k
            .iter()
            .map(|(k, r)| format!("\"{k}\":{r}"))
            .collect();
        let pk: Vec<String> = self
            .precision_at_k
            .iter()
            .map(|(k, p)| format!("\"{k}\":{}", crate::dataset::format_float(*p)))
            .collect();
        format!(
            "{{\"n\":{},\"tau\":{tau},\"n_at_k\":{{{}}},\"precision_at_k\":{{{}}}}}",
            self.n,
            nk.join(","),
            pk.join(",")
        )
    }
}

/// Comparator outputs `s(emb[i], emb[j])` for each pair.
fn compare_rows(pred: &Predictor, emb: &Tensor, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let d = emb.shape()[1];
    let rows = |sel: &dyn Fn(&(usize, usize)) -> usize| -> Tensor {
        let data = pairs
            .iter()
            .flat_map(|p| emb.data()[sel(p) * d..(sel(p) + 1) * d].iter().copied())
            .collect();
        Tensor::from_parts(&[pairs.len(), d], data)
    };
    let mut tape = Tape::untraced();
    let leaves = pred.leaves(&mut tape);
    let a = tape.constant(rows(&|p| p.0));
    let b = tape.constant(rows(&|p| p.1));
    let s = pred.compare_var(&mut tape, &leaves, a, b)?;
    Ok(tape.value(s).data().to_vec())
}

/// Scores for ranking: head outputs, or for comparator heads `n - position`
/// after a seeded comparator quicksort.
pub fn predict_scores(pred: &Predictor, archs: &[ArchDag], sort_seed: u64) -> Result<Vec<f64>> {
    if !pred.config().comparator {
        return pred.scores(archs);
    }
    let emb = pred.embeddings(archs)?;
    let mut cmp = |pairs: &[(usize, usize)]| compare_rows(pred, &emb, pairs);
    let order = comparator_sort(archs.len(), &mut cmp, sort_seed)?;
    Ok(order_to_scores(&order))
}

pub fn evaluate_predictor(pred: &Predictor, test: &Dataset, ks: &[usize]) -> Result<Metrics> {
    evaluate_predictor_seeded(pred, test, ks, 0)
}

/// Tau plus N@K and P@K for every `K ≤ n` in `ks`.
pub fn evaluate_predictor_seeded(
    pred: &Predictor,
    test: &Dataset,
    ks: &[usize],
    sort_seed: u64,
) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::Empty("test set is empty".into()));
    }
    if let Some(s) = test.space() {
        if s.id != pred.space().id {
            return Err(Error::Space(format!(
                "predictor built for {} evaluated on {}",
                pred.space().id,
                s.id
            )));
        }
    }
    let s = predict_scores(pred, &test.archs(), sort_seed)?;
    score_metrics(&s, test, ks)
}

/// Metrics of precomputed scores aligned with `test`.
pub fn score_metrics(s: &[f64], test: &Dataset, ks: &[usize]) -> Result<Metrics> {
    if s.len() != test.len() {
        return Err(Error::shape("score_metrics", &[s.len()], &[test.len()]));
    }
    let y = test.perfs();
    let ids = test.ids();
    let tau = if s.len() < 2 {
        f64::NAN
    } else {
        kendall_tau(s, &y)?
    };
    let ks: Vec<usize> = ks
        .iter()
        .copied()
        .filter(|&k| k >= 1 && k <= s.len())
        .collect();
    Ok(Metrics {
        n: s.len(),
        tau,
        n_at_k: ks
            .iter()
            .map(|&k| Ok((k, n_at_k(s, &y, &ids, k)?)))
            .collect::<Result<_>>()?,
        precision_at_k: ks
            .iter()
            .map(|&k| Ok((k, precision_at_k(s, &y, &ids, k)?)))
            .collect::<Result<_>>()?,
    })
}
