use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Tape, Tensor, Var};

/// Stand-in for `-inf` in masked log-sum-exp; exp underflows to exactly 0.
const MASKED: f64 = -1e30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
    Hinge,
    Bce,
    Comparator,
    ListMle,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Hinge => "hinge",
            LossKind::Bce => "bce",
            LossKind::Comparator => "comparator",
            LossKind::ListMle => "listmle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "hinge" | "hinge_pair" => Ok(LossKind::Hinge),
            "bce" | "bce_pair" => Ok(LossKind::Bce),
            "comparator" => Ok(LossKind::Comparator),
            "listmle" => Ok(LossKind::ListMle),
            _ => Err(Error::Config(format!("unknown loss `{s}`"))),
        }
    }

    pub fn is_pairwise(self) -> bool {
        matches!(self, LossKind::Hinge | LossKind::Bce | LossKind::Comparator)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub kind: LossKind,
    pub margin: f64,
    pub list_len: usize,
}

impl LossConfig {
    pub fn new(kind: LossKind) -> Self {
        LossConfig {
            kind,
            margin: 0.1,
            list_len: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.kind, LossKind::Hinge | LossKind::Comparator) && !(self.margin > 0.0) {
            return Err(Error::Config(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        if self.kind == LossKind::ListMle && self.list_len == 0 {
            return Err(Error::Config("list length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Ordered pairs `(better, worse)` with `y[better] > y[worse]`; ties give no
/// pair.
pub fn ordered_pairs(y: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] > y[j] {
                out.push((i, j));
            }
        }
    }
    out
}

fn check_scores(tape: &Tape, s: Var, y: &[f64], op: &'static str) -> Result<()> {
    let shape = tape.value(s).shape();
    if shape != [y.len()] {
        return Err(Error::shape(op, shape, &[y.len()]));
    }
    if y.is_empty() {
        return Err(Error::Empty(format!("{op} needs at least one sample")));
    }
    Ok(())
}

/// `(s[better], s[worse])` as two `[P]` vectors.
fn pair_scores(tape: &mut Tape, s: Var, pairs: &[(usize, usize)]) -> Result<(Var, Var)> {
    let n = tape.value(s).len();
    let col = tape.reshape(s, &[n, 1])?;
    let hi: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let lo: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let a = tape.gather(col, &hi)?;
    let b = tape.gather(col, &lo)?;
    Ok((
        tape.reshape(a, &[pairs.len()])?,
        tape.reshape(b, &[pairs.len()])?,
    ))
}

fn no_pairs(tape: &mut Tape, op: &str) -> Var {
    log::warn!("{op}: batch has no strictly ordered pair; loss is 0");
    tape.constant(Tensor::scalar(0.0))
}

/// Mean squared error over samples.
pub fn mse_loss(tape: &mut Tape, s: Var, y: &[f64]) -> Result<Var> {
    check_scores(tape, s, y, "mse_loss")?;
    let y = tape.constant(Tensor::vector(y.to_vec()));
    let d = tape.sub(s, y)?;
    let sq = tape.square(d)?;
    tape.mean(sq)
}

/// Mean over ordered pairs of `max(0, m - (s_better - s_worse))`.
pub fn hinge_pair_loss(tape: &mut Tape, s: Var, y: &[f64], margin: f64) -> Result<Var> {
    check_scores(tape, s, y, "hinge_pair_loss")?;
    let pairs = ordered_pairs(y);
    if pairs.is_empty() {
        return Ok(no_pairs(tape, "hinge_pair_loss"));
    }
    let (hi, lo) = pair_scores(tape, s, &pairs)?;
    let d = tape.sub(lo, hi)?;
    let z = tape.add_scalar(d, margin)?;
    let h = tape.relu(z)?;
    tape.mean(h)
}

/// Mean over ordered pairs of `ln(1 + exp(-(s_better - s_worse)))`.
pub fn bce_pair_loss(tape: &mut Tape, s: Var, y: &[f64]) -> Result<Var> {
    check_scores(tape, s, y, "bce_pair_loss")?;
    let pairs = ordered_pairs(y);
    if pairs.is_empty() {
        return Ok(no_pairs(tape, "bce_pair_loss"));
    }
    let (hi, lo) = pair_scores(tape, s, &pairs)?;
    let d = tape.sub(lo, hi)?;
    let l = tape.softplus(d)?;
    tape.mean(l)
}

/// Mean over pairs of `max(0, m - s(better, worse)) + max(0, m + s(worse, better))`,
/// given the comparator outputs for both orders.
pub fn comparator_loss(
    tape: &mut Tape,
    s_better_worse: Var,
    s_worse_better: Var,
    margin: f64,
) -> Result<Var> {
    let (a, b) = (
        tape.value(s_better_worse).shape(),
        tape.value(s_worse_better).shape(),
    );
    if a != b || a.len() != 1 {
        return Err(Error::shape("comparator_loss", a, b));
    }
    if a[0] == 0 {
        return Err(Error::Empty(
            "comparator_loss needs at least one pair".into(),
        ));
    }
    let neg = tape.scale(s_better_worse, -1.0)?;
    let first = tape.add_scalar(neg, margin)?;
    let first = tape.relu(first)?;
    let second = tape.add_scalar(s_worse_better, margin)?;
    let second = tape.relu(second)?;
    let both = tape.add(first, second)?;
    tape.mean(both)
}

/// ListMLE over `[lists, len]` scores, each row ordered best first:
/// mean over rows of `Σ_i (-s_i + ln Σ_{k≥i} e^{s_k})`.
pub fn listmle_loss(tape: &mut Tape, s: Var) -> Result<Var> {
    let shape = tape.value(s).shape().to_vec();
    if shape.len() != 2 {
        return Err(Error::shape("listmle_loss", &shape, &[0, 0]));
    }
    let (l, u) = (shape[0], shape[1]);
    if l == 0 || u == 0 {
        return Err(Error::Empty("listmle_loss needs a non-empty list".into()));
    }
    let mut mask = vec![0.0; u * u];
    for i in 0..u {
        for k in 0..i {
            mask[i * u + k] = MASKED;
        }
    }
    let mask = tape.constant(Tensor::from_parts(&[u, u], mask));
    let rows = tape.expand(s, 1)?;
    let suffix = tape.add(rows, mask)?;
    let lse = tape.logsumexp(suffix, 2)?;
    let lse_total = tape.sum(lse)?;
    let s_total = tape.sum(s)?;
    let per = tape.sub(lse_total, s_total)?;
    tape.scale(per, 1.0 / l as f64)
}
