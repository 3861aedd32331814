//! Predictor training, evaluation and training-set subsetting.

mod eval;
mod train;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{format_float, Dataset};
use crate::encoders::EncoderConfig;
use crate::error::{Error, Result};
use crate::objectives::{LossConfig, LossKind};
use crate::seed;

pub use eval::{
    evaluate_predictor, evaluate_predictor_seeded, predict_scores, score_metrics, Metrics,
    DEFAULT_KS,
};
pub use train::{batch_loss, fit_predictor, train_predictor};

/// Epochs whose test tau is averaged into the reported value.
pub const REPORT_WINDOW: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub encoder: EncoderConfig,
    pub loss: LossConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Evaluate on the test set after every epoch; otherwise only the
    /// epochs that enter the reported mean.
    pub eval_every_epoch: bool,
}

impl TrainConfig {
    /// 200 epochs (80 for ListMLE), batch 512, learning rate 1e-3.
    pub fn new(encoder: EncoderConfig, loss: LossConfig) -> Self {
        TrainConfig {
            epochs: if loss.kind == LossKind::ListMle {
                80
            } else {
                200
            },
            encoder,
            loss,
            batch_size: 512,
            lr: 1e-3,
            seed: 0,
            eval_every_epoch: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 || (self.loss.kind.is_pairwise() && self.batch_size < 2) {
            return Err(Error::Config(format!(
                "batch size {} too small for {} loss",
                self.batch_size,
                self.loss.kind.name()
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if (self.loss.kind == LossKind::Comparator) != self.encoder.comparator {
            return Err(Error::Config(
                "the comparator loss and a comparator head go together".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub config_hash: String,
    pub steps: u64,
    /// Mean batch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Test tau per epoch; NaN where the epoch was not evaluated.
    pub test_tau: Vec<f64>,
    /// Mean of the last `min(5, epochs)` test taus.
    pub tau: f64,
}

impl TrainReport {
    /// Single-line JSON summary.
    pub fn to_record(&self) -> String {
        format!(
            "{{\"seed\":{},\"config_hash\":\"{}\",\"epochs\":{},\"steps\":{},\"tau\":{}}}",
            self.seed,
            self.config_hash,
            self.train_loss.len(),
            self.steps,
            json_float(self.tau)
        )
    }

    /// Learning curve, one row per epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,test_tau\n");
        for (e, (l, t)) in self.train_loss.iter().zip(&self.test_tau).enumerate() {
            out += &format!("{},{},{}\n", e + 1, format_float(*l), format_float(*t));
        }
        out
    }
}

fn json_float(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else {
        "null".into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetMode {
    /// First records in file order.
    Prefix,
    /// A seeded random choice, kept in file order.
    SeededRandom(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// `⌊p·n⌋` (0.1% of 381262 is 381).
    #[default]
    Floor,
    /// `⌈p·n⌉`.
    Ceil,
}

/// Size of a `p` fraction of `n`, tolerant to representation error in `p·n`.
pub fn subset_size(n: usize, p: f64, rounding: Rounding) -> usize {
    let x = p * n as f64;
    match rounding {
        Rounding::Floor => (x + 1e-9).floor() as usize,
        Rounding::Ceil => (x - 1e-9).ceil() as usize,
    }
}

pub fn subset_train_fraction(
    ds: &Dataset,
    p: f64,
    mode: SubsetMode,
    rounding: Rounding,
) -> Result<Dataset> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Range(format!("fraction {p} outside (0, 1]")));
    }
    let m = subset_size(ds.len(), p, rounding).min(ds.len());
    if m == 0 {
        return Err(Error::Empty(format!(
            "{p} of {} records is empty",
            ds.len()
        )));
    }
    Ok(match mode {
        SubsetMode::Prefix => ds.prefix(m),
        SubsetMode::SeededRandom(s) => {
            let mut idx: Vec<usize> = (0..ds.len()).collect();
            idx.shuffle(&mut seed::rng(s, "subset", 0));
            idx.truncate(m);
            idx.sort_unstable();
            ds.select(&idx)
        }
    })
}
