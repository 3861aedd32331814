//! A "checkpoint" that scores with the synthetic oracle itself. Evaluating
//! it on data generated by the same oracle gives a perfect ranking, which
//! makes it a handy end-to-end check of the evaluation path.

use std::fs;
use std::path::Path;

use gateslab::dataset::OracleSpec;
use gateslab::encoders::{Predictor, CHECKPOINT_HEADER};
use gateslab::{Error, Result};

pub const ORACLE_HEADER: &str = "gateslab-oracle v1";

pub enum Model {
    Predictor(Box<Predictor>),
    Oracle(OracleSpec),
}

pub fn oracle_text(oracle: &OracleSpec) -> String {
    format!(
        "{ORACLE_HEADER}\n{}\n",
        serde_json::to_string(oracle).expect("oracle serializes")
    )
}

pub fn load_model(path: &Path) -> Result<Model> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "checkpoint {} does not exist",
            path.display()
        )));
    }
    let text = fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or_default();
    if first == ORACLE_HEADER {
        let body = text.lines().nth(1).unwrap_or_default();
        let oracle = serde_json::from_str(body).map_err(|e| Error::Parse {
            line: 2,
            msg: e.to_string(),
        })?;
        Ok(Model::Oracle(oracle))
    } else if first == CHECKPOINT_HEADER {
        Ok(Model::Predictor(Box::new(Predictor::from_checkpoint(
            &text,
        )?)))
    } else {
        Err(Error::Parse {
            line: 1,
            msg: format!(
                "{} is neither a predictor checkpoint nor an oracle stub",
                path.display()
            ),
        })
    }
}
