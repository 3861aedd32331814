use crate::archspace::{canonical_key, isomorphic_variants, ArchDag};
use crate::error::Result;

use super::Predictor;

/// Score spread over the isomorphic relabellings of one architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct IsoGroup {
    pub id: String,
    pub variants: usize,
    /// Population variance of the variants' scores.
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsoReport {
    pub groups: Vec<IsoGroup>,
    pub total_variance: f64,
}

impl IsoReport {
    /// Groups with more than one distinct labelling.
    pub fn nontrivial(&self) -> usize {
        self.groups.iter().filter(|g| g.variants > 1).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,variants,variance\n");
        for g in &self.groups {
            s += &format!("{},{},{:e}\n", g.id, g.variants, g.variance);
        }
        s
    }
}

/// Expands every architecture into its isomorphic variants and measures how
/// much the predictor's score moves within each group. An encoder that only
/// sees the graph reports (numerically) zero.
pub fn iso_variance(pred: &Predictor, archs: &[ArchDag]) -> Result<IsoReport> {
    let mut groups = Vec::with_capacity(archs.len());
    for a in archs {
        let vars = isomorphic_variants(a)?;
        let s = pred.scores(&vars)?;
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let variance = s.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / s.len() as f64;
        groups.push(IsoGroup {
            id: canonical_key(a)?.short_id(),
            variants: vars.len(),
            variance,
        });
    }
    let total_variance = groups.iter().map(|g| g.variance).sum();
    Ok(IsoReport {
        groups,
        total_variance,
    })
}
