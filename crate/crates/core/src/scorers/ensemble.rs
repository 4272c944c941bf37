use crate::error::{Error, Result};
use crate::scorers::{score_checked, ScoreRequest, Scorer};

const SUM_TOLERANCE: f64 = 1e-6;

fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let z = e[0] + e[1];
    [e[0] / z, e[1] / z]
}

/// Combines per-model `(p_entail, p_non_entail)` distributions for one pair:
/// sum them class-wise, then softmax the sums.
///
/// A single model is still passed through the softmax. Inputs are summed
/// in sorted order so any permutation of the models gives the same bits.
pub fn ensemble(distributions: &[[f64; 2]]) -> Result<[f64; 2]> {
    if distributions.is_empty() {
        return Err(Error::Ensemble("no models to combine".into()));
    }
    for (i, d) in distributions.iter().enumerate() {
        let ok = d.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p));
        if !ok || (d[0] + d[1] - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Ensemble(format!(
                "model #{i} distribution ({}, {}) is not a probability pair",
                d[0], d[1]
            )));
        }
    }
    let mut entail: Vec<f64> = distributions.iter().map(|d| d[0]).collect();
    let mut non: Vec<f64> = distributions.iter().map(|d| d[1]).collect();
    entail.sort_by(f64::total_cmp);
    non.sort_by(f64::total_cmp);
    Ok(softmax2([entail.iter().sum(), non.iter().sum()]))
}

/// Scores each pair with every member and merges the binary distributions.
pub struct EnsembleScorer {
    members: Vec<Box<dyn Scorer>>,
}

impl EnsembleScorer {
    pub fn new(members: Vec<Box<dyn Scorer>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Ensemble("ensemble needs at least one scorer".into()));
        }
        Ok(EnsembleScorer { members })
    }
}

impl Scorer for EnsembleScorer {
    fn name(&self) -> &str {
        "ensemble"
    }

    fn score_batch(&self, batch: &[ScoreRequest<'_>]) -> Result<Vec<f64>> {
        let per_model = self
            .members
            .iter()
            .map(|m| score_checked(m.as_ref(), batch))
            .collect::<Result<Vec<_>>>()?;
        (0..batch.len())
            .map(|i| {
                let dists: Vec<[f64; 2]> = per_model.iter().map(|s| [s[i], 1.0 - s[i]]).collect();
                ensemble(&dists).map(|d| d[0])
            })
            .collect()
    }
}
