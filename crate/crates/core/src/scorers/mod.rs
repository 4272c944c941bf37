//! Entailment scorers.
//!
//! Every scorer maps a batch of premise/hypothesis requests to one
//! probability of entailment per request, in the same order.

use crate::error::{Error, Result};

pub mod embedding;
pub mod ensemble;
pub mod esa;
pub mod external;
pub mod majority;
#[cfg(feature = "mock-server")]
pub mod mock;

pub use embedding::{embedding_cosine_score, EmbeddingScorer, WordVectorTable};
pub use ensemble::{ensemble, EnsembleScorer};
pub use esa::{esa_build, esa_score, parse_corpus, Article, ConceptIndex, EsaScorer};
pub use external::{validate_score_response, ExternalClient, ExternalConfig};
pub use majority::MajorityScorer;

/// One premise/hypothesis pair to score.
///
/// `label_text` is what filled the template placeholder (the label name or
/// its gloss); lexical baselines compare the premise against it, while
/// entailment models see the full `hypothesis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScoreRequest<'a> {
    pub premise: &'a str,
    pub hypothesis: &'a str,
    pub label: &'a str,
    pub label_text: &'a str,
}

pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    fn score_batch(&self, batch: &[ScoreRequest<'_>]) -> Result<Vec<f64>>;
}

/// Runs a scorer and enforces the contract on its output.
pub fn score_checked(scorer: &dyn Scorer, batch: &[ScoreRequest<'_>]) -> Result<Vec<f64>> {
    let out = scorer.score_batch(batch)?;
    if out.len() != batch.len() {
        return Err(Error::Scorer(format!(
            "{} returned {} scores for {} requests",
            scorer.name(),
            out.len(),
            batch.len()
        )));
    }
    for (i, &p) in out.iter().enumerate() {
        crate::model::check_probability(p, || format!("{} output #{i}", scorer.name()))?;
    }
    Ok(out)
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Maps a cosine in [-1, 1] onto [0, 1].
pub fn cosine_to_probability(cosine: f64) -> f64 {
    ((cosine + 1.0) / 2.0).clamp(0.0, 1.0)
}
