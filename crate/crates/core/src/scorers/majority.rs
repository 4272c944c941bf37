use crate::error::{Error, Result};
use crate::model::{label_key, AspectSpec, Instance};
use crate::scorers::{ScoreRequest, Scorer};

/// Predicts the most frequent gold label for every text.
///
/// Hypotheses of the majority label score 1.0, everything else 0.0. Ties
/// go to the label that comes first in the aspect.
#[derive(Clone, Debug)]
pub struct MajorityScorer {
    label: String,
}

impl MajorityScorer {
    /// Counts gold labels in `train`; with no training data every label has
    /// the same count and the first label wins.
    pub fn new(aspect: &AspectSpec, train: Option<&[Instance]>) -> Result<Self> {
        let names = aspect.all_label_names();
        let counts: Vec<usize> = match train {
            None => vec![1; names.len()],
            Some(instances) => names
                .iter()
                .map(|n| instances.iter().filter(|i| i.has_gold(n)).count())
                .collect(),
        };
        Self::from_counts(&names, &counts)
    }

    pub fn from_counts<S: AsRef<str>>(labels: &[S], counts: &[usize]) -> Result<Self> {
        if labels.len() != counts.len() {
            return Err(Error::Scorer("label/count length mismatch".into()));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::Scorer(
                "majority baseline: empty label statistics".into(),
            ));
        }
        let mut best = 0;
        for (i, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = i;
            }
        }
        Ok(MajorityScorer {
            label: labels[best].as_ref().to_string(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl Scorer for MajorityScorer {
    fn name(&self) -> &str {
        "majority"
    }

    fn score_batch(&self, batch: &[ScoreRequest<'_>]) -> Result<Vec<f64>> {
        let key = label_key(&self.label);
        Ok(batch
            .iter()
            .map(|r| if label_key(r.label) == key { 1.0 } else { 0.0 })
            .collect())
    }
}
