//! Classification data to binary entailment pairs.
//!
//! Each instance text becomes the premise. A label's hypothesis is a
//! positive pair when the label is gold for the instance and a negative
//! pair otherwise. In training data only seen labels produce pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{hypothesis_set, GlossLexicon, Hypothesis};
use crate::model::{AspectSpec, HypothesisMode, Instance, Mode, SeenUnseenPartition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gold {
    Entail,
    NonEntail,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntailmentPair {
    pub instance_id: String,
    pub premise: String,
    pub hypothesis: Hypothesis,
    pub gold: Gold,
}

/// Flat export row, one per line of a pairs file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub instance_id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: String,
    pub mode: Mode,
    pub gold: Gold,
}

impl From<&EntailmentPair> for PairRecord {
    fn from(p: &EntailmentPair) -> Self {
        PairRecord {
            instance_id: p.instance_id.clone(),
            premise: p.premise.clone(),
            hypothesis: p.hypothesis.text.clone(),
            label: p.hypothesis.label.clone(),
            mode: p.hypothesis.mode,
            gold: p.gold,
        }
    }
}

pub fn to_records(pairs: &[EntailmentPair]) -> Vec<PairRecord> {
    pairs.iter().map(PairRecord::from).collect()
}

fn emit(instance: &Instance, hypotheses: &[Hypothesis], out: &mut Vec<EntailmentPair>) {
    for h in hypotheses {
        out.push(EntailmentPair {
            instance_id: instance.id.clone(),
            premise: instance.text.clone(),
            hypothesis: h.clone(),
            gold: if instance.has_gold(&h.label) {
                Gold::Entail
            } else {
                Gold::NonEntail
            },
        });
    }
}

/// Training pairs: every gold label must be seen, and unseen labels
/// contribute no hypotheses at all.
pub fn build_train_pairs(
    instances: &[Instance],
    aspect: &AspectSpec,
    partition: &SeenUnseenPartition,
    mode: HypothesisMode,
    lexicon: &GlossLexicon,
) -> Result<Vec<EntailmentPair>> {
    partition.validate(aspect)?;
    let seen_hypotheses: Vec<Hypothesis> = hypothesis_set(aspect, mode, lexicon)?
        .into_iter()
        .filter(|h| partition.is_seen(&h.label))
        .collect();
    let mut out = Vec::with_capacity(instances.len() * seen_hypotheses.len());
    for inst in instances {
        if let Some(g) = inst.gold.iter().find(|g| !partition.is_seen(g)) {
            return Err(Error::UnseenGold {
                instance: inst.id.clone(),
                label: g.clone(),
            });
        }
        emit(inst, &seen_hypotheses, &mut out);
    }
    Ok(out)
}

/// Evaluation pairs over the full label set, none-label included.
pub fn build_eval_pairs(
    instances: &[Instance],
    aspect: &AspectSpec,
    mode: HypothesisMode,
    lexicon: &GlossLexicon,
) -> Result<Vec<EntailmentPair>> {
    let hypotheses = hypothesis_set(aspect, mode, lexicon)?;
    let mut out = Vec::with_capacity(instances.len() * hypotheses.len());
    for inst in instances {
        emit(inst, &hypotheses, &mut out);
    }
    Ok(out)
}
