//! From entailment probabilities to label predictions.
//!
//! A label is positive when its probability (max over hypothesis modes)
//! exceeds `positive_threshold`. When positive seen and unseen labels
//! compete, seen labels must beat the best unseen label by a margin
//! `alpha` to survive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{label_key, AspectSpec, ScoreTable, SeenUnseenPartition, TaskKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub alpha: f64,
    pub positive_threshold: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            alpha: 0.05,
            positive_threshold: 0.5,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<Self> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidPolicy(format!(
                "alpha {} not in [0, 1)",
                self.alpha
            )));
        }
        if !(self.positive_threshold > 0.0 && self.positive_threshold < 1.0) {
            return Err(Error::InvalidPolicy(format!(
                "positive_threshold {} not in (0, 1)",
                self.positive_threshold
            )));
        }
        Ok(*self)
    }

    pub fn is_positive(&self, p: f64) -> bool {
        p > self.positive_threshold
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub id: String,
    pub labels: Vec<String>,
}

/// Probability that `label` holds for `instance`: the max over whichever
/// hypothesis modes were scored.
pub fn aggregate_modes(table: &ScoreTable, instance: &str, label: &str) -> Result<f64> {
    let missing = || Error::MissingScore {
        instance: instance.into(),
        label: label.into(),
    };
    let s = table.get(instance, label).ok_or_else(missing)?;
    match (s.word, s.definition) {
        (Some(w), Some(d)) => Ok(w.max(d)),
        (Some(p), None) | (None, Some(p)) => Ok(p),
        (None, None) => Err(missing()),
    }
}

/// Index of the highest probability among `candidates`; the earliest
/// wins ties.
fn argmax(probs: &[(String, f64)], candidates: impl Iterator<Item = usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in candidates {
        if best.is_none_or(|b| probs[i].1 > probs[b].1) {
            best = Some(i);
        }
    }
    best
}

fn check_coverage(probs: &[(String, f64)], partition: &SeenUnseenPartition) -> Result<()> {
    for (label, p) in probs {
        if !(p.is_finite() && (0.0..=1.0).contains(p)) {
            return Err(Error::ProbabilityOutOfRange {
                value: *p,
                context: format!("label `{label}`"),
            });
        }
        if !partition.is_seen(label) && !partition.is_unseen(label) {
            return Err(Error::Coverage(format!("label `{label}` not in partition")));
        }
    }
    for l in partition.seen.iter().chain(&partition.unseen) {
        let key = label_key(l);
        match probs.iter().filter(|(n, _)| label_key(n) == key).count() {
            1 => {}
            0 => return Err(Error::Coverage(format!("no probability for label `{l}`"))),
            _ => return Err(Error::Coverage(format!("label `{l}` given twice"))),
        }
    }
    Ok(())
}

/// Single-label decision under the seen/unseen margin rule.
pub fn decide_single(
    id: &str,
    probs: &[(String, f64)],
    partition: &SeenUnseenPartition,
    config: &PolicyConfig,
) -> Result<Prediction> {
    check_coverage(probs, partition)?;
    let positive: Vec<usize> = (0..probs.len())
        .filter(|&i| config.is_positive(probs[i].1))
        .collect();
    let top_seen = argmax(
        probs,
        positive
            .iter()
            .copied()
            .filter(|&i| partition.is_seen(&probs[i].0)),
    );
    let top_unseen = argmax(
        probs,
        positive
            .iter()
            .copied()
            .filter(|&i| partition.is_unseen(&probs[i].0)),
    );
    let pick = match (top_seen, top_unseen) {
        (Some(s), Some(u)) => {
            if probs[s].1 > probs[u].1 + config.alpha {
                s
            } else {
                u
            }
        }
        (Some(_), None) | (None, Some(_)) => argmax(probs, positive.into_iter()).unwrap(),
        (None, None) => argmax(probs, 0..probs.len())
            .ok_or_else(|| Error::Coverage("no labels to choose from".into()))?,
    };
    Ok(Prediction {
        id: id.into(),
        labels: vec![probs[pick].0.clone()],
    })
}

/// Multi-label decision: every positive label survives except seen labels
/// that fail to beat the top positive unseen label by `alpha`. The
/// none-label is only a fallback for an empty result.
pub fn decide_multi(
    id: &str,
    probs: &[(String, f64)],
    partition: &SeenUnseenPartition,
    none_label: &str,
    config: &PolicyConfig,
) -> Result<Prediction> {
    check_coverage(probs, partition)?;
    let none_key = label_key(none_label);
    let none = probs
        .iter()
        .find(|(l, _)| label_key(l) == none_key)
        .ok_or_else(|| Error::Coverage(format!("no probability for none-label `{none_label}`")))?;
    let positive: Vec<usize> = (0..probs.len())
        .filter(|&i| label_key(&probs[i].0) != none_key && config.is_positive(probs[i].1))
        .collect();
    let any_seen = positive.iter().any(|&i| partition.is_seen(&probs[i].0));
    let top_unseen = argmax(
        probs,
        positive
            .iter()
            .copied()
            .filter(|&i| partition.is_unseen(&probs[i].0)),
    );
    let labels: Vec<String> = positive
        .into_iter()
        .filter(|&i| match top_unseen {
            Some(u) if any_seen && partition.is_seen(&probs[i].0) => {
                probs[i].1 >= probs[u].1 + config.alpha
            }
            _ => true,
        })
        .map(|i| probs[i].0.clone())
        .collect();
    Ok(Prediction {
        id: id.into(),
        labels: if labels.is_empty() {
            vec![none.0.clone()]
        } else {
            labels
        },
    })
}

/// Decision with no seen labels at all.
pub fn decide_fully_unseen(
    id: &str,
    probs: &[(String, f64)],
    config: &PolicyConfig,
    task_kind: TaskKind,
    none_label: Option<&str>,
) -> Result<Prediction> {
    let partition = SeenUnseenPartition {
        seen: Vec::new(),
        unseen: probs.iter().map(|(l, _)| l.clone()).collect(),
    };
    match task_kind {
        TaskKind::SingleLabel => decide_single(id, probs, &partition, config),
        TaskKind::MultiLabel => {
            let none = none_label.ok_or_else(|| {
                Error::InvalidAspect("multi-label decisions need a none-label".into())
            })?;
            decide_multi(id, probs, &partition, none, config)
        }
    }
}

/// Probabilities for every label of the aspect, in aspect order.
pub fn label_probabilities(
    table: &ScoreTable,
    aspect: &AspectSpec,
    instance: &str,
) -> Result<Vec<(String, f64)>> {
    aspect
        .all_labels()
        .map(|l| Ok((l.name.clone(), aggregate_modes(table, instance, &l.name)?)))
        .collect()
}

/// Predictions for every instance in the table, in table order. Without
/// a partition (or with no seen labels) the fully-unseen rules apply.
pub fn predict(
    table: &ScoreTable,
    aspect: &AspectSpec,
    partition: Option<&SeenUnseenPartition>,
    config: &PolicyConfig,
) -> Result<Vec<Prediction>> {
    config.validate()?;
    if let Some(p) = partition {
        p.validate(aspect)?;
    }
    let partial = partition.filter(|p| !p.is_fully_unseen());
    table
        .instance_ids()
        .iter()
        .map(|id| {
            let probs = label_probabilities(table, aspect, id)?;
            match (partial, aspect.task_kind) {
                (None, kind) => {
                    decide_fully_unseen(id, &probs, config, kind, aspect.none_label_name())
                }
                (Some(p), TaskKind::SingleLabel) => decide_single(id, &probs, p, config),
                (Some(p), TaskKind::MultiLabel) => {
                    let none = aspect.none_label_name().ok_or_else(|| {
                        Error::InvalidAspect("multi-label aspect without none-label".into())
                    })?;
                    decide_multi(id, &probs, p, none, config)
                }
            }
        })
        .collect()
}
