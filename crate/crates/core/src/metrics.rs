//! Accuracy and label-wise weighted F1, with seen/unseen breakdowns.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{label_key, Instance, SeenUnseenPartition};
use crate::policy::Prediction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    WeightedF1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric_kind: MetricKind,
    pub overall: f64,
    /// `None` when the side has no instances / support (serialized as null).
    pub seen: Option<f64>,
    pub unseen: Option<f64>,
    pub instances: usize,
    pub per_label: Vec<LabelMetrics>,
}

/// Gold and predicted label keys, aligned by instance id.
struct Aligned {
    rows: Vec<(Vec<String>, Vec<String>)>,
}

fn align(preds: &[Prediction], golds: &[Instance]) -> Result<Aligned> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(Error::Metric(format!(
                "duplicate prediction for `{}`",
                p.id
            )));
        }
    }
    if by_id.len() != golds.len() {
        return Err(Error::Metric(format!(
            "id mismatch: {} predictions for {} gold instances",
            by_id.len(),
            golds.len()
        )));
    }
    let rows = golds
        .iter()
        .map(|g| {
            let p = by_id
                .get(g.id.as_str())
                .ok_or_else(|| Error::Metric(format!("no prediction for `{}`", g.id)))?;
            let gold: Vec<String> = dedup(g.gold.iter().map(|s| label_key(s)));
            let pred: Vec<String> = dedup(p.labels.iter().map(|s| label_key(s)));
            Ok((gold, pred))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Aligned { rows })
}

fn dedup(it: impl Iterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = Vec::new();
    for s in it {
        if !v.contains(&s) {
            v.push(s);
        }
    }
    v
}

fn accuracy_of(rows: &[&(Vec<String>, Vec<String>)]) -> Result<Option<f64>> {
    if rows.is_empty() {
        return Ok(None);
    }
    let mut correct = 0usize;
    for (gold, pred) in rows {
        if gold.len() != 1 || pred.len() != 1 {
            return Err(Error::Metric(
                "accuracy needs exactly one gold and one predicted label".into(),
            ));
        }
        if gold[0] == pred[0] {
            correct += 1;
        }
    }
    Ok(Some(correct as f64 / rows.len() as f64))
}

/// Fraction of instances whose single predicted label equals the gold one.
pub fn accuracy(preds: &[Prediction], golds: &[Instance]) -> Result<f64> {
    let a = align(preds, golds)?;
    let rows: Vec<_> = a.rows.iter().collect();
    Ok(accuracy_of(&rows)?.unwrap_or(0.0))
}

fn f1(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let r = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

fn per_label(aligned: &Aligned, labels: &[String]) -> Result<Vec<LabelMetrics>> {
    let keys: Vec<String> = labels.iter().map(|l| label_key(l)).collect();
    for (gold, pred) in &aligned.rows {
        for g in gold {
            if !keys.contains(g) {
                return Err(Error::Metric(format!("gold label `{g}` not in label set")));
            }
        }
        for p in pred {
            if !keys.contains(p) {
                return Err(Error::Metric(format!(
                    "prediction references unknown label `{p}`"
                )));
            }
        }
    }
    Ok(labels
        .iter()
        .zip(&keys)
        .map(|(name, key)| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (gold, pred) in &aligned.rows {
                match (gold.contains(key), pred.contains(key)) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    (false, false) => {}
                }
            }
            let (precision, recall, f1) = f1(tp, fp, fn_);
            LabelMetrics {
                label: name.clone(),
                precision,
                recall,
                f1,
                support: tp + fn_,
            }
        })
        .collect())
}

/// Support-weighted mean F1 over `subset`; `None` if it has no support.
fn weighted(per: &[LabelMetrics], subset: impl Fn(&str) -> bool) -> Option<f64> {
    let total: usize = per
        .iter()
        .filter(|m| subset(&m.label))
        .map(|m| m.support)
        .sum();
    if total == 0 {
        return None;
    }
    Some(
        per.iter()
            .filter(|m| subset(&m.label))
            .map(|m| m.support as f64 / total as f64 * m.f1)
            .sum(),
    )
}

/// Per-label precision/recall/F1 and their gold-support-weighted mean.
pub fn weighted_f1(
    preds: &[Prediction],
    golds: &[Instance],
    labels: &[String],
) -> Result<EvalReport> {
    let aligned = align(preds, golds)?;
    let per = per_label(&aligned, labels)?;
    Ok(EvalReport {
        metric_kind: MetricKind::WeightedF1,
        overall: weighted(&per, |_| true).unwrap_or(0.0),
        seen: None,
        unseen: None,
        instances: golds.len(),
        per_label: per,
    })
}

/// Metric restricted to the seen and the unseen side of `partition`.
///
/// Accuracy is computed over the instances whose gold label falls on each
/// side; weighted F1 over each side's labels with weights renormalized
/// within the side. An empty side yields `None`.
pub fn seen_unseen_breakdown(
    kind: MetricKind,
    preds: &[Prediction],
    golds: &[Instance],
    labels: &[String],
    partition: &SeenUnseenPartition,
) -> Result<(Option<f64>, Option<f64>)> {
    let aligned = align(preds, golds)?;
    match kind {
        MetricKind::Accuracy => {
            let side = |seen: bool| -> Result<Option<f64>> {
                let rows: Vec<_> = aligned
                    .rows
                    .iter()
                    .filter(|(g, _)| g.first().is_some_and(|l| partition.is_seen(l) == seen))
                    .collect();
                accuracy_of(&rows)
            };
            Ok((side(true)?, side(false)?))
        }
        MetricKind::WeightedF1 => {
            let per = per_label(&aligned, labels)?;
            Ok((
                weighted(&per, |l| partition.is_seen(l)),
                weighted(&per, |l| partition.is_unseen(l)),
            ))
        }
    }
}

/// Full report: overall value, per-label table and optional breakdown.
pub fn evaluate(
    kind: MetricKind,
    preds: &[Prediction],
    golds: &[Instance],
    labels: &[String],
    partition: Option<&SeenUnseenPartition>,
) -> Result<EvalReport> {
    let mut report = weighted_f1(preds, golds, labels)?;
    report.metric_kind = kind;
    if kind == MetricKind::Accuracy {
        report.overall = accuracy(preds, golds)?;
    }
    if let Some(p) = partition {
        let (s, u) = seen_unseen_breakdown(kind, preds, golds, labels, p)?;
        report.seen = s;
        report.unseen = u;
    }
    Ok(report)
}

impl EvalReport {
    /// Aligned plain-text rendering.
    pub fn to_table(&self) -> String {
        let name = match self.metric_kind {
            MetricKind::Accuracy => "accuracy",
            MetricKind::WeightedF1 => "weighted F1",
        };
        let fmt =
            |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.1}", 100.0 * x));
        let width = self
            .per_label
            .iter()
            .map(|m| m.label.chars().count())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = String::new();
        let _ = writeln!(out, "metric     {name}");
        let _ = writeln!(out, "instances  {}", self.instances);
        let _ = writeln!(out, "overall    {}", fmt(Some(self.overall)));
        if self.seen.is_some() || self.unseen.is_some() {
            let _ = writeln!(out, "seen       {}", fmt(self.seen));
            let _ = writeln!(out, "unseen     {}", fmt(self.unseen));
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>6}  {:>6}  {:>7}",
            "label", "precision", "recall", "f1", "support"
        );
        for m in &self.per_label {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.1}  {:>6.1}  {:>6.1}  {:>7}",
                m.label,
                100.0 * m.precision,
                100.0 * m.recall,
                100.0 * m.f1,
                m.support
            );
        }
        out
    }
}
