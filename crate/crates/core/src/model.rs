//! Domain types shared by every stage of the pipeline.
//!
//! Label names are compared case-insensitively after trimming (see
//! [`label_key`]); everything else is plain data with validation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The literal token an interpretation template must contain exactly once.
pub const PLACEHOLDER: &str = "{label}";

/// Normalized key used for every label-name comparison.
pub fn label_key(name: &str) -> String {
    name.trim().to_lowercase()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Label {
    pub name: String,
    pub gloss: Option<String>,
}

impl Label {
    pub fn new(name: impl Into<String>) -> Self {
        Label {
            name: name.into(),
            gloss: None,
        }
    }

    pub fn with_gloss(name: impl Into<String>, gloss: impl Into<String>) -> Self {
        Label {
            name: name.into(),
            gloss: Some(gloss.into()),
        }
    }

    pub fn key(&self) -> String {
        label_key(&self.name)
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::InvalidLabel("empty label name".into()));
        }
        if let Some(g) = &self.gloss {
            if g.trim().is_empty() {
                return Err(Error::InvalidLabel(format!(
                    "empty gloss for `{}`",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

// Labels are written as a bare string when they carry no gloss.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LabelRepr {
    Name(String),
    Full {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gloss: Option<String>,
    },
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.gloss {
            None => LabelRepr::Name(self.name.clone()).serialize(s),
            Some(g) => LabelRepr::Full {
                name: self.name.clone(),
                gloss: Some(g.clone()),
            }
            .serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match LabelRepr::deserialize(d)? {
            LabelRepr::Name(name) => Label { name, gloss: None },
            LabelRepr::Full { name, gloss } => Label { name, gloss },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    SingleLabel,
    MultiLabel,
}

/// An aspect: the interpretation template plus its label inventory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AspectSpec {
    pub name: String,
    pub interpretation: String,
    pub labels: Vec<Label>,
    pub task_kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub none_label: Option<Label>,
}

/// Checks every [`AspectSpec`] invariant, returning the spec unchanged.
pub fn validate_aspect(spec: AspectSpec) -> Result<AspectSpec> {
    if spec.name.trim().is_empty() {
        return Err(Error::InvalidAspect("empty aspect name".into()));
    }
    let placeholders = spec.interpretation.matches(PLACEHOLDER).count();
    if placeholders != 1 {
        return Err(Error::InvalidAspect(format!(
            "interpretation `{}` must contain `{PLACEHOLDER}` exactly once (found {placeholders})",
            spec.interpretation
        )));
    }
    if spec.labels.is_empty() {
        return Err(Error::InvalidAspect("aspect has no labels".into()));
    }
    let mut seen = HashSet::new();
    for label in &spec.labels {
        label.validate()?;
        if !seen.insert(label.key()) {
            return Err(Error::InvalidAspect(format!(
                "duplicate label `{}`",
                label.name
            )));
        }
    }
    if let Some(none) = &spec.none_label {
        none.validate()?;
        if seen.contains(&none.key()) {
            return Err(Error::InvalidAspect(format!(
                "none label `{}` collides with a regular label",
                none.name
            )));
        }
    }
    Ok(spec)
}

impl AspectSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        validate_aspect(serde_json::from_str(text)?)
    }

    /// Regular labels followed by the none-label, if any.
    pub fn all_labels(&self) -> impl Iterator<Item = &Label> {
        self.labels.iter().chain(self.none_label.iter())
    }

    pub fn all_label_names(&self) -> Vec<String> {
        self.all_labels().map(|l| l.name.clone()).collect()
    }

    pub fn resolve(&self, name: &str) -> Option<&Label> {
        let key = label_key(name);
        self.all_labels().find(|l| l.key() == key)
    }

    pub fn is_none_label(&self, name: &str) -> bool {
        self.none_label
            .as_ref()
            .is_some_and(|n| n.key() == label_key(name))
    }

    pub fn none_label_name(&self) -> Option<&str> {
        self.none_label.as_ref().map(|l| l.name.as_str())
    }
}

// Raw files sometimes carry numeric ids.
#[derive(Deserialize)]
#[serde(untagged)]
enum IdRepr {
    Str(String),
    Int(i64),
}

fn de_id<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    Ok(match IdRepr::deserialize(d)? {
        IdRepr::Str(s) => s,
        IdRepr::Int(i) => i.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(deserialize_with = "de_id")]
    pub id: String,
    pub text: String,
    #[serde(rename = "labels")]
    pub gold: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

impl Instance {
    pub fn new(id: impl Into<String>, text: impl Into<String>, gold: &[&str]) -> Self {
        Instance {
            id: id.into(),
            text: text.into(),
            gold: gold.iter().map(|s| s.to_string()).collect(),
            domain: None,
        }
    }

    pub fn has_gold(&self, name: &str) -> bool {
        let key = label_key(name);
        self.gold.iter().any(|g| label_key(g) == key)
    }

    fn validate_shape(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::InvalidInstance {
                id: self.id.clone(),
                reason: "empty id".into(),
            });
        }
        if self.gold.is_empty() {
            return Err(Error::InvalidInstance {
                id: self.id.clone(),
                reason: "no gold labels".into(),
            });
        }
        Ok(())
    }

    /// Rewrites gold labels to the aspect's spelling, dropping duplicates,
    /// and enforces the single-label cardinality rule.
    pub fn resolve_against(&self, aspect: &AspectSpec) -> Result<Instance> {
        self.validate_shape()?;
        let mut gold: Vec<String> = Vec::with_capacity(self.gold.len());
        for g in &self.gold {
            let label = aspect
                .resolve(g)
                .ok_or_else(|| Error::UnknownLabel(g.clone()))?;
            if !gold.contains(&label.name) {
                gold.push(label.name.clone());
            }
        }
        if aspect.task_kind == TaskKind::SingleLabel && gold.len() != 1 {
            return Err(Error::InvalidInstance {
                id: self.id.clone(),
                reason: format!(
                    "single-label aspect `{}` but {} gold labels",
                    aspect.name,
                    gold.len()
                ),
            });
        }
        Ok(Instance {
            gold,
            ..self.clone()
        })
    }
}

/// Parses line-delimited JSON; blank lines are skipped and errors carry
/// the 1-based line number.
pub fn parse_jsonl<T: serde::de::DeserializeOwned>(input: &str) -> Result<Vec<T>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn parse_instances(input: &str) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let inst: Instance = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        inst.validate_shape().map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(inst);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut w: W) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_jsonl(items, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Split of an aspect's full label set (regular labels plus none-label)
/// into labels with and without training data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeenUnseenPartition {
    pub seen: Vec<String>,
    pub unseen: Vec<String>,
}

impl SeenUnseenPartition {
    pub fn fully_unseen(aspect: &AspectSpec) -> Self {
        SeenUnseenPartition {
            seen: Vec::new(),
            unseen: aspect.all_label_names(),
        }
    }

    /// Builds a partition with `seen` as given and every other label unseen.
    pub fn from_seen<S: AsRef<str>>(aspect: &AspectSpec, seen: &[S]) -> Result<Self> {
        let mut seen_names = Vec::new();
        for s in seen {
            let label = aspect
                .resolve(s.as_ref())
                .ok_or_else(|| Error::UnknownLabel(s.as_ref().to_string()))?;
            if !seen_names.contains(&label.name) {
                seen_names.push(label.name.clone());
            }
        }
        let unseen = aspect
            .all_labels()
            .filter(|l| !seen_names.contains(&l.name))
            .map(|l| l.name.clone())
            .collect();
        Ok(SeenUnseenPartition {
            seen: seen_names,
            unseen,
        })
    }

    pub fn is_seen(&self, name: &str) -> bool {
        let key = label_key(name);
        self.seen.iter().any(|s| label_key(s) == key)
    }

    pub fn is_unseen(&self, name: &str) -> bool {
        let key = label_key(name);
        self.unseen.iter().any(|s| label_key(s) == key)
    }

    pub fn is_fully_unseen(&self) -> bool {
        self.seen.is_empty()
    }

    /// Checks disjointness and that the union is exactly the aspect's label set.
    pub fn validate(&self, aspect: &AspectSpec) -> Result<()> {
        let seen: BTreeSet<String> = self.seen.iter().map(|s| label_key(s)).collect();
        let unseen: BTreeSet<String> = self.unseen.iter().map(|s| label_key(s)).collect();
        if seen.len() != self.seen.len() || unseen.len() != self.unseen.len() {
            return Err(Error::InvalidPartition("duplicate label".into()));
        }
        if let Some(both) = seen.intersection(&unseen).next() {
            return Err(Error::InvalidPartition(format!(
                "`{both}` is both seen and unseen"
            )));
        }
        let full: BTreeSet<String> = aspect.all_labels().map(Label::key).collect();
        let union: BTreeSet<String> = seen.union(&unseen).cloned().collect();
        if union != full {
            return Err(Error::InvalidPartition(format!(
                "partition does not cover aspect `{}` exactly",
                aspect.name
            )));
        }
        Ok(())
    }
}

/// Hypothesis rendering mode of a single hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Word,
    Definition,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Word => "word",
            Mode::Definition => "definition",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Requested hypothesis set: one mode, or both ("combination").
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HypothesisMode {
    Word,
    Definition,
    Combination,
}

impl HypothesisMode {
    pub fn modes(self) -> &'static [Mode] {
        match self {
            HypothesisMode::Word => &[Mode::Word],
            HypothesisMode::Definition => &[Mode::Definition],
            HypothesisMode::Combination => &[Mode::Word, Mode::Definition],
        }
    }
}

impl FromStr for HypothesisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(HypothesisMode::Word),
            "definition" => Ok(HypothesisMode::Definition),
            "combination" => Ok(HypothesisMode::Combination),
            other => Err(Error::InvalidAspect(format!(
                "unknown hypothesis mode `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeScores {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definition: Option<f64>,
}

impl ModeScores {
    pub fn get(&self, mode: Mode) -> Option<f64> {
        match mode {
            Mode::Word => self.word,
            Mode::Definition => self.definition,
        }
    }
}

/// One row of a persisted score table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRow {
    pub id: String,
    pub label: String,
    pub mode: Mode,
    pub entail: f64,
}

/// Entailment probabilities keyed by (instance id, label name), one slot per mode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreTable {
    rows: BTreeMap<(String, String), ModeScores>,
    order: Vec<String>,
    known: HashSet<String>,
}

pub(crate) fn check_probability(value: f64, context: impl FnOnce() -> String) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::ProbabilityOutOfRange {
            value,
            context: context(),
        })
    }
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, instance: &str, label: &str, mode: Mode, value: f64) -> Result<()> {
        check_probability(value, || format!("instance `{instance}` label `{label}`"))?;
        let key = (instance.to_string(), label_key(label));
        if self.known.insert(instance.to_string()) {
            self.order.push(instance.to_string());
        }
        let slot = self.rows.entry(key).or_default();
        let cell = match mode {
            Mode::Word => &mut slot.word,
            Mode::Definition => &mut slot.definition,
        };
        if cell.is_some() {
            return Err(Error::DuplicateScore {
                instance: instance.into(),
                label: label.into(),
                mode: mode.to_string(),
            });
        }
        *cell = Some(value);
        Ok(())
    }

    pub fn get(&self, instance: &str, label: &str) -> Option<&ModeScores> {
        self.rows.get(&(instance.to_string(), label_key(label)))
    }

    /// Instance ids in order of first insertion.
    pub fn instance_ids(&self) -> &[String] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn from_rows(rows: &[ScoreRow]) -> Result<Self> {
        let mut table = ScoreTable::new();
        for r in rows {
            table.insert(&r.id, &r.label, r.mode, r.entail)?;
        }
        Ok(table)
    }

    pub fn parse_jsonl(input: &str) -> Result<Self> {
        Self::from_rows(&parse_jsonl::<ScoreRow>(input)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topic() -> AspectSpec {
        AspectSpec {
            name: "topic".into(),
            interpretation: "this text is about {label}".into(),
            labels: ["sports", "health", "politics"].map(Label::new).to_vec(),
            task_kind: TaskKind::SingleLabel,
            none_label: None,
        }
    }

    #[test]
    fn accepts_well_formed_aspect() {
        let spec = topic();
        assert_eq!(validate_aspect(spec.clone()).unwrap(), spec);
    }

    #[test]
    fn accepts_ten_label_topic_spec() {
        let mut spec = topic();
        spec.labels = (0..10).map(|i| Label::new(format!("l{i}"))).collect();
        assert!(validate_aspect(spec).is_ok());
    }

    #[test]
    fn rejects_template_without_placeholder() {
        let mut spec = topic();
        spec.interpretation = "about".into();
        assert!(matches!(
            validate_aspect(spec),
            Err(Error::InvalidAspect(_))
        ));
    }

    #[test]
    fn rejects_two_placeholders() {
        let mut spec = topic();
        spec.interpretation = "{label} or {label}".into();
        assert!(validate_aspect(spec).is_err());
    }

    #[test]
    fn rejects_duplicate_labels() {
        let mut spec = topic();
        spec.labels = vec![Label::new("joy"), Label::new("joy")];
        assert!(validate_aspect(spec).is_err());
        let mut spec = topic();
        spec.labels = vec![Label::new("Joy"), Label::new(" joy ")];
        assert!(validate_aspect(spec).is_err());
    }

    #[test]
    fn rejects_colliding_none_label() {
        let mut spec = topic();
        spec.none_label = Some(Label::new("Sports"));
        assert!(validate_aspect(spec).is_err());
    }

    #[test]
    fn rejects_empty_gloss() {
        let mut spec = topic();
        spec.labels[0].gloss = Some("  ".into());
        assert!(validate_aspect(spec).is_err());
    }

    #[test]
    fn resolves_case_insensitively() {
        let spec = topic();
        assert_eq!(spec.resolve("  SPORTS ").unwrap().name, "sports");
        assert!(spec.resolve("music").is_none());
    }

    #[test]
    fn label_json_accepts_string_or_object() {
        let l: Label = serde_json::from_str(r#""joy""#).unwrap();
        assert_eq!(l, Label::new("joy"));
        let l: Label =
            serde_json::from_str(r#"{"name":"joy","gloss":"the emotion of great happiness"}"#)
                .unwrap();
        assert_eq!(l.gloss.as_deref(), Some("the emotion of great happiness"));
    }

    #[test]
    fn instance_parse_reports_line() {
        let input = "{\"id\":\"a\",\"text\":\"x\",\"labels\":[\"sports\"]}\n\n{\"id\":\"b\",\"labels\":[\"sports\"]}\n";
        match parse_instances(input) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn instance_numeric_id() {
        let v = parse_instances("{\"id\":17,\"text\":\"x\",\"labels\":[\"a\"]}").unwrap();
        assert_eq!(v[0].id, "17");
    }

    #[test]
    fn instance_requires_gold() {
        assert!(parse_instances("{\"id\":\"a\",\"text\":\"x\",\"labels\":[]}").is_err());
    }

    #[test]
    fn resolve_against_canonicalizes_and_checks_cardinality() {
        let spec = topic();
        let inst = Instance::new("1", "t", &["Sports", "sports"]);
        assert_eq!(inst.resolve_against(&spec).unwrap().gold, vec!["sports"]);
        let inst = Instance::new("1", "t", &["sports", "health"]);
        assert!(inst.resolve_against(&spec).is_err());
        let inst = Instance::new("1", "t", &["music"]);
        assert!(matches!(
            inst.resolve_against(&spec),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn partition_validation() {
        let spec = topic();
        let p = SeenUnseenPartition::from_seen(&spec, &["sports"]).unwrap();
        assert_eq!(p.unseen, vec!["health", "politics"]);
        p.validate(&spec).unwrap();
        let bad = SeenUnseenPartition {
            seen: vec!["sports".into()],
            unseen: vec!["sports".into(), "health".into(), "politics".into()],
        };
        assert!(bad.validate(&spec).is_err());
        let missing = SeenUnseenPartition {
            seen: vec![],
            unseen: vec!["sports".into()],
        };
        assert!(missing.validate(&spec).is_err());
        SeenUnseenPartition::fully_unseen(&spec)
            .validate(&spec)
            .unwrap();
    }

    #[test]
    fn score_table_rejects_out_of_range_and_duplicates() {
        let mut t = ScoreTable::new();
        t.insert("a", "x", Mode::Word, 0.3).unwrap();
        assert!(t.insert("a", "x", Mode::Word, 0.4).is_err());
        assert!(t.insert("a", "y", Mode::Word, 1.2).is_err());
        assert!(t.insert("a", "y", Mode::Word, f64::NAN).is_err());
        t.insert("a", "X", Mode::Definition, 0.9).unwrap();
        let s = t.get("a", "x").unwrap();
        assert_eq!((s.word, s.definition), (Some(0.3), Some(0.9)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn label_strategy() -> impl Strategy<Value = Label> {
            ("[a-z]{1,8}", proptest::option::of("[a-z ]{0,10}[a-z]"))
                .prop_map(|(n, g)| Label { name: n, gloss: g })
        }

        proptest! {
            #[test]
            fn aspect_round_trips(labels in proptest::collection::vec(label_strategy(), 1..6), multi in any::<bool>()) {
                let mut uniq = Vec::new();
                for l in labels {
                    if !uniq.iter().any(|u: &Label| u.key() == l.key()) && l.name != "none" {
                        uniq.push(l);
                    }
                }
                let spec = AspectSpec {
                    name: "a".into(),
                    interpretation: "x {label} y".into(),
                    labels: uniq,
                    task_kind: if multi { TaskKind::MultiLabel } else { TaskKind::SingleLabel },
                    none_label: multi.then(|| Label::new("none")),
                };
                let spec = validate_aspect(spec).unwrap();
                let json = serde_json::to_string(&spec).unwrap();
                prop_assert_eq!(AspectSpec::from_json(&json).unwrap(), spec);
            }

            #[test]
            fn instance_round_trips(id in "[a-z0-9]{1,6}", text in ".{0,40}", gold in proptest::collection::vec("[a-z]{1,5}", 1..4), domain in proptest::option::of("[a-z]{1,6}")) {
                let inst = Instance { id, text, gold, domain };
                let line = to_jsonl(std::slice::from_ref(&inst)).unwrap();
                prop_assert_eq!(parse_instances(&line).unwrap(), vec![inst]);
            }
        }
    }
}
