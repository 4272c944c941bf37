//! Turning labels into entailment hypotheses.
//!
//! A hypothesis is the aspect's interpretation template with the
//! placeholder filled by the label name (word mode) or by a dictionary
//! gloss (definition mode). The none-label only ever gets a word-mode
//! hypothesis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{label_key, AspectSpec, HypothesisMode, Label, Mode, PLACEHOLDER};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub label: String,
    pub mode: Mode,
    pub text: String,
}

/// Label name to gloss map, looked up case-insensitively.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GlossLexicon {
    glosses: BTreeMap<String, String>,
}

impl GlossLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: &str, gloss: &str) -> Result<()> {
        if gloss.trim().is_empty() {
            return Err(Error::InvalidLabel(format!("empty gloss for `{label}`")));
        }
        self.glosses.insert(label_key(label), gloss.to_string());
        Ok(())
    }

    /// Parses a JSON object mapping label names to glosses.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, String> = serde_json::from_str(text)?;
        let mut lex = GlossLexicon::new();
        for (label, gloss) in &raw {
            lex.insert(label, gloss)?;
        }
        Ok(lex)
    }

    /// Collects the glosses embedded in an aspect's label list.
    pub fn from_aspect(aspect: &AspectSpec) -> Self {
        let glosses = aspect
            .all_labels()
            .filter_map(|l| l.gloss.as_ref().map(|g| (l.key(), g.clone())))
            .collect();
        GlossLexicon { glosses }
    }

    pub fn get(&self, label: &str) -> Option<&str> {
        self.glosses.get(&label_key(label)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.glosses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.glosses.is_empty()
    }
}

fn fill(aspect: &AspectSpec, filler: &str) -> String {
    aspect.interpretation.replacen(PLACEHOLDER, filler, 1)
}

fn resolve<'a>(aspect: &'a AspectSpec, label: &str) -> Result<&'a Label> {
    aspect
        .resolve(label)
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

pub fn render_word(aspect: &AspectSpec, label: &str) -> Result<Hypothesis> {
    let label = resolve(aspect, label)?;
    Ok(Hypothesis {
        label: label.name.clone(),
        mode: Mode::Word,
        text: fill(aspect, &label.name),
    })
}

pub fn render_definition(
    aspect: &AspectSpec,
    label: &str,
    lexicon: &GlossLexicon,
) -> Result<Hypothesis> {
    let label = resolve(aspect, label)?;
    let gloss = lexicon
        .get(&label.name)
        .ok_or_else(|| Error::MissingGloss(label.name.clone()))?;
    Ok(Hypothesis {
        label: label.name.clone(),
        mode: Mode::Definition,
        text: fill(aspect, gloss),
    })
}

/// The text that fills the placeholder for `label` in `mode`: the label
/// name itself, or its gloss.
pub fn filler<'a>(
    aspect: &'a AspectSpec,
    label: &str,
    mode: Mode,
    lexicon: &'a GlossLexicon,
) -> Result<&'a str> {
    let label = resolve(aspect, label)?;
    match mode {
        Mode::Word => Ok(&label.name),
        Mode::Definition => lexicon
            .get(&label.name)
            .ok_or_else(|| Error::MissingGloss(label.name.clone())),
    }
}

/// Hypotheses for every label, label-major, modes in word-then-definition
/// order. The none-label comes last with a single word-mode hypothesis.
pub fn hypothesis_set(
    aspect: &AspectSpec,
    mode: HypothesisMode,
    lexicon: &GlossLexicon,
) -> Result<Vec<Hypothesis>> {
    let modes = mode.modes();
    if modes.contains(&Mode::Definition) {
        if let Some(missing) = aspect
            .labels
            .iter()
            .find(|l| lexicon.get(&l.name).is_none())
        {
            return Err(Error::MissingGloss(missing.name.clone()));
        }
    }
    let mut out = Vec::with_capacity(aspect.labels.len() * modes.len() + 1);
    for label in &aspect.labels {
        for &m in modes {
            out.push(match m {
                Mode::Word => render_word(aspect, &label.name)?,
                Mode::Definition => render_definition(aspect, &label.name, lexicon)?,
            });
        }
    }
    if let Some(none) = &aspect.none_label {
        out.push(render_word(aspect, &none.name)?);
    }
    Ok(out)
}
