//! Scorer specification strings.
//!
//! ```text
//! majority
//! embedding:<vectors file>
//! esa:<index file>
//! external:<base url>      (bare `external` takes the endpoint from the environment)
//! ensemble:[<spec>,<spec>,...]
//! ```

use std::fmt;

use crate::error::{config, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScorerSpec {
    Majority,
    Embedding(String),
    Esa(String),
    External(Option<String>),
    Ensemble(Vec<ScorerSpec>),
}

impl ScorerSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a.trim())),
            None => (text, None),
        };
        let need = |what: &str| -> Result<String> {
            match arg {
                Some(a) if !a.is_empty() => Ok(a.to_string()),
                _ => Err(config(format!(
                    "scorer `{head}` needs {what}, e.g. `{head}:<{what}>`"
                ))),
            }
        };
        match head {
            "majority" if arg.is_none() => Ok(ScorerSpec::Majority),
            "embedding" => Ok(ScorerSpec::Embedding(need("path")?)),
            "esa" => Ok(ScorerSpec::Esa(need("path")?)),
            "external" => Ok(ScorerSpec::External(
                arg.filter(|a| !a.is_empty()).map(str::to_string),
            )),
            "ensemble" => {
                let inner = arg
                    .and_then(|a| a.strip_prefix('['))
                    .and_then(|a| a.strip_suffix(']'))
                    .ok_or_else(|| config("ensemble members go in brackets: `ensemble:[a,b]`"))?;
                let members = split_top_level(inner)?
                    .into_iter()
                    .map(ScorerSpec::parse)
                    .collect::<Result<Vec<_>>>()?;
                if members.is_empty() {
                    return Err(config("ensemble needs at least one member"));
                }
                Ok(ScorerSpec::Ensemble(members))
            }
            _ => Err(config(format!("unknown scorer `{text}`"))),
        }
    }

    /// Applies `f` to every file path in the spec.
    pub fn map_paths(self, f: &impl Fn(String) -> String) -> Self {
        match self {
            ScorerSpec::Embedding(p) => ScorerSpec::Embedding(f(p)),
            ScorerSpec::Esa(p) => ScorerSpec::Esa(f(p)),
            ScorerSpec::Ensemble(m) => {
                ScorerSpec::Ensemble(m.into_iter().map(|s| s.map_paths(f)).collect())
            }
            other => other,
        }
    }

    pub fn paths(&self) -> Vec<&str> {
        match self {
            ScorerSpec::Embedding(p) | ScorerSpec::Esa(p) => vec![p.as_str()],
            ScorerSpec::Ensemble(m) => m.iter().flat_map(ScorerSpec::paths).collect(),
            _ => vec![],
        }
    }
}

fn split_top_level(s: &str) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(config("unbalanced `]` in ensemble spec"));
        }
    }
    if depth != 0 {
        return Err(config("unbalanced `[` in ensemble spec"));
    }
    parts.push(&s[start..]);
    Ok(parts
        .into_iter()
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect())
}

impl fmt::Display for ScorerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerSpec::Majority => f.write_str("majority"),
            ScorerSpec::Embedding(p) => write!(f, "embedding:{p}"),
            ScorerSpec::Esa(p) => write!(f, "esa:{p}"),
            ScorerSpec::External(None) => f.write_str("external"),
            ScorerSpec::External(Some(u)) => write!(f, "external:{u}"),
            ScorerSpec::Ensemble(m) => {
                f.write_str("ensemble:[")?;
                for (i, s) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str("]")
            }
        }
    }
}
