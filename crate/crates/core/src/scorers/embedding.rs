//! Additive word-embedding baseline.
//!
//! Text and label are each represented by the element-wise sum of their
//! token vectors; the score is their cosine mapped onto [0, 1].

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::scorers::{cosine_to_probability, tokenize, ScoreRequest, Scorer};

/// Dense word vectors of one fixed dimension, keyed by lowercased token.
#[derive(Clone, Debug, Default)]
pub struct WordVectorTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::WordVectors(format!("line {line}: {}", msg.into()))
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Self {
        WordVectorTable {
            dim,
            ..Default::default()
        }
    }

    /// Adds a vector. Keys are lowercased; the first vector for a key wins.
    pub fn insert(&mut self, token: &str, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::WordVectors(format!(
                "`{token}` has dimension {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        let key = token.to_lowercase();
        if !self.index.contains_key(&key) {
            self.index.insert(key, self.data.len() / self.dim.max(1));
            self.data.extend_from_slice(vector);
        }
        Ok(())
    }

    /// Reads the plain-text format: one `token v1 .. vd` row per line, with
    /// an optional leading `count dim` header.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut table: Option<WordVectorTable> = None;
        let mut declared: Option<usize> = None;
        let mut rows = 0usize;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 {
                if let (Ok(count), Ok(dim)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                    if dim == 0 {
                        return Err(bad(lineno, "header declares dimension 0"));
                    }
                    declared = Some(count);
                    table = Some(WordVectorTable::new(dim));
                    continue;
                }
            }
            let values = rest
                .iter()
                .map(|v| match v.parse::<f32>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(bad(lineno, format!("bad component `{v}`"))),
                })
                .collect::<Result<Vec<f32>>>()?;
            if values.is_empty() {
                return Err(bad(lineno, format!("`{token}` has no components")));
            }
            let t = table.get_or_insert_with(|| WordVectorTable::new(values.len()));
            if values.len() != t.dim {
                return Err(bad(
                    lineno,
                    format!("dimension {} but table has {}", values.len(), t.dim),
                ));
            }
            t.insert(token, &values)?;
            rows += 1;
        }
        if let Some(count) = declared {
            if count != rows {
                log::warn!("word vector header declares {count} rows, read {rows}");
            }
        }
        table.ok_or_else(|| Error::WordVectors("no vectors".into()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index
            .get(token)
            .map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    /// Sum of the vectors of all in-vocabulary tokens of `text`.
    pub fn sum_text(&self, text: &str) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.dim];
        for tok in tokenize(text) {
            if let Some(v) = self.get(&tok) {
                for (a, &x) in acc.iter_mut().zip(v) {
                    *a += f64::from(x);
                }
            }
        }
        acc
    }
}

pub(crate) fn dense_cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na * nb))
    }
}

/// Cosine of the summed premise and label vectors, mapped to [0, 1].
/// Returns 0 when either side has no in-vocabulary tokens.
pub fn embedding_cosine_score(table: &WordVectorTable, premise: &str, label_text: &str) -> f64 {
    let text = table.sum_text(premise);
    let label = table.sum_text(label_text);
    dense_cosine(&text, &label).map_or(0.0, cosine_to_probability)
}

pub struct EmbeddingScorer {
    table: WordVectorTable,
}

impl EmbeddingScorer {
    pub fn new(table: WordVectorTable) -> Self {
        EmbeddingScorer { table }
    }
}

impl Scorer for EmbeddingScorer {
    fn name(&self) -> &str {
        "embedding"
    }

    fn score_batch(&self, batch: &[ScoreRequest<'_>]) -> Result<Vec<f64>> {
        // Premises repeat once per label; cache their sums.
        let mut cache: HashMap<&str, Vec<f64>> = HashMap::new();
        Ok(batch
            .iter()
            .map(|r| {
                let text = cache
                    .entry(r.premise)
                    .or_insert_with(|| self.table.sum_text(r.premise));
                let label = self.table.sum_text(r.label_text);
                dense_cosine(text, &label).map_or(0.0, cosine_to_probability)
            })
            .collect())
    }
}
