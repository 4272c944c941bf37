//! Explicit Semantic Analysis over a user-supplied article corpus.
//!
//! Each token maps to a sparse vector over article "concepts" with weights
//! `tf(t, a) * ln(N / df(t))`. A text is projected by summing the concept
//! rows of its tokens; premise and label are compared by cosine.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorers::{cosine_to_probability, tokenize, ScoreRequest, Scorer};

pub const ESA_FORMAT_VERSION: u32 = 1;

/// Inverted index from tokens to (article, term frequency) postings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptIndex {
    format_version: u32,
    articles: Vec<String>,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

/// Sparse concept vector, keyed by article id.
pub type ConceptVector = BTreeMap<u32, f64>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Article {
    pub title: String,
    pub text: String,
}

/// Reads a concept corpus: one `{"title": .., "text": ..}` object per line.
pub fn parse_corpus(input: &str) -> Result<Vec<Article>> {
    crate::model::parse_jsonl(input)
}

/// Builds the index from `(title, body)` pairs. Titles must be unique;
/// articles whose body has no tokens are dropped with a warning.
pub fn esa_build<T: AsRef<str>, B: AsRef<str>>(corpus: &[(T, B)]) -> Result<ConceptIndex> {
    if corpus.is_empty() {
        return Err(Error::Esa("empty corpus".into()));
    }
    let mut titles = HashSet::new();
    for (title, _) in corpus {
        if !titles.insert(title.as_ref()) {
            return Err(Error::Esa(format!("duplicate title `{}`", title.as_ref())));
        }
    }
    let mut articles = Vec::new();
    let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    for (title, body) in corpus {
        let tokens = tokenize(body.as_ref());
        if tokens.is_empty() {
            log::warn!("dropping article `{}` with empty body", title.as_ref());
            continue;
        }
        let id =
            u32::try_from(articles.len()).map_err(|_| Error::Esa("too many articles".into()))?;
        articles.push(title.as_ref().to_string());
        let mut tf: HashMap<String, u32> = HashMap::new();
        for t in tokens {
            *tf.entry(t).or_default() += 1;
        }
        for (t, n) in tf {
            postings.entry(t).or_default().push((id, n));
        }
    }
    if articles.is_empty() {
        return Err(Error::Esa("every article body is empty".into()));
    }
    Ok(ConceptIndex {
        format_version: ESA_FORMAT_VERSION,
        articles,
        postings,
    })
}

impl ConceptIndex {
    pub fn article_count(&self) -> usize {
        self.articles.len()
    }

    pub fn articles(&self) -> &[String] {
        &self.articles
    }

    pub fn document_frequency(&self, token: &str) -> usize {
        self.postings.get(token).map_or(0, Vec::len)
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn idf(&self, token: &str) -> f64 {
        match self.document_frequency(token) {
            0 => 0.0,
            df => (self.articles.len() as f64 / df as f64).ln(),
        }
    }

    /// TF-IDF weight of `token` in the article titled `title`.
    pub fn weight(&self, token: &str, title: &str) -> f64 {
        let Some(article) = self.articles.iter().position(|a| a == title) else {
            return 0.0;
        };
        let idf = self.idf(token);
        self.postings
            .get(token)
            .and_then(|ps| ps.iter().find(|(a, _)| *a as usize == article))
            .map_or(0.0, |&(_, tf)| f64::from(tf) * idf)
    }

    /// Sum of the concept rows of every token occurrence in `text`.
    pub fn project(&self, text: &str) -> ConceptVector {
        let mut v = ConceptVector::new();
        for tok in tokenize(text) {
            let Some(ps) = self.postings.get(&tok) else {
                continue;
            };
            let idf = self.idf(&tok);
            if idf == 0.0 {
                continue;
            }
            for &(a, tf) in ps {
                *v.entry(a).or_default() += f64::from(tf) * idf;
            }
        }
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Loads a persisted index, checking version and structural invariants.
    pub fn from_json(text: &str) -> Result<Self> {
        let index: ConceptIndex = serde_json::from_str(text)?;
        index.validate()?;
        Ok(index)
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != ESA_FORMAT_VERSION {
            return Err(Error::Esa(format!(
                "unsupported format version {} (expected {ESA_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.articles.is_empty() {
            return Err(Error::Esa("index has no articles".into()));
        }
        let mut titles = HashSet::new();
        for t in &self.articles {
            if !titles.insert(t) {
                return Err(Error::Esa(format!("duplicate title `{t}`")));
            }
        }
        let n = self.articles.len();
        for (tok, ps) in &self.postings {
            if ps.is_empty() {
                return Err(Error::Esa(format!("empty posting list for `{tok}`")));
            }
            let mut ids = HashSet::new();
            for &(a, tf) in ps {
                if a as usize >= n || tf == 0 || !ids.insert(a) {
                    return Err(Error::Esa(format!(
                        "invalid posting ({a}, {tf}) for `{tok}`"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Keeps only the `k` heaviest concepts (ties broken by article id).
pub fn prune_top_k(v: &ConceptVector, k: usize) -> ConceptVector {
    if v.len() <= k {
        return v.clone();
    }
    let mut entries: Vec<(u32, f64)> = v.iter().map(|(&a, &w)| (a, w)).collect();
    entries.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    entries.truncate(k);
    entries.into_iter().collect()
}

pub fn sparse_cosine(a: &ConceptVector, b: &ConceptVector) -> Option<f64> {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(k, x)| large.get(k).map(|y| x * y))
        .sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na * nb))
    }
}

/// ESA similarity of premise and label text mapped to [0, 1]; 0 when
/// either projection is empty.
pub fn esa_score(index: &ConceptIndex, premise: &str, label_text: &str) -> f64 {
    sparse_cosine(&index.project(premise), &index.project(label_text))
        .map_or(0.0, cosine_to_probability)
}

pub struct EsaScorer {
    index: ConceptIndex,
    top_k: Option<usize>,
}

impl EsaScorer {
    pub fn new(index: ConceptIndex) -> Self {
        EsaScorer { index, top_k: None }
    }

    /// Restricts every projected vector to its `k` strongest concepts.
    pub fn with_top_k(mut self, k: usize) -> Self {
        self.top_k = Some(k);
        self
    }

    fn project(&self, text: &str) -> ConceptVector {
        let v = self.index.project(text);
        match self.top_k {
            Some(k) => prune_top_k(&v, k),
            None => v,
        }
    }
}

impl Scorer for EsaScorer {
    fn name(&self) -> &str {
        "esa"
    }

    fn score_batch(&self, batch: &[ScoreRequest<'_>]) -> Result<Vec<f64>> {
        let mut premises: HashMap<&str, ConceptVector> = HashMap::new();
        let mut labels: HashMap<&str, ConceptVector> = HashMap::new();
        Ok(batch
            .iter()
            .map(|r| {
                if !premises.contains_key(r.premise) {
                    premises.insert(r.premise, self.project(r.premise));
                }
                if !labels.contains_key(r.label_text) {
                    labels.insert(r.label_text, self.project(r.label_text));
                }
                sparse_cosine(&premises[r.premise], &labels[r.label_text])
                    .map_or(0.0, cosine_to_probability)
            })
            .collect())
    }
}
