//! Benchmark split construction from raw labeled corpora.
//!
//! A [`SplitScheme`] lists quota cells per split. Evaluation splits are
//! filled first, in scheme order, by seeded sampling without replacement;
//! each train version then samples from what is left, restricted to
//! instances whose gold labels are all in that version's seen set.
//!
//! Sampling walks a shuffled pool of eligible instances and accepts an
//! instance iff every one of its gold labels still has room in the
//! matching cell. For single-label data this is uniform sampling without
//! replacement within each cell.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{label_key, to_jsonl, Instance, SeenUnseenPartition, TaskKind};

pub const SCHEME_FORMAT_VERSION: u32 = 1;

/// Identifies the sampling algorithm; changing anything in [`shuffle`] or
/// [`bounded`] requires a new id.
pub const SAMPLER_ID: &str = "chacha8-lemire-fisher-yates-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quota {
    Count(usize),
    AllRemaining,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum QuotaRepr {
    Count(usize),
    Keyword(String),
}

impl Serialize for Quota {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Quota::Count(n) => QuotaRepr::Count(n),
            Quota::AllRemaining => QuotaRepr::Keyword("all_remaining".into()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quota {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match QuotaRepr::deserialize(d)? {
            QuotaRepr::Count(n) => Ok(Quota::Count(n)),
            QuotaRepr::Keyword(k) if k == "all_remaining" => Ok(Quota::AllRemaining),
            QuotaRepr::Keyword(k) => Err(serde::de::Error::custom(format!(
                "quota must be a non-negative integer or \"all_remaining\", got `{k}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotaCell {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    pub count: Quota,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSplitSpec {
    pub name: String,
    pub cells: Vec<QuotaCell>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainVersionSpec {
    pub name: String,
    pub seen: Vec<String>,
    pub cells: Vec<QuotaCell>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitScheme {
    pub format_version: u32,
    pub aspect: String,
    pub task_kind: TaskKind,
    /// Full label set, none-label included when the aspect has one.
    pub labels: Vec<String>,
    pub sampler: String,
    pub seed: u64,
    pub eval_splits: Vec<EvalSplitSpec>,
    #[serde(default)]
    pub train_versions: Vec<TrainVersionSpec>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidScheme(msg.into())
}

fn valid_split_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl SplitScheme {
    pub fn from_json(text: &str) -> Result<Self> {
        let scheme: SplitScheme = serde_json::from_str(text)?;
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Canonical spelling of `name` in this scheme, if it is a label.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        let key = label_key(name);
        self.labels
            .iter()
            .find(|l| label_key(l) == key)
            .map(String::as_str)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != SCHEME_FORMAT_VERSION {
            return Err(bad(format!(
                "unsupported format_version {} (expected {SCHEME_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.sampler != SAMPLER_ID {
            return Err(bad(format!(
                "unknown sampler `{}` (this build implements `{SAMPLER_ID}`)",
                self.sampler
            )));
        }
        if self.labels.is_empty() {
            return Err(bad("empty label set"));
        }
        let mut keys = HashSet::new();
        for l in &self.labels {
            if l.trim().is_empty() || !keys.insert(label_key(l)) {
                return Err(bad(format!("empty or duplicate label `{l}`")));
            }
        }
        let mut names = HashSet::new();
        let all_names = self
            .eval_splits
            .iter()
            .map(|s| &s.name)
            .chain(self.train_versions.iter().map(|t| &t.name));
        for name in all_names {
            if !valid_split_name(name) {
                return Err(bad(format!(
                    "split name `{name}` must be non-empty and use only [A-Za-z0-9_-]"
                )));
            }
            if !names.insert(name.as_str()) {
                return Err(bad(format!("duplicate split name `{name}`")));
            }
        }
        for s in &self.eval_splits {
            self.check_cells(&s.name, &s.cells, None)?;
        }
        let mut seen_sets: Vec<(&str, HashSet<String>)> = Vec::new();
        for t in &self.train_versions {
            let mut seen = HashSet::new();
            for l in &t.seen {
                let canon = self
                    .resolve(l)
                    .ok_or_else(|| bad(format!("{}: seen label `{l}` not in label set", t.name)))?;
                if !seen.insert(label_key(canon)) {
                    return Err(bad(format!("{}: duplicate seen label `{l}`", t.name)));
                }
            }
            self.check_cells(&t.name, &t.cells, Some(&seen))?;
            for (other, other_seen) in &seen_sets {
                if let Some(shared) = seen.intersection(other_seen).next() {
                    return Err(bad(format!(
                        "train versions `{other}` and `{}` share seen label `{shared}`",
                        t.name
                    )));
                }
            }
            seen_sets.push((&t.name, seen));
        }
        Ok(())
    }

    fn check_cells(
        &self,
        split: &str,
        cells: &[QuotaCell],
        seen: Option<&HashSet<String>>,
    ) -> Result<()> {
        let mut keys = HashSet::new();
        let mut with_domain: HashMap<String, bool> = HashMap::new();
        for c in cells {
            let canon = self.resolve(&c.label).ok_or_else(|| {
                bad(format!(
                    "{split}: cell label `{}` not in label set",
                    c.label
                ))
            })?;
            let key = label_key(canon);
            if let Some(seen) = seen {
                if !seen.contains(&key) {
                    return Err(bad(format!(
                        "{split}: cell label `{canon}` is not in the seen set"
                    )));
                }
            }
            let domain = c.domain.as_deref().map(label_key);
            if domain.as_deref() == Some("") {
                return Err(bad(format!("{split}: empty domain for `{canon}`")));
            }
            if *with_domain.entry(key.clone()).or_insert(domain.is_some()) != domain.is_some() {
                return Err(bad(format!(
                    "{split}: label `{canon}` mixes domain-specific and domain-free cells"
                )));
            }
            if !keys.insert((key, domain)) {
                return Err(bad(format!("{split}: duplicate cell for `{canon}`")));
            }
        }
        Ok(())
    }

    /// Sum of the fixed counts of a split; `None` if the split is unknown
    /// or has an `all_remaining` cell.
    pub fn split_total(&self, split: &str) -> Option<usize> {
        let cells = self.cells(split)?;
        cells.iter().try_fold(0, |acc, c| match c.count {
            Quota::Count(n) => Some(acc + n),
            Quota::AllRemaining => None,
        })
    }

    /// Fixed count for one cell, 0 when the scheme has no such cell.
    pub fn cell_count(&self, split: &str, label: &str, domain: Option<&str>) -> Option<Quota> {
        let cells = self.cells(split)?;
        let key = label_key(label);
        let dkey = domain.map(label_key);
        Some(
            cells
                .iter()
                .find(|c| label_key(&c.label) == key && c.domain.as_deref().map(label_key) == dkey)
                .map_or(Quota::Count(0), |c| c.count),
        )
    }

    fn cells(&self, split: &str) -> Option<&[QuotaCell]> {
        self.eval_splits
            .iter()
            .find(|s| s.name == split)
            .map(|s| s.cells.as_slice())
            .or_else(|| {
                self.train_versions
                    .iter()
                    .find(|t| t.name == split)
                    .map(|t| t.cells.as_slice())
            })
    }

    /// Seen/unseen partition induced by a train version.
    pub fn partition(&self, train_version: &str) -> Result<SeenUnseenPartition> {
        let t = self
            .train_versions
            .iter()
            .find(|t| t.name == train_version)
            .ok_or_else(|| bad(format!("no train version `{train_version}`")))?;
        let seen: HashSet<String> = t.seen.iter().map(|s| label_key(s)).collect();
        let (seen, unseen) = self
            .labels
            .iter()
            .cloned()
            .partition(|l| seen.contains(&label_key(l)));
        Ok(SeenUnseenPartition { seen, unseen })
    }
}

/// Uniform integer in `[0, n)` by Lemire's multiply-and-reject method.
pub fn bounded(rng: &mut impl RngCore, n: u64) -> u64 {
    assert!(n > 0, "bounded: empty range");
    let mut m = rng.next_u64() as u128 * n as u128;
    if (m as u64) < n {
        let threshold = n.wrapping_neg() % n;
        while (m as u64) < threshold {
            m = rng.next_u64() as u128 * n as u128;
        }
    }
    (m >> 64) as u64
}

/// Fisher–Yates shuffle driven by [`bounded`].
pub fn shuffle<T>(items: &mut [T], rng: &mut impl RngCore) {
    for i in (1..items.len()).rev() {
        let j = bounded(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

#[derive(Clone, Debug, Default)]
pub struct Ingested {
    pub instances: Vec<Instance>,
    /// Multi-label instances removed under a single-label scheme.
    pub dropped_multi_label: usize,
}

/// Parses raw instances and canonicalizes their labels to the scheme's.
///
/// Under a single-label scheme, instances with more than one distinct gold
/// label are dropped and counted.
pub fn ingest(input: &str, scheme: &SplitScheme) -> Result<Ingested> {
    let mut out = Ingested::default();
    let mut ids = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |reason: String| Error::Parse {
            line: i + 1,
            reason,
        };
        let mut inst: Instance = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        if inst.id.trim().is_empty() {
            return Err(at("empty id".into()));
        }
        if inst.gold.is_empty() {
            return Err(at(format!("instance `{}` has no gold labels", inst.id)));
        }
        let mut gold: Vec<String> = Vec::with_capacity(inst.gold.len());
        for g in &inst.gold {
            let canon = scheme
                .resolve(g)
                .ok_or_else(|| at(format!("unknown label `{g}`")))?;
            if !gold.iter().any(|x| x == canon) {
                gold.push(canon.to_string());
            }
        }
        if !ids.insert(inst.id.clone()) {
            return Err(at(format!("duplicate id `{}`", inst.id)));
        }
        if scheme.task_kind == TaskKind::SingleLabel && gold.len() > 1 {
            out.dropped_multi_label += 1;
            continue;
        }
        inst.gold = gold;
        out.instances.push(inst);
    }
    if out.dropped_multi_label > 0 {
        log::info!(
            "dropped {} multi-label instances under single-label scheme `{}`",
            out.dropped_multi_label,
            scheme.aspect
        );
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Eval,
    Train,
}

/// One built split, as indices into the ingested instance list in
/// ingest order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub name: String,
    pub kind: SplitKind,
    pub indices: Vec<usize>,
}

impl Split {
    pub fn instances<'a>(&'a self, all: &'a [Instance]) -> impl Iterator<Item = &'a Instance> + 'a {
        self.indices.iter().map(move |&i| &all[i])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitSet {
    pub seed: u64,
    pub splits: Vec<Split>,
}

impl SplitSet {
    pub fn get(&self, name: &str) -> Option<&Split> {
        self.splits.iter().find(|s| s.name == name)
    }
}

/// Per-split lookup from (label, domain) to a cell index.
enum LabelCells {
    Plain(usize),
    ByDomain(HashMap<String, usize>),
}

struct CellTable {
    by_label: HashMap<String, LabelCells>,
    quotas: Vec<Quota>,
    names: Vec<String>,
}

impl CellTable {
    fn new(cells: &[QuotaCell]) -> Self {
        let mut by_label: HashMap<String, LabelCells> = HashMap::new();
        for (i, c) in cells.iter().enumerate() {
            let key = label_key(&c.label);
            match &c.domain {
                None => {
                    by_label.insert(key, LabelCells::Plain(i));
                }
                Some(d) => {
                    let entry = by_label
                        .entry(key)
                        .or_insert_with(|| LabelCells::ByDomain(HashMap::new()));
                    if let LabelCells::ByDomain(m) = entry {
                        m.insert(label_key(d), i);
                    }
                }
            }
        }
        CellTable {
            by_label,
            quotas: cells.iter().map(|c| c.count).collect(),
            names: cells.iter().map(cell_name).collect(),
        }
    }

    fn cell(&self, label: &str, domain: Option<&str>) -> Option<usize> {
        match self.by_label.get(&label_key(label))? {
            LabelCells::Plain(i) => Some(*i),
            LabelCells::ByDomain(m) => m.get(&label_key(domain?)).copied(),
        }
    }

    /// Cells an instance falls into, `None` if any gold label has no cell.
    fn cells_of(&self, inst: &Instance) -> Option<Vec<usize>> {
        inst.gold
            .iter()
            .map(|g| self.cell(g, inst.domain.as_deref()))
            .collect()
    }
}

fn cell_name(c: &QuotaCell) -> String {
    match &c.domain {
        Some(d) => format!("({}, {d})", c.label),
        None => c.label.clone(),
    }
}

fn fill(
    name: &str,
    table: &CellTable,
    pool: &mut [usize],
    instances: &[Instance],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    shuffle(pool, rng);
    let mut filled = vec![0usize; table.quotas.len()];
    let open_ended = table.quotas.contains(&Quota::AllRemaining);
    let mut remaining: usize = table
        .quotas
        .iter()
        .map(|q| match q {
            Quota::Count(n) => *n,
            Quota::AllRemaining => 0,
        })
        .sum();
    let mut accepted = Vec::new();
    for &i in pool.iter() {
        if remaining == 0 && !open_ended {
            break;
        }
        let Some(cells) = table.cells_of(&instances[i]) else {
            continue;
        };
        let fits = cells.iter().all(|&c| match table.quotas[c] {
            Quota::Count(n) => filled[c] < n,
            Quota::AllRemaining => true,
        });
        if !fits {
            continue;
        }
        for &c in &cells {
            filled[c] += 1;
            if matches!(table.quotas[c], Quota::Count(_)) {
                remaining -= 1;
            }
        }
        accepted.push(i);
    }
    let deficits: Vec<String> = table
        .quotas
        .iter()
        .zip(&filled)
        .zip(&table.names)
        .filter_map(|((q, &got), cell)| match *q {
            Quota::Count(n) if got < n => {
                Some(format!("{cell}: need {n}, found {got} (short {})", n - got))
            }
            _ => None,
        })
        .collect();
    if !deficits.is_empty() {
        return Err(Error::QuotaShortfall(format!(
            "{name}: {}",
            deficits.join("; ")
        )));
    }
    accepted.sort_unstable();
    Ok(accepted)
}

/// Builds every split of `scheme` from `instances` using `seed`.
///
/// One generator stream is shared by all splits, consumed in scheme order
/// (evaluation splits, then train versions). Same input and seed give the
/// same splits.
pub fn build_splits(instances: &[Instance], scheme: &SplitScheme, seed: u64) -> Result<SplitSet> {
    scheme.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = vec![false; instances.len()];
    let mut splits = Vec::new();
    for spec in &scheme.eval_splits {
        let table = CellTable::new(&spec.cells);
        let mut pool: Vec<usize> = (0..instances.len()).filter(|&i| !used[i]).collect();
        let indices = fill(&spec.name, &table, &mut pool, instances, &mut rng)?;
        for &i in &indices {
            used[i] = true;
        }
        splits.push(Split {
            name: spec.name.clone(),
            kind: SplitKind::Eval,
            indices,
        });
    }
    for spec in &scheme.train_versions {
        let table = CellTable::new(&spec.cells);
        let seen: HashSet<String> = spec.seen.iter().map(|s| label_key(s)).collect();
        let mut pool: Vec<usize> = (0..instances.len())
            .filter(|&i| {
                !used[i]
                    && instances[i]
                        .gold
                        .iter()
                        .all(|g| seen.contains(&label_key(g)))
            })
            .collect();
        let indices = fill(&spec.name, &table, &mut pool, instances, &mut rng)?;
        splits.push(Split {
            name: spec.name.clone(),
            kind: SplitKind::Train,
            indices,
        });
    }
    Ok(SplitSet { seed, splits })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub split: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.split, self.message)
    }
}

/// Split name, its cells, and the seen set for train versions.
type ExpectedSplit<'a> = (&'a str, &'a [QuotaCell], Option<&'a [String]>);

/// Checks built splits against the scheme: exact cell counts, eval/eval
/// and eval/train disjointness, and seen-set containment of train
/// versions. Returns every violation found.
pub fn verify_splits(
    splits: &BTreeMap<String, Vec<Instance>>,
    scheme: &SplitScheme,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut v = |split: &str, message: String| {
        out.push(Violation {
            split: split.to_string(),
            message,
        })
    };
    let expected: Vec<ExpectedSplit> = scheme
        .eval_splits
        .iter()
        .map(|s| (s.name.as_str(), s.cells.as_slice(), None))
        .chain(
            scheme
                .train_versions
                .iter()
                .map(|t| (t.name.as_str(), t.cells.as_slice(), Some(t.seen.as_slice()))),
        )
        .collect();
    for name in splits.keys() {
        if !expected.iter().any(|(n, _, _)| n == name) {
            v(name, "split not defined by the scheme".into());
        }
    }
    for (name, cells, seen) in &expected {
        let Some(items) = splits.get(*name) else {
            v(name, "missing split".into());
            continue;
        };
        let table = CellTable::new(cells);
        let mut counts = vec![0usize; cells.len()];
        let mut ids = HashSet::new();
        for inst in items {
            if !ids.insert(inst.id.as_str()) {
                v(name, format!("instance `{}` appears twice", inst.id));
            }
            if let Some(seen) = seen {
                for g in &inst.gold {
                    if !seen.iter().any(|s| label_key(s) == label_key(g)) {
                        v(
                            name,
                            format!("instance `{}` has unseen label `{g}`", inst.id),
                        );
                    }
                }
            }
            for g in &inst.gold {
                match table.cell(g, inst.domain.as_deref()) {
                    Some(c) => counts[c] += 1,
                    None => v(
                        name,
                        format!(
                            "instance `{}` label `{g}` falls outside every quota cell",
                            inst.id
                        ),
                    ),
                }
            }
        }
        for ((q, got), cell) in table.quotas.iter().zip(&counts).zip(&table.names) {
            if let Quota::Count(n) = *q {
                if *got != n {
                    v(name, format!("cell {cell}: expected {n}, found {got}"));
                }
            }
        }
    }
    let eval_ids: Vec<(&str, HashSet<&str>)> = scheme
        .eval_splits
        .iter()
        .filter_map(|s| {
            splits.get(&s.name).map(|items| {
                (
                    s.name.as_str(),
                    items.iter().map(|i| i.id.as_str()).collect(),
                )
            })
        })
        .collect();
    for (a, (name_a, ids_a)) in eval_ids.iter().enumerate() {
        for (name_b, ids_b) in &eval_ids[a + 1..] {
            if let Some(id) = ids_a.intersection(ids_b).min() {
                v(name_a, format!("shares instance `{id}` with `{name_b}`"));
            }
        }
        for t in &scheme.train_versions {
            if let Some(items) = splits.get(&t.name) {
                if let Some(i) = items.iter().find(|i| ids_a.contains(i.id.as_str())) {
                    v(
                        &t.name,
                        format!("shares instance `{}` with `{name_a}`", i.id),
                    );
                }
            }
        }
    }
    out
}

/// Materializes a split set as name → instances.
pub fn collect_splits(set: &SplitSet, instances: &[Instance]) -> BTreeMap<String, Vec<Instance>> {
    set.splits
        .iter()
        .map(|s| (s.name.clone(), s.instances(instances).cloned().collect()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: SplitKind,
    pub file: String,
    pub instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub aspect: String,
    pub sampler: String,
    pub seed: u64,
    pub ingested: usize,
    pub dropped_multi_label: usize,
    pub splits: Vec<ManifestEntry>,
}

/// Writes `<name>.jsonl` per split, `partition-<train>.json` per train
/// version and `manifest.json` into `dir`. Output contains no timestamps,
/// so identical inputs give identical bytes.
pub fn write_splits(
    dir: &Path,
    scheme: &SplitScheme,
    ingested: &Ingested,
    set: &SplitSet,
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for split in &set.splits {
        let file = format!("{}.jsonl", split.name);
        let items: Vec<&Instance> = split.instances(&ingested.instances).collect();
        fs::write(dir.join(&file), to_jsonl(&items)?)?;
        let partition = if split.kind == SplitKind::Train {
            let pfile = format!("partition-{}.json", split.name);
            let p = scheme.partition(&split.name)?;
            fs::write(dir.join(&pfile), serde_json::to_string_pretty(&p)? + "\n")?;
            Some(pfile)
        } else {
            None
        };
        entries.push(ManifestEntry {
            name: split.name.clone(),
            kind: split.kind,
            file,
            instances: split.indices.len(),
            partition,
        });
    }
    let manifest = Manifest {
        aspect: scheme.aspect.clone(),
        sampler: scheme.sampler.clone(),
        seed: set.seed,
        ingested: ingested.instances.len(),
        dropped_multi_label: ingested.dropped_multi_label,
        splits: entries,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(label: &str, domain: Option<&str>, count: Quota) -> QuotaCell {
        QuotaCell {
            label: label.into(),
            domain: domain.map(Into::into),
            count,
        }
    }

    fn toy_scheme() -> SplitScheme {
        SplitScheme {
            format_version: 1,
            aspect: "toy".into(),
            task_kind: TaskKind::SingleLabel,
            labels: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            sampler: SAMPLER_ID.into(),
            seed: 7,
            eval_splits: vec![
                EvalSplitSpec {
                    name: "test".into(),
                    cells: ["a", "b", "c", "d"]
                        .iter()
                        .map(|l| cell(l, None, Quota::Count(3)))
                        .collect(),
                },
                EvalSplitSpec {
                    name: "dev".into(),
                    cells: ["a", "b", "c", "d"]
                        .iter()
                        .map(|l| cell(l, None, Quota::Count(2)))
                        .collect(),
                },
            ],
            train_versions: vec![
                TrainVersionSpec {
                    name: "train-v0".into(),
                    seen: vec!["a".into(), "c".into()],
                    cells: vec![
                        cell("a", None, Quota::AllRemaining),
                        cell("c", None, Quota::Count(4)),
                    ],
                },
                TrainVersionSpec {
                    name: "train-v1".into(),
                    seen: vec!["b".into(), "d".into()],
                    cells: vec![
                        cell("b", None, Quota::AllRemaining),
                        cell("d", None, Quota::AllRemaining),
                    ],
                },
            ],
        }
    }

    fn toy_instances(per_label: usize) -> Vec<Instance> {
        let mut v = Vec::new();
        for (k, l) in ["a", "b", "c", "d"].iter().enumerate() {
            for i in 0..per_label {
                v.push(Instance::new(
                    format!("{k}-{i}"),
                    format!("text {k} {i}"),
                    &[l],
                ));
            }
        }
        v
    }

    #[test]
    fn quota_serde() {
        let c: QuotaCell =
            serde_json::from_str(r#"{"label":"a","count":"all_remaining"}"#).unwrap();
        assert_eq!(c.count, Quota::AllRemaining);
        let c: QuotaCell = serde_json::from_str(r#"{"label":"a","domain":"x","count":5}"#).unwrap();
        assert_eq!(c.count, Quota::Count(5));
        assert!(serde_json::from_str::<QuotaCell>(r#"{"label":"a","count":-1}"#).is_err());
        assert!(serde_json::from_str::<QuotaCell>(r#"{"label":"a","count":"lots"}"#).is_err());
        let back = serde_json::to_string(&cell("a", None, Quota::AllRemaining)).unwrap();
        assert_eq!(back, r#"{"label":"a","count":"all_remaining"}"#);
    }

    #[test]
    fn scheme_validation() {
        assert!(toy_scheme().validate().is_ok());
        let mut s = toy_scheme();
        s.train_versions[1].seen.push("A".into());
        s.train_versions[1].cells.clear();
        assert!(matches!(s.validate(), Err(Error::InvalidScheme(m)) if m.contains("share")));
        let mut s = toy_scheme();
        s.sampler = "mt19937".into();
        assert!(s.validate().is_err());
        let mut s = toy_scheme();
        s.train_versions[0]
            .cells
            .push(cell("b", None, Quota::Count(1)));
        assert!(s.validate().is_err());
        let mut s = toy_scheme();
        s.eval_splits[0]
            .cells
            .push(cell("a", Some("x"), Quota::Count(1)));
        assert!(s.validate().is_err());
        let mut s = toy_scheme();
        s.eval_splits[1].name = "../evil".into();
        assert!(s.validate().is_err());
        let mut s = toy_scheme();
        s.eval_splits[1].name = "test".into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn ingest_examples() {
        let s = toy_scheme();
        let three = "{\"id\":1,\"text\":\"x\",\"labels\":[\"A\"]}\n{\"id\":2,\"text\":\"y\",\"labels\":[\"b\"]}\n\n{\"id\":3,\"text\":\"z\",\"labels\":[\"c\"]}\n";
        let got = ingest(three, &s).unwrap();
        assert_eq!(got.instances.len(), 3);
        assert_eq!(got.instances[0].gold, vec!["a"]);

        let multi = "{\"id\":1,\"text\":\"x\",\"labels\":[\"a\",\"b\"]}\n{\"id\":2,\"text\":\"y\",\"labels\":[\"b\",\"B\"]}\n";
        let got = ingest(multi, &s).unwrap();
        assert_eq!((got.instances.len(), got.dropped_multi_label), (1, 1));

        let missing_text =
            "{\"id\":1,\"text\":\"x\",\"labels\":[\"a\"]}\n{\"id\":2,\"labels\":[\"a\"]}\n";
        assert!(matches!(
            ingest(missing_text, &s),
            Err(Error::Parse { line: 2, .. })
        ));
        let unknown = "{\"id\":1,\"text\":\"x\",\"labels\":[\"zzz\"]}\n";
        assert!(
            matches!(ingest(unknown, &s), Err(Error::Parse { line: 1, reason }) if reason.contains("zzz"))
        );
        let dup = "{\"id\":1,\"text\":\"x\",\"labels\":[\"a\"]}\n{\"id\":\"1\",\"text\":\"x\",\"labels\":[\"a\"]}\n";
        assert!(matches!(ingest(dup, &s), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn builds_exact_quotas_and_verifies() {
        let s = toy_scheme();
        let inst = toy_instances(12);
        let set = build_splits(&inst, &s, 1).unwrap();
        assert_eq!(set.get("test").unwrap().indices.len(), 12);
        assert_eq!(set.get("dev").unwrap().indices.len(), 8);
        // a: 12 - 3 - 2 remaining; c: fixed 4
        assert_eq!(set.get("train-v0").unwrap().indices.len(), 7 + 4);
        assert_eq!(set.get("train-v1").unwrap().indices.len(), 14);
        let map = collect_splits(&set, &inst);
        assert_eq!(verify_splits(&map, &s), vec![]);
        for sp in &set.splits {
            assert!(
                sp.indices.windows(2).all(|w| w[0] < w[1]),
                "ingest order kept"
            );
        }
    }

    #[test]
    fn shortfall_reports_cell_and_deficit() {
        let s = toy_scheme();
        let mut inst = toy_instances(12);
        inst.retain(|i| {
            !(i.gold[0] == "c" && i.id.ends_with("-11")
                || i.id == "2-10"
                || i.id == "2-9"
                || i.id == "2-8")
        });
        // c has 8: test 3 + dev 2 leaves 3 < 4
        let err = build_splits(&inst, &s, 1).unwrap_err();
        match err {
            Error::QuotaShortfall(m) => assert!(
                m.contains("train-v0") && m.contains("c: need 4, found 3 (short 1)"),
                "{m}"
            ),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        let s = toy_scheme();
        let inst = toy_instances(30);
        let a = build_splits(&inst, &s, 42).unwrap();
        assert_eq!(a, build_splits(&inst, &s, 42).unwrap());
        assert_ne!(a, build_splits(&inst, &s, 43).unwrap());
    }

    #[test]
    fn domain_cells() {
        let mut s = toy_scheme();
        s.eval_splits = vec![EvalSplitSpec {
            name: "test".into(),
            cells: vec![
                cell("a", Some("tweets"), Quota::Count(2)),
                cell("a", Some("events"), Quota::Count(1)),
            ],
        }];
        s.train_versions.clear();
        let mut inst = Vec::new();
        for i in 0..5 {
            let mut x = Instance::new(format!("t{i}"), "x", &["a"]);
            x.domain = Some("Tweets".into());
            inst.push(x);
            let mut y = Instance::new(format!("e{i}"), "x", &["a"]);
            y.domain = Some("events".into());
            inst.push(y);
        }
        inst.push(Instance::new("nodomain", "x", &["a"]));
        let set = build_splits(&inst, &s, 0).unwrap();
        let test: Vec<&Instance> = set.splits[0].instances(&inst).collect();
        assert_eq!(test.iter().filter(|i| i.id.starts_with('t')).count(), 2);
        assert_eq!(test.iter().filter(|i| i.id.starts_with('e')).count(), 1);
        assert_eq!(
            s.cell_count("test", "a", Some("fairytales")),
            Some(Quota::Count(0))
        );
        assert_eq!(s.split_total("test"), Some(3));
    }

    #[test]
    fn multi_label_counts_every_label() {
        let mut s = toy_scheme();
        s.task_kind = TaskKind::MultiLabel;
        s.eval_splits = vec![EvalSplitSpec {
            name: "test".into(),
            cells: vec![
                cell("a", None, Quota::Count(2)),
                cell("b", None, Quota::Count(2)),
            ],
        }];
        s.train_versions.clear();
        let inst = vec![
            Instance::new("1", "x", &["a", "b"]),
            Instance::new("2", "x", &["a", "b"]),
            Instance::new("3", "x", &["a", "c"]),
        ];
        let set = build_splits(&inst, &s, 0).unwrap();
        assert_eq!(set.splits[0].indices, vec![0, 1]);
        let map = collect_splits(&set, &inst);
        assert!(verify_splits(&map, &s).is_empty());
    }

    #[test]
    fn verify_flags_violations() {
        let s = toy_scheme();
        let inst = toy_instances(12);
        let set = build_splits(&inst, &s, 1).unwrap();
        let mut map = collect_splits(&set, &inst);

        let mut bad_train = map.clone();
        bad_train
            .get_mut("train-v0")
            .unwrap()
            .push(Instance::new("zz", "x", &["b"]));
        let v = verify_splits(&bad_train, &s);
        assert!(
            v.iter()
                .any(|v| v.split == "train-v0" && v.message.contains("unseen label `b`")),
            "{v:?}"
        );

        let moved = map.get("test").unwrap()[0].clone();
        map.get_mut("dev").unwrap().push(moved);
        let v = verify_splits(&map, &s);
        assert!(
            v.iter().any(|v| v.message.contains("shares instance")),
            "{v:?}"
        );
        assert!(
            v.iter()
                .any(|v| v.split == "dev" && v.message.contains("expected 2, found 3")),
            "{v:?}"
        );
    }

    #[test]
    fn partition_of_train_version() {
        let p = toy_scheme().partition("train-v1").unwrap();
        assert_eq!(p.seen, vec!["b", "d"]);
        assert_eq!(p.unseen, vec!["a", "c"]);
        assert!(toy_scheme().partition("nope").is_err());
    }

    #[test]
    fn write_is_byte_identical() {
        let s = toy_scheme();
        let ing = Ingested {
            instances: toy_instances(12),
            dropped_multi_label: 2,
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        for d in [&d1, &d2] {
            let set = build_splits(&ing.instances, &s, 9).unwrap();
            let m = write_splits(d.path(), &s, &ing, &set).unwrap();
            assert_eq!(m.splits.len(), 4);
        }
        for f in [
            "test.jsonl",
            "dev.jsonl",
            "train-v0.jsonl",
            "train-v1.jsonl",
            "partition-train-v0.json",
            "manifest.json",
        ] {
            assert_eq!(
                fs::read(d1.path().join(f)).unwrap(),
                fs::read(d2.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn bounded_is_roughly_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 6];
        for _ in 0..60_000 {
            counts[bounded(&mut rng, 6) as usize] += 1;
        }
        // chi-square, 5 dof; 20.5 is the 0.999 quantile
        let chi: f64 = counts
            .iter()
            .map(|&c| (c as f64 - 10_000.0).powi(2) / 10_000.0)
            .sum();
        assert!(chi < 20.5, "{counts:?}");
    }

    #[test]
    fn sampler_stream_is_frozen() {
        // Pins the concrete output so that a dependency bump changing the
        // stream cannot silently change built splits.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut v: Vec<u32> = (0..10).collect();
        shuffle(&mut v, &mut rng);
        assert_eq!(v, [6, 1, 8, 3, 2, 9, 0, 5, 4, 7]);
    }

    proptest! {
        #[test]
        fn shuffle_is_a_permutation(n in 0usize..200, seed in any::<u64>()) {
            let mut v: Vec<usize> = (0..n).collect();
            shuffle(&mut v, &mut ChaCha8Rng::seed_from_u64(seed));
            let mut sorted = v.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn bounded_in_range(n in 1u64.., seed in any::<u64>()) {
            prop_assert!(bounded(&mut ChaCha8Rng::seed_from_u64(seed), n) < n);
        }

        #[test]
        fn built_splits_always_verify(per_label in 12usize..40, seed in any::<u64>()) {
            let s = toy_scheme();
            let inst = toy_instances(per_label);
            let set = build_splits(&inst, &s, seed).unwrap();
            prop_assert!(verify_splits(&collect_splits(&set, &inst), &s).is_empty());
        }
    }
}
