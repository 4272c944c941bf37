//! Pipeline stages shared by the individual subcommands and `run`, so
//! that running the stages one by one writes the same bytes as a full run.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use zeroshot_core::hypothesis::{filler, hypothesis_set};
use zeroshot_core::metrics::{self, EvalReport, MetricKind};
use zeroshot_core::model::{parse_instances, to_jsonl, ScoreRow};
use zeroshot_core::pairs::{build_eval_pairs, build_train_pairs, to_records};
use zeroshot_core::scorers::{
    score_checked, ConceptIndex, EmbeddingScorer, EnsembleScorer, EsaScorer, ExternalClient,
    ExternalConfig, MajorityScorer, ScoreRequest, Scorer, WordVectorTable,
};
use zeroshot_core::splits::{self, Ingested, Manifest, SplitScheme};
use zeroshot_core::{
    bundled, AspectSpec, GlossLexicon, HypothesisMode, Instance, PolicyConfig, Prediction,
    ScoreTable, SeenUnseenPartition, TaskKind,
};

use crate::config::BUNDLED_PREFIX;
use crate::error::{config, CliError, Result};
use crate::spec::ScorerSpec;

pub const ENDPOINT_ENV: &str = "ZEROSHOT_ENDPOINT";
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

pub fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            config(format!("input file not found: {}", path.display()))
        } else {
            CliError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Parse failures in configuration files are configuration errors.
fn config_file<T>(src: &str, parse: impl FnOnce(&str) -> zeroshot_core::Result<T>) -> Result<T> {
    let text = read_input(Path::new(src))?;
    parse(&text).map_err(|e| config(format!("{src}: {e}")))
}

fn data_file<T>(path: &Path, parse: impl FnOnce(&str) -> zeroshot_core::Result<T>) -> Result<T> {
    let text = read_input(path)?;
    parse(&text).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_aspect(src: &str) -> Result<AspectSpec> {
    match src.strip_prefix(BUNDLED_PREFIX) {
        Some(name) => Ok(bundled::aspect(name)?),
        None => config_file(src, AspectSpec::from_json),
    }
}

/// Glosses from `src`. Without one, a bundled aspect brings its bundled
/// glosses and any other aspect falls back to the glosses in its labels.
pub fn load_lexicon(
    src: Option<&str>,
    aspect_src: &str,
    aspect: &AspectSpec,
) -> Result<GlossLexicon> {
    match src.or_else(|| aspect_src.starts_with(BUNDLED_PREFIX).then_some(aspect_src)) {
        None => Ok(GlossLexicon::from_aspect(aspect)),
        Some(s) => match s.strip_prefix(BUNDLED_PREFIX) {
            Some(name) => Ok(bundled::lexicon(name)?),
            None => config_file(s, GlossLexicon::from_json),
        },
    }
}

pub fn load_scheme(src: &str) -> Result<SplitScheme> {
    match src.strip_prefix(BUNDLED_PREFIX) {
        Some(name) => Ok(bundled::scheme(name)?),
        None => config_file(src, SplitScheme::from_json),
    }
}

pub fn load_partition(path: &Path, aspect: &AspectSpec) -> Result<SeenUnseenPartition> {
    let p: SeenUnseenPartition =
        config_file(&path.to_string_lossy(), |t| Ok(serde_json::from_str(t)?))?;
    p.validate(aspect)
        .map_err(|e| config(format!("{}: {e}", path.display())))?;
    Ok(p)
}

/// Reads a split file and canonicalizes gold labels against the aspect.
pub fn load_instances(path: &Path, aspect: &AspectSpec) -> Result<Vec<Instance>> {
    data_file(path, |t| {
        parse_instances(t)?
            .iter()
            .map(|i| i.resolve_against(aspect))
            .collect()
    })
}

pub fn load_scores(path: &Path) -> Result<ScoreTable> {
    data_file(path, ScoreTable::parse_jsonl)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    data_file(path, zeroshot_core::model::parse_jsonl)
}

pub fn check_scheme_matches(scheme: &SplitScheme, aspect: &AspectSpec) -> Result<()> {
    let names = aspect.all_label_names();
    let same =
        scheme.labels.len() == names.len()
            && scheme.labels.iter().zip(&names).all(|(a, b)| {
                zeroshot_core::model::label_key(a) == zeroshot_core::model::label_key(b)
            });
    if !same || scheme.task_kind != aspect.task_kind {
        return Err(config(format!(
            "scheme `{}` does not match aspect `{}` (labels or task kind differ)",
            scheme.aspect, aspect.name
        )));
    }
    Ok(())
}

pub struct SplitOutput {
    pub ingested: Ingested,
    pub set: splits::SplitSet,
    pub manifest: Manifest,
}

pub fn build_splits(
    scheme: &SplitScheme,
    raw: &Path,
    out: &Path,
    seed: Option<u64>,
) -> Result<SplitOutput> {
    let ingested = data_file(raw, |t| splits::ingest(t, scheme))?;
    let seed = seed.unwrap_or(scheme.seed);
    let set = splits::build_splits(&ingested.instances, scheme, seed)?;
    let manifest = splits::write_splits(out, scheme, &ingested, &set)?;
    Ok(SplitOutput {
        ingested,
        set,
        manifest,
    })
}

pub fn hypotheses_jsonl(
    aspect: &AspectSpec,
    mode: HypothesisMode,
    lexicon: &GlossLexicon,
) -> Result<String> {
    Ok(to_jsonl(&hypothesis_set(aspect, mode, lexicon)?)?)
}

pub fn train_pairs_jsonl(
    instances: &[Instance],
    aspect: &AspectSpec,
    partition: &SeenUnseenPartition,
    mode: HypothesisMode,
    lexicon: &GlossLexicon,
) -> Result<String> {
    let pairs = build_train_pairs(instances, aspect, partition, mode, lexicon)?;
    Ok(to_jsonl(&to_records(&pairs))?)
}

pub fn eval_pairs_jsonl(
    instances: &[Instance],
    aspect: &AspectSpec,
    mode: HypothesisMode,
    lexicon: &GlossLexicon,
) -> Result<String> {
    let pairs = build_eval_pairs(instances, aspect, mode, lexicon)?;
    Ok(to_jsonl(&to_records(&pairs))?)
}

pub struct ScorerContext<'a> {
    pub aspect: &'a AspectSpec,
    pub train: Option<&'a [Instance]>,
    pub parallel: usize,
    pub batch_size: usize,
    pub timeout: Option<Duration>,
    /// Takes precedence over any URL in the spec.
    pub endpoint_override: Option<String>,
}

impl ScorerContext<'_> {
    pub fn endpoint_from_env() -> Option<String> {
        std::env::var(ENDPOINT_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
    }
}

pub fn build_scorer(spec: &ScorerSpec, ctx: &ScorerContext<'_>) -> Result<Box<dyn Scorer>> {
    Ok(match spec {
        ScorerSpec::Majority => Box::new(MajorityScorer::new(ctx.aspect, ctx.train)?),
        ScorerSpec::Embedding(path) => {
            let path = PathBuf::from(path);
            let file = File::open(&path).map_err(|e| config(format!("{}: {e}", path.display())))?;
            let table =
                WordVectorTable::read(BufReader::new(file)).map_err(|source| CliError::Input {
                    path: path.clone(),
                    source,
                })?;
            Box::new(EmbeddingScorer::new(table))
        }
        ScorerSpec::Esa(path) => {
            let index = data_file(Path::new(path), ConceptIndex::from_json)?;
            Box::new(EsaScorer::new(index))
        }
        ScorerSpec::External(url) => {
            let endpoint = ctx
                .endpoint_override
                .clone()
                .or_else(|| url.clone())
                .ok_or_else(|| config(format!("external scorer needs a URL or {ENDPOINT_ENV}")))?;
            let mut cfg = ExternalConfig::new(endpoint);
            cfg.max_batch = ctx.batch_size;
            cfg.parallel = ctx.parallel;
            if let Some(t) = ctx.timeout {
                cfg.timeout = t;
            }
            Box::new(ExternalClient::new(cfg)?)
        }
        ScorerSpec::Ensemble(members) => {
            let members = members
                .iter()
                .map(|m| build_scorer(m, ctx))
                .collect::<Result<Vec<_>>>()?;
            Box::new(EnsembleScorer::new(members)?)
        }
    })
}

/// Scores every (instance, hypothesis) pair; rows come out instance-major,
/// then label, then mode.
pub fn score_instances(
    instances: &[Instance],
    aspect: &AspectSpec,
    mode: HypothesisMode,
    lexicon: &GlossLexicon,
    scorer: &dyn Scorer,
) -> Result<Vec<ScoreRow>> {
    let hyps = hypothesis_set(aspect, mode, lexicon)?;
    let fillers = hyps
        .iter()
        .map(|h| filler(aspect, &h.label, h.mode, lexicon))
        .collect::<zeroshot_core::Result<Vec<_>>>()?;
    let mut requests = Vec::with_capacity(instances.len() * hyps.len());
    for inst in instances {
        for (h, f) in hyps.iter().zip(&fillers) {
            requests.push(ScoreRequest {
                premise: &inst.text,
                hypothesis: &h.text,
                label: &h.label,
                label_text: f,
            });
        }
    }
    log::info!("scoring {} pairs with {}", requests.len(), scorer.name());
    let probs = score_checked(scorer, &requests)?;
    let mut rows = Vec::with_capacity(probs.len());
    let mut p = probs.into_iter();
    for inst in instances {
        for h in &hyps {
            rows.push(ScoreRow {
                id: inst.id.clone(),
                label: h.label.clone(),
                mode: h.mode,
                entail: p.next().expect("one score per request"),
            });
        }
    }
    Ok(rows)
}

pub fn predict(
    table: &ScoreTable,
    aspect: &AspectSpec,
    partition: Option<&SeenUnseenPartition>,
    policy: &PolicyConfig,
) -> Result<Vec<Prediction>> {
    Ok(zeroshot_core::predict(table, aspect, partition, policy)?)
}

/// Accuracy for single-label aspects without a none-label, label-weighted
/// F1 otherwise.
pub fn default_metric(aspect: &AspectSpec) -> MetricKind {
    if aspect.task_kind == TaskKind::SingleLabel && aspect.none_label.is_none() {
        MetricKind::Accuracy
    } else {
        MetricKind::WeightedF1
    }
}

pub fn evaluate(
    kind: MetricKind,
    predictions: &[Prediction],
    gold: &[Instance],
    aspect: &AspectSpec,
    partition: Option<&SeenUnseenPartition>,
) -> Result<EvalReport> {
    Ok(metrics::evaluate(
        kind,
        predictions,
        gold,
        &aspect.all_label_names(),
        partition,
    )?)
}

pub fn report_json(report: &EvalReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report).map_err(zeroshot_core::Error::from)? + "\n")
}

pub fn partition_arg(
    path: Option<&Path>,
    aspect: &AspectSpec,
) -> Result<Option<SeenUnseenPartition>> {
    path.map(|p| load_partition(p, aspect)).transpose()
}
