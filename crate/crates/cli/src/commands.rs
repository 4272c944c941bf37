use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use zeroshot_core::metrics::MetricKind;
use zeroshot_core::model::to_jsonl;
use zeroshot_core::scorers::{esa_build, parse_corpus};
use zeroshot_core::splits::{collect_splits, verify_splits};
use zeroshot_core::{HypothesisMode, PolicyConfig, ScoreTable};

use crate::config::RunConfig;
use crate::error::{config, CliError, Result};
use crate::pipeline::{self as p, ScorerContext, INCOMPLETE_MARKER};
use crate::spec::ScorerSpec;

#[derive(Debug, Parser)]
#[command(
    name = "zeroshot",
    version,
    about = "Zero-shot text classification as textual entailment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Word,
    Definition,
    Combination,
}

impl From<ModeArg> for HypothesisMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Word => HypothesisMode::Word,
            ModeArg::Definition => HypothesisMode::Definition,
            ModeArg::Combination => HypothesisMode::Combination,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Accuracy,
    WeightedF1,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Accuracy => MetricKind::Accuracy,
            MetricArg::WeightedF1 => MetricKind::WeightedF1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PairKind {
    Train,
    Eval,
}

#[derive(Debug, Args)]
pub struct AspectArgs {
    /// Aspect file, or `bundled:<topic|emotion|situation>`.
    #[arg(long)]
    pub aspect: String,
    /// Gloss file (JSON map label -> gloss); defaults to the bundled glosses
    /// for bundled aspects, else glosses in the aspect.
    #[arg(long)]
    pub lexicon: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample benchmark splits from a raw corpus.
    BuildSplits {
        /// Scheme file, or `bundled:<aspect>`.
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scheme's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check built splits against their scheme.
    VerifySplits {
        #[arg(long)]
        scheme: String,
        /// Directory written by build-splits.
        #[arg(long)]
        dir: PathBuf,
    },
    /// Render the hypothesis set of an aspect.
    GenHypotheses {
        #[command(flatten)]
        aspect: AspectArgs,
        #[arg(long, value_enum, default_value = "word")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a split into entailment pairs.
    BuildPairs {
        #[command(flatten)]
        aspect: AspectArgs,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, value_enum)]
        kind: PairKind,
        /// Required for train pairs.
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "word")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every instance against every hypothesis.
    Score {
        #[command(flatten)]
        aspect: AspectArgs,
        #[arg(long)]
        split: PathBuf,
        /// majority | embedding:<file> | esa:<file> | external[:<url>] | ensemble:[...]
        #[arg(long)]
        scorer: String,
        /// Training split, used by the majority baseline.
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "word")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long)]
        timeout_secs: Option<u64>,
        /// External service base URL; wins over the scorer spec.
        #[arg(long, env = "ZEROSHOT_ENDPOINT")]
        endpoint: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply the decision policy to a score table.
    Predict {
        #[command(flatten)]
        aspect: AspectArgs,
        #[arg(long)]
        scores: PathBuf,
        /// Seen/unseen partition; omit for the fully-unseen regime.
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against gold labels.
    Evaluate {
        #[command(flatten)]
        aspect: AspectArgs,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an ESA concept index from a JSONL corpus of {title, text}.
    EsaIndex {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long, env = "ZEROSHOT_ENDPOINT")]
        endpoint: Option<String>,
    },
}

fn policy(alpha: Option<f64>, threshold: Option<f64>) -> Result<PolicyConfig> {
    let mut cfg = PolicyConfig::default();
    if let Some(a) = alpha {
        cfg.alpha = a;
    }
    if let Some(t) = threshold {
        cfg.positive_threshold = t;
    }
    Ok(cfg.validate()?)
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildSplits {
            scheme,
            raw,
            out,
            seed,
        } => {
            let scheme = p::load_scheme(&scheme)?;
            let built = p::build_splits(&scheme, &raw, &out, seed)?;
            for s in &built.manifest.splits {
                println!("{:<12} {:>8}", s.name, s.instances);
            }
            if built.ingested.dropped_multi_label > 0 {
                println!(
                    "dropped {} multi-label instances",
                    built.ingested.dropped_multi_label
                );
            }
        }
        Command::VerifySplits { scheme, dir } => {
            let scheme = p::load_scheme(&scheme)?;
            let mut splits = std::collections::BTreeMap::new();
            let names = scheme
                .eval_splits
                .iter()
                .map(|s| &s.name)
                .chain(scheme.train_versions.iter().map(|t| &t.name));
            for name in names {
                let path = dir.join(format!("{name}.jsonl"));
                if path.is_file() {
                    let text = p::read_input(&path)?;
                    let items = zeroshot_core::model::parse_instances(&text).map_err(|source| {
                        CliError::Input {
                            path: path.clone(),
                            source,
                        }
                    })?;
                    splits.insert(name.clone(), items);
                }
            }
            let violations = verify_splits(&splits, &scheme);
            for v in &violations {
                println!("{v}");
            }
            if !violations.is_empty() {
                return Err(CliError::Core(zeroshot_core::Error::Coverage(format!(
                    "{} violations",
                    violations.len()
                ))));
            }
            println!("ok");
        }
        Command::GenHypotheses { aspect, mode, out } => {
            let a = p::load_aspect(&aspect.aspect)?;
            let lex = p::load_lexicon(aspect.lexicon.as_deref(), &aspect.aspect, &a)?;
            p::write_output(&out, &p::hypotheses_jsonl(&a, mode.into(), &lex)?)?;
        }
        Command::BuildPairs {
            aspect,
            split,
            kind,
            partition,
            mode,
            out,
        } => {
            let a = p::load_aspect(&aspect.aspect)?;
            let lex = p::load_lexicon(aspect.lexicon.as_deref(), &aspect.aspect, &a)?;
            let inst = p::load_instances(&split, &a)?;
            let text = match kind {
                PairKind::Train => {
                    let part = p::partition_arg(partition.as_deref(), &a)?
                        .ok_or_else(|| config("train pairs need --partition"))?;
                    p::train_pairs_jsonl(&inst, &a, &part, mode.into(), &lex)?
                }
                PairKind::Eval => p::eval_pairs_jsonl(&inst, &a, mode.into(), &lex)?,
            };
            p::write_output(&out, &text)?;
        }
        Command::Score {
            aspect,
            split,
            scorer,
            train,
            mode,
            parallel,
            batch_size,
            timeout_secs,
            endpoint,
            out,
        } => {
            let spec = ScorerSpec::parse(&scorer)?;
            if parallel == 0 || batch_size == 0 {
                return Err(config("--parallel and --batch-size must be at least 1"));
            }
            let a = p::load_aspect(&aspect.aspect)?;
            let lex = p::load_lexicon(aspect.lexicon.as_deref(), &aspect.aspect, &a)?;
            let inst = p::load_instances(&split, &a)?;
            let train = train.map(|t| p::load_instances(&t, &a)).transpose()?;
            let ctx = ScorerContext {
                aspect: &a,
                train: train.as_deref(),
                parallel,
                batch_size,
                timeout: timeout_secs.map(Duration::from_secs),
                endpoint_override: endpoint,
            };
            let scorer = p::build_scorer(&spec, &ctx)?;
            let rows = p::score_instances(&inst, &a, mode.into(), &lex, scorer.as_ref())?;
            p::write_output(&out, &to_jsonl(&rows)?)?;
        }
        Command::Predict {
            aspect,
            scores,
            partition,
            alpha,
            threshold,
            out,
        } => {
            let cfg = policy(alpha, threshold)?;
            let a = p::load_aspect(&aspect.aspect)?;
            let part = p::partition_arg(partition.as_deref(), &a)?;
            let table = p::load_scores(&scores)?;
            let preds = p::predict(&table, &a, part.as_ref(), &cfg)?;
            p::write_output(&out, &to_jsonl(&preds)?)?;
        }
        Command::Evaluate {
            aspect,
            split,
            predictions,
            partition,
            metric,
            out,
        } => {
            let a = p::load_aspect(&aspect.aspect)?;
            let part = p::partition_arg(partition.as_deref(), &a)?;
            let gold = p::load_instances(&split, &a)?;
            let preds = p::load_predictions(&predictions)?;
            let kind = metric.map_or_else(|| p::default_metric(&a), Into::into);
            let report = p::evaluate(kind, &preds, &gold, &a, part.as_ref())?;
            if let Some(out) = out {
                p::write_output(&out, &p::report_json(&report)?)?;
            }
            print!("{}", report.to_table());
        }
        Command::EsaIndex { corpus, out } => {
            let text = p::read_input(&corpus)?;
            let articles = parse_corpus(&text).map_err(|source| CliError::Input {
                path: corpus.clone(),
                source,
            })?;
            let pairs: Vec<(&str, &str)> = articles
                .iter()
                .map(|a| (a.title.as_str(), a.text.as_str()))
                .collect();
            let index = esa_build(&pairs)?;
            p::write_output(&out, &(index.to_json()? + "\n"))?;
            println!("{} articles", index.article_count());
        }
        Command::Run {
            config: path,
            out,
            seed,
            alpha,
            mode,
            parallel,
            endpoint,
        } => {
            let mut run = RunConfig::load(&path)?;
            if let Some(o) = out {
                run.output_dir = Some(o);
            }
            if seed.is_some() {
                run.seed = seed;
            }
            if let Some(a) = alpha {
                run.policy.alpha = a;
                run.policy.validate()?;
            }
            if let Some(m) = mode {
                run.mode = m.into();
            }
            if let Some(n) = parallel {
                if n == 0 {
                    return Err(config("--parallel must be at least 1"));
                }
                run.parallel = n;
            }
            let report = run_pipeline(&run, endpoint)?;
            print!("{}", report.to_table());
        }
    }
    Ok(())
}

/// Output files of a full run, relative to the output directory.
pub mod files {
    pub const SPLITS_DIR: &str = "splits";
    pub const HYPOTHESES: &str = "hypotheses.jsonl";
    pub const TRAIN_PAIRS: &str = "train-pairs.jsonl";
    pub const SCORES: &str = "scores.jsonl";
    pub const PREDICTIONS: &str = "predictions.jsonl";
    pub const REPORT_JSON: &str = "report.json";
    pub const REPORT_TXT: &str = "report.txt";
}

/// Runs every stage, writing into the output directory. An `INCOMPLETE`
/// marker sits in the directory until the run finishes.
pub fn run_pipeline(
    run: &crate::config::ResolvedRun,
    endpoint: Option<String>,
) -> Result<zeroshot_core::EvalReport> {
    run.check_inputs()?;
    let out: &Path = run
        .output_dir
        .as_deref()
        .ok_or_else(|| config("no output directory (set output_dir or pass --out)"))?;
    let aspect = p::load_aspect(&run.aspect)?;
    let lexicon = p::load_lexicon(run.lexicon.as_deref(), &run.aspect, &aspect)?;
    let scheme = p::load_scheme(&run.scheme)?;
    p::check_scheme_matches(&scheme, &aspect)?;
    if !scheme.eval_splits.iter().any(|s| s.name == run.eval_split) {
        return Err(config(format!(
            "scheme has no eval split `{}`",
            run.eval_split
        )));
    }
    let partition = run
        .train_version
        .as_deref()
        .map(|t| scheme.partition(t).map_err(|e| config(e.to_string())))
        .transpose()?;
    if run.mode != HypothesisMode::Word {
        zeroshot_core::hypothesis_set(&aspect, run.mode, &lexicon)?;
    }

    let marker = out.join(INCOMPLETE_MARKER);
    p::write_output(&marker, "")?;

    let built = p::build_splits(&scheme, &run.raw, &out.join(files::SPLITS_DIR), run.seed)?;
    let all = collect_splits(&built.set, &built.ingested.instances);
    let eval = &all[&run.eval_split];
    let train = run.train_version.as_ref().map(|t| &all[t]);

    p::write_output(
        &out.join(files::HYPOTHESES),
        &p::hypotheses_jsonl(&aspect, run.mode, &lexicon)?,
    )?;
    if let (Some(train), Some(part)) = (train, &partition) {
        let text = p::train_pairs_jsonl(train, &aspect, part, run.mode, &lexicon)?;
        p::write_output(&out.join(files::TRAIN_PAIRS), &text)?;
    }

    let ctx = ScorerContext {
        aspect: &aspect,
        train: train.map(Vec::as_slice),
        parallel: run.parallel,
        batch_size: run.batch_size,
        timeout: run.timeout_secs.map(Duration::from_secs),
        endpoint_override: endpoint,
    };
    let scorer = p::build_scorer(&run.scorer, &ctx)?;
    let rows = p::score_instances(eval, &aspect, run.mode, &lexicon, scorer.as_ref())?;
    p::write_output(&out.join(files::SCORES), &to_jsonl(&rows)?)?;

    let table = ScoreTable::from_rows(&rows)?;
    let preds = p::predict(&table, &aspect, partition.as_ref(), &run.policy)?;
    p::write_output(&out.join(files::PREDICTIONS), &to_jsonl(&preds)?)?;

    let kind = run.metric.unwrap_or_else(|| p::default_metric(&aspect));
    let report = p::evaluate(kind, &preds, eval, &aspect, partition.as_ref())?;
    p::write_output(&out.join(files::REPORT_JSON), &p::report_json(&report)?)?;
    p::write_output(&out.join(files::REPORT_TXT), &report.to_table())?;

    std::fs::remove_file(&marker).map_err(|e| CliError::Io {
        path: marker,
        source: e,
    })?;
    Ok(report)
}
