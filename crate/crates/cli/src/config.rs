//! Run configuration files.
//!
//! Relative paths inside a config resolve against the config file's
//! directory. `bundled:<aspect>` may stand in for the aspect, lexicon and
//! scheme paths.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use zeroshot_core::{HypothesisMode, MetricKind, PolicyConfig};

use crate::error::{config, Result};
use crate::spec::ScorerSpec;

pub const CONFIG_VERSION: u32 = 1;
pub const BUNDLED_PREFIX: &str = "bundled:";

fn default_eval_split() -> String {
    "test".into()
}

fn default_mode() -> HypothesisMode {
    HypothesisMode::Word
}

fn default_parallel() -> usize {
    1
}

fn default_batch_size() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub aspect: String,
    #[serde(default)]
    pub lexicon: Option<String>,
    pub scheme: String,
    pub raw: String,
    /// Overrides the scheme's seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Absent means the label-fully-unseen regime.
    #[serde(default)]
    pub train_version: Option<String>,
    #[serde(default = "default_eval_split")]
    pub eval_split: String,
    #[serde(default = "default_mode")]
    pub mode: HypothesisMode,
    pub scorer: String,
    #[serde(default)]
    pub metric: Option<MetricKind>,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default = "default_parallel")]
    pub parallel: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
}

/// A [`RunConfig`] with paths resolved and the scorer spec parsed.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub aspect: String,
    pub lexicon: Option<String>,
    pub scheme: String,
    pub raw: PathBuf,
    pub seed: Option<u64>,
    pub train_version: Option<String>,
    pub eval_split: String,
    pub mode: HypothesisMode,
    pub scorer: ScorerSpec,
    pub metric: Option<MetricKind>,
    pub policy: PolicyConfig,
    pub output_dir: Option<PathBuf>,
    pub parallel: usize,
    pub batch_size: usize,
    pub timeout_secs: Option<u64>,
}

fn resolve(base: &Path, p: &str) -> String {
    if p.starts_with(BUNDLED_PREFIX) || Path::new(p).is_absolute() {
        p.to_string()
    } else {
        base.join(p).to_string_lossy().into_owned()
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        if cfg.parallel == 0 || cfg.batch_size == 0 {
            return Err(config("parallel and batch_size must be at least 1"));
        }
        cfg.policy.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ResolvedRun> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = Self::parse(&text).map_err(|e| config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base)
    }

    pub fn resolve(self, base: &Path) -> Result<ResolvedRun> {
        let r = |p: &str| resolve(base, p);
        let scorer = ScorerSpec::parse(&self.scorer)?.map_paths(&|p| resolve(base, &p));
        Ok(ResolvedRun {
            aspect: r(&self.aspect),
            lexicon: self.lexicon.as_deref().map(r),
            scheme: r(&self.scheme),
            raw: PathBuf::from(r(&self.raw)),
            seed: self.seed,
            train_version: self.train_version,
            eval_split: self.eval_split,
            mode: self.mode,
            scorer,
            metric: self.metric,
            policy: self.policy,
            output_dir: self.output_dir.as_deref().map(|p| PathBuf::from(r(p))),
            parallel: self.parallel,
            batch_size: self.batch_size,
            timeout_secs: self.timeout_secs,
        })
    }
}

impl ResolvedRun {
    /// Fails fast on input files that do not exist.
    pub fn check_inputs(&self) -> Result<()> {
        let mut files: Vec<&str> = vec![&self.aspect, &self.scheme];
        files.extend(self.lexicon.as_deref());
        files.extend(self.scorer.paths());
        let raw = self.raw.to_string_lossy();
        files.push(&raw);
        for f in files {
            if !f.starts_with(BUNDLED_PREFIX) && !Path::new(f).is_file() {
                return Err(config(format!("input file not found: {f}")));
            }
        }
        Ok(())
    }
}
