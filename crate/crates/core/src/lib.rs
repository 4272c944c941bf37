//! Zero-shot text classification as textual entailment.
//!
//! Labels become hypotheses through an interpretation template, every
//! (text, hypothesis) pair is scored for entailment, and a seen/unseen
//! aware policy turns the scores into predictions.

pub mod bundled;
pub mod error;
pub mod hypothesis;
pub mod metrics;
pub mod model;
pub mod pairs;
pub mod policy;
pub mod scorers;
pub mod splits;

pub use error::{Error, ErrorKind, Result};
pub use hypothesis::{hypothesis_set, GlossLexicon, Hypothesis};
pub use metrics::{accuracy, evaluate, weighted_f1, EvalReport, MetricKind};
pub use model::{
    AspectSpec, HypothesisMode, Instance, Label, Mode, ScoreTable, SeenUnseenPartition, TaskKind,
};
pub use pairs::{build_eval_pairs, build_train_pairs, EntailmentPair, Gold};
pub use policy::{predict, PolicyConfig, Prediction};
pub use scorers::{ScoreRequest, Scorer};
pub use splits::{build_splits, ingest, verify_splits, SplitScheme};
