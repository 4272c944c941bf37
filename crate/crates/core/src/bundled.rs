//! Aspect, gloss and split-scheme files shipped with the crate.

use crate::error::{Error, Result};
use crate::hypothesis::GlossLexicon;
use crate::model::AspectSpec;
use crate::splits::SplitScheme;

pub const ASPECTS: [&str; 3] = ["topic", "emotion", "situation"];

struct Files {
    aspect: &'static str,
    glosses: &'static str,
    scheme: &'static str,
}

macro_rules! files {
    ($dir:literal) => {
        Files {
            aspect: include_str!(concat!("../configs/", $dir, "/aspect.json")),
            glosses: include_str!(concat!("../configs/", $dir, "/glosses.json")),
            scheme: include_str!(concat!("../configs/", $dir, "/scheme.json")),
        }
    };
}

fn files(name: &str) -> Result<Files> {
    Ok(match name {
        "topic" => files!("topic"),
        "emotion" => files!("emotion"),
        "situation" => files!("situation"),
        other => {
            return Err(Error::InvalidAspect(format!(
                "no bundled aspect `{other}` (have {})",
                ASPECTS.join(", ")
            )))
        }
    })
}

pub fn aspect(name: &str) -> Result<AspectSpec> {
    AspectSpec::from_json(files(name)?.aspect)
}

pub fn lexicon(name: &str) -> Result<GlossLexicon> {
    GlossLexicon::from_json(files(name)?.glosses)
}

pub fn scheme(name: &str) -> Result<SplitScheme> {
    SplitScheme::from_json(files(name)?.scheme)
}

pub fn scheme_json(name: &str) -> Result<&'static str> {
    Ok(files(name)?.scheme)
}
