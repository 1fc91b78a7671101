//! The bundled programs, each with a scenario and a metadata file.
//!
//! On disk an entry named `x` is `x.fc`, `x.scenario.toml` and
//! `x.meta.toml` in one directory. The metadata names the oracle, the
//! stabilisation horizon, the deviations from the original program and a
//! single-token mutation used as a negative control.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::check::{Horizon, OracleKind};
use crate::lang::{load_program, tokenize, ParseErrors, Program};
use crate::netsim::{ScenarioConfig, ScenarioError};
use crate::value::LocalValue;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no corpus entry named '{0}'")]
    Unknown(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("metadata {path}: {source}")]
    Metadata {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("mutation: no occurrence {occurrence} of token '{from}'")]
    Mutation { from: String, occurrence: usize },
    #[error("mutation: {0}")]
    Lexical(String),
}

/// Replace one token of the source.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Mutation {
    pub from: String,
    pub to: String,
    /// Which occurrence of `from` to replace, counting from 1.
    #[serde(default = "first")]
    pub occurrence: usize,
}

fn first() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub name: String,
    pub description: String,
    pub oracle: OracleKind,
    pub horizon: Horizon,
    #[serde(default)]
    pub sensors: Vec<String>,
    #[serde(default)]
    pub constants: Vec<String>,
    #[serde(default)]
    pub deviations: Vec<String>,
    pub mutation: Mutation,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub source: String,
    pub scenario: String,
    pub meta: Metadata,
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$((
            $name,
            include_str!(concat!("../../corpus/", $name, ".fc")),
            include_str!(concat!("../../corpus/", $name, ".scenario.toml")),
            include_str!(concat!("../../corpus/", $name, ".meta.toml")),
        )),*]
    };
}

static BUNDLED: &[(&str, &str, &str, &str)] = bundled!(
    "hopcount",
    "longest-chain",
    "lights",
    "stereo",
    "evacuation",
    "everywhere",
    "somewhere",
    "remote-lights",
    "remote-evacuation-alert",
    "broadcast",
    "elliptic-channel",
    "channel",
    "samevalue",
    "monitor",
    "adjusting-channel",
    "parity",
);

fn parse_meta(text: &str, path: &str) -> Result<Metadata, CorpusError> {
    toml::from_str(text).map_err(|source| CorpusError::Metadata {
        path: path.to_string(),
        source,
    })
}

/// Every bundled entry, in a fixed order.
pub fn corpus() -> Vec<CorpusEntry> {
    BUNDLED
        .iter()
        .map(|(name, source, scenario, meta)| CorpusEntry {
            name: name.to_string(),
            source: source.to_string(),
            scenario: scenario.to_string(),
            meta: parse_meta(meta, name).expect("bundled metadata is valid"),
        })
        .collect()
}

pub fn entry_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.0).collect()
}

pub fn entry(name: &str) -> Result<CorpusEntry, CorpusError> {
    corpus()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CorpusError::Unknown(name.to_string()))
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl CorpusEntry {
    /// Load an entry from its `.meta.toml` path; the program and scenario
    /// are the sibling files with the same stem.
    pub fn from_meta_file(path: &Path) -> Result<Self, CorpusError> {
        let text = read(path)?;
        let meta = parse_meta(&text, &path.display().to_string())?;
        let file = path.file_name().and_then(|f| f.to_str()).unwrap_or_default();
        let stem = file.strip_suffix(".meta.toml").unwrap_or(&meta.name);
        let sibling = |ext: &str| -> PathBuf { path.with_file_name(format!("{}{}", stem, ext)) };
        Ok(CorpusEntry {
            name: meta.name.clone(),
            source: read(&sibling(".fc"))?,
            scenario: read(&sibling(".scenario.toml"))?,
            meta,
        })
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig, ScenarioError> {
        ScenarioConfig::from_toml(&self.scenario)
    }

    /// The runnable program with `constants` substituted.
    pub fn program(&self, constants: &BTreeMap<String, LocalValue>) -> Result<Program, ParseErrors> {
        load_program(&self.source, constants)
    }

    /// The source with the metadata's mutation applied.
    pub fn mutated_source(&self) -> Result<String, CorpusError> {
        mutate(&self.source, &self.meta.mutation)
    }

    /// A copy of the entry running the mutated program.
    pub fn mutated(&self) -> Result<CorpusEntry, CorpusError> {
        Ok(CorpusEntry {
            source: self.mutated_source()?,
            ..self.clone()
        })
    }
}

/// Replace the `occurrence`-th token whose text is exactly `from`.
pub fn mutate(source: &str, m: &Mutation) -> Result<String, CorpusError> {
    let tokens = tokenize(source).map_err(|d| CorpusError::Lexical(d.to_string()))?;
    let hit = tokens
        .iter()
        .filter(|t| source[t.span.clone()] == m.from)
        .nth(m.occurrence.saturating_sub(1))
        .ok_or_else(|| CorpusError::Mutation {
            from: m.from.clone(),
            occurrence: m.occurrence,
        })?;
    let mut out = String::with_capacity(source.len());
    out.push_str(&source[..hit.span.start]);
    out.push_str(&m.to);
    out.push_str(&source[hit.span.end..]);
    Ok(out)
}
