//! Run configuration: defaults, then `key=value` file lines, then flags.

use std::fmt::Write;
use std::fs;
use std::path::Path;

use synsum_core::train::TrainConfig;
use thiserror::Error;

use crate::prepare::{PrepOptions, SourceFormat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{origin} line {line}: expected key=value")]
    Syntax { origin: String, line: usize },
    #[error("{origin}: unknown key {key:?}")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: bad value {value:?} for {key}")]
    BadValue { origin: String, key: String, value: String },
    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub beam_width: usize,
    pub max_decode_len: usize,
    pub drop_root: bool,
    /// Corpus sentences are plain word strings rather than trees.
    pub plain: bool,
    /// Skip malformed corpus lines instead of failing.
    pub lenient: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { train: TrainConfig::default(), beam_width: 4, max_decode_len: 120, drop_root: true, plain: false, lenient: false }
    }
}

/// Every recognised key, in the order they are printed.
pub const KEYS: &[&str] = &[
    "hidden",
    "embed",
    "vocab",
    "learning_rate",
    "accumulator_init",
    "coverage_weight",
    "coverage_start",
    "max_source_len",
    "max_target_len",
    "clip_norm",
    "init_scale",
    "steps",
    "seed",
    "checkpoint_every",
    "no_syntax",
    "static_gate",
    "no_gate",
    "no_coverage",
    "beam_width",
    "max_decode_len",
    "drop_root",
    "plain",
    "lenient",
];

fn parse<T: std::str::FromStr>(origin: &str, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue { origin: origin.into(), key: key.into(), value: value.into() })
}

impl RunConfig {
    /// Sets one key. Dashes in keys are read as underscores.
    pub fn set(&mut self, origin: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        let t = &mut self.train;
        let o = origin;
        match key.as_str() {
            "hidden" => t.hidden = parse(o, &key, v)?,
            "embed" => t.embed = parse(o, &key, v)?,
            "vocab" => t.vocab = parse(o, &key, v)?,
            "learning_rate" => t.learning_rate = parse(o, &key, v)?,
            "accumulator_init" => t.accumulator_init = parse(o, &key, v)?,
            "coverage_weight" => t.coverage_weight = parse(o, &key, v)?,
            "coverage_start" => t.coverage_start = parse(o, &key, v)?,
            "max_source_len" => t.max_source_len = parse(o, &key, v)?,
            "max_target_len" => t.max_target_len = parse(o, &key, v)?,
            "clip_norm" => t.clip_norm = parse(o, &key, v)?,
            "init_scale" => t.init_scale = parse(o, &key, v)?,
            "steps" => t.steps = parse(o, &key, v)?,
            "seed" => t.seed = parse(o, &key, v)?,
            "checkpoint_every" => t.checkpoint_every = parse(o, &key, v)?,
            "no_syntax" => t.ablation.no_syntax = parse(o, &key, v)?,
            "static_gate" => t.ablation.static_gate = parse(o, &key, v)?,
            "no_gate" => t.ablation.no_gate = parse(o, &key, v)?,
            "no_coverage" => t.ablation.no_coverage = parse(o, &key, v)?,
            "beam_width" => self.beam_width = parse(o, &key, v)?,
            "max_decode_len" => self.max_decode_len = parse(o, &key, v)?,
            "drop_root" => self.drop_root = parse(o, &key, v)?,
            "plain" => self.plain = parse(o, &key, v)?,
            "lenient" => self.lenient = parse(o, &key, v)?,
            _ => return Err(ConfigError::UnknownKey { origin: origin.into(), key }),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let t = &self.train;
        Some(match key {
            "hidden" => t.hidden.to_string(),
            "embed" => t.embed.to_string(),
            "vocab" => t.vocab.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "accumulator_init" => t.accumulator_init.to_string(),
            "coverage_weight" => t.coverage_weight.to_string(),
            "coverage_start" => t.coverage_start.to_string(),
            "max_source_len" => t.max_source_len.to_string(),
            "max_target_len" => t.max_target_len.to_string(),
            "clip_norm" => t.clip_norm.to_string(),
            "init_scale" => t.init_scale.to_string(),
            "steps" => t.steps.to_string(),
            "seed" => t.seed.to_string(),
            "checkpoint_every" => t.checkpoint_every.to_string(),
            "no_syntax" => t.ablation.no_syntax.to_string(),
            "static_gate" => t.ablation.static_gate.to_string(),
            "no_gate" => t.ablation.no_gate.to_string(),
            "no_coverage" => t.ablation.no_coverage.to_string(),
            "beam_width" => self.beam_width.to_string(),
            "max_decode_len" => self.max_decode_len.to_string(),
            "drop_root" => self.drop_root.to_string(),
            "plain" => self.plain.to_string(),
            "lenient" => self.lenient.to_string(),
            _ => return None,
        })
    }

    /// Applies `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_str(&mut self, origin: &str, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { origin: origin.into(), line: i + 1 })?;
            self.set(&format!("{origin} line {}", i + 1), k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        self.apply_str(&path.display().to_string(), &text)
    }

    /// Every key with its resolved value, one `key=value` per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "{k}={}", self.get(k).expect("listed key"));
        }
        out
    }

    pub fn prep_options(&self) -> PrepOptions {
        PrepOptions {
            format: if self.plain { SourceFormat::Plain } else { SourceFormat::Trees },
            drop_root: self.drop_root,
            no_syntax: self.train.ablation.no_syntax,
            max_source_len: self.train.max_source_len,
            max_target_len: self.train.max_target_len,
        }
    }
}
