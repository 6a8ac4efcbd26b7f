//! Runtime configuration: TOML-loadable with every knob defaulted, so an
//! empty file (or none at all) yields the standard behavior.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::TypeRules;
use crate::anchors::{AnchorParams, AnchorSource};
use crate::compress::CompressOptions;
use crate::encode::{CharQuadTokenizer, HeuristicTokenizer, Tokenizer};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
    #[error("parsing {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn default_k() -> usize {
    4
}
fn default_theta() -> f64 {
    0.3
}
fn default_delta() -> f64 {
    0.1
}
fn default_eta() -> f64 {
    0.5
}
fn default_tokenizer() -> String {
    "heuristic".to_string()
}
fn default_anchor_source() -> String {
    "union".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Anchor-neighborhood half-width.
    pub k: usize,
    /// Heterogeneity threshold on cell-class fractions.
    pub theta: f64,
    /// Minimum candidate-boundary density.
    pub delta: f64,
    /// Minimum header-likeness along a candidate edge.
    pub eta: f64,
    /// Anchor line source: "discrepancy", "candidate-edges", or "union".
    pub anchor_source: String,
    /// Token estimator: "heuristic" or "char4".
    pub tokenizer: String,
    /// Directory of prompt-template overrides.
    pub templates: Option<PathBuf>,
    pub llm: LlmConfig,
    pub split: SplitConfig,
    pub types: TypesConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            k: default_k(),
            theta: default_theta(),
            delta: default_delta(),
            eta: default_eta(),
            anchor_source: default_anchor_source(),
            tokenizer: default_tokenizer(),
            templates: None,
            llm: LlmConfig::default(),
            split: SplitConfig::default(),
            types: TypesConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmConfig {
    pub endpoint: String,
    /// Model identifier sent with each request; empty means the endpoint's
    /// default model.
    pub model: String,
    /// Name of the environment variable holding the bearer token. The token
    /// itself never appears in configuration files.
    pub auth_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
    pub timeout_secs: u64,
    pub max_attempts: usize,
    pub backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: String::new(),
            model: String::new(),
            auth_env: "LLM_API_KEY".to_string(),
            temperature: 0.0,
            max_tokens: 300,
            top_p: 0.95,
            timeout_secs: 60,
            max_attempts: 3,
            backoff_ms: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Token budget a selected region must exceed before row splitting kicks in.
    pub gate: usize,
    /// Body rows per chunk.
    pub stride: usize,
    /// Worker threads answering chunks (1 = sequential).
    pub parallelism: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { gate: 4096, stride: 3, parallelism: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TypesConfig {
    /// Currency symbols; empty list means the built-in set.
    pub currency_symbols: Vec<String>,
    /// Extra regular expressions recognized as dates.
    pub date_patterns: Vec<String>,
}

/// Loads a TOML configuration file. A missing `path` is an I/O error; a
/// missing file is only acceptable at the call site that decides so.
pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let config: Config = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [("theta", self.theta), ("delta", self.delta), ("eta", self.eta)] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(ConfigError::Invalid(format!("{name} must lie in [0, 1], got {value}")));
            }
        }
        if self.split.gate == 0 {
            return Err(ConfigError::Invalid("split.gate must be at least 1".into()));
        }
        if self.split.stride == 0 {
            return Err(ConfigError::Invalid("split.stride must be at least 1".into()));
        }
        if self.split.parallelism == 0 {
            return Err(ConfigError::Invalid("split.parallelism must be at least 1".into()));
        }
        if self.llm.max_attempts == 0 {
            return Err(ConfigError::Invalid("llm.max_attempts must be at least 1".into()));
        }
        self.anchor_source_parsed()?;
        self.tokenizer()?;
        self.type_rules()?;
        Ok(())
    }

    fn anchor_source_parsed(&self) -> Result<AnchorSource, ConfigError> {
        match self.anchor_source.as_str() {
            "discrepancy" => Ok(AnchorSource::DiscrepancyLines),
            "candidate-edges" => Ok(AnchorSource::CandidateEdges),
            "union" => Ok(AnchorSource::Union),
            other => Err(ConfigError::Invalid(format!(
                "anchor_source `{other}` (expected discrepancy, candidate-edges, or union)"
            ))),
        }
    }

    /// Instantiates the configured token estimator.
    pub fn tokenizer(&self) -> Result<Box<dyn Tokenizer>, ConfigError> {
        match self.tokenizer.as_str() {
            "heuristic" => Ok(Box::new(HeuristicTokenizer)),
            "char4" => Ok(Box::new(CharQuadTokenizer)),
            other => Err(ConfigError::Invalid(format!("unknown tokenizer `{other}`"))),
        }
    }

    /// Compiles the configured type grammar extensions.
    pub fn type_rules(&self) -> Result<TypeRules, ConfigError> {
        let mut rules = TypeRules::default();
        if !self.types.currency_symbols.is_empty() {
            let mut symbols = Vec::new();
            for s in &self.types.currency_symbols {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => symbols.push(c),
                    _ => {
                        return Err(ConfigError::Invalid(format!(
                            "currency symbol `{s}` must be a single character"
                        )))
                    }
                }
            }
            rules.currency_symbols = symbols;
        }
        for pattern in &self.types.date_patterns {
            let re = regex::Regex::new(pattern).map_err(|e| {
                ConfigError::Invalid(format!("date pattern `{pattern}`: {e}"))
            })?;
            rules.extra_date_patterns.push(re);
        }
        Ok(rules)
    }

    pub fn anchor_params(&self) -> AnchorParams {
        AnchorParams {
            theta: self.theta,
            delta: self.delta,
            eta: self.eta,
            source: self.anchor_source_parsed().unwrap_or_default(),
        }
    }

    pub fn compress_options(&self) -> Result<CompressOptions, ConfigError> {
        Ok(CompressOptions { anchor: self.anchor_params(), k: self.k, rules: self.type_rules()? })
    }

    pub fn llm_timeout(&self) -> Duration {
        Duration::from_secs(self.llm.timeout_secs)
    }

    pub fn llm_backoff(&self) -> Duration {
        Duration::from_millis(self.llm.backoff_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_documented_values() {
        let c = Config::default();
        assert_eq!(c.k, 4);
        assert_eq!(c.theta, 0.3);
        assert_eq!(c.delta, 0.1);
        assert_eq!(c.eta, 0.5);
        assert_eq!(c.llm.temperature, 0.0);
        assert_eq!(c.llm.max_tokens, 300);
        assert_eq!(c.llm.top_p, 0.95);
        assert_eq!(c.split.gate, 4096);
        assert_eq!(c.split.stride, 3);
        assert_eq!(c.split.parallelism, 1);
        assert_eq!(c.llm.auth_env, "LLM_API_KEY");
        assert!(c.validate().is_ok());
    }

    #[test]
    fn empty_toml_equals_defaults() {
        let c: Config = toml::from_str("").unwrap();
        assert_eq!(c.k, Config::default().k);
        assert_eq!(c.tokenizer, "heuristic");
    }

    #[test]
    fn partial_toml_overrides() {
        let c: Config = toml::from_str(
            r#"
            k = 2
            theta = 0.5

            [split]
            gate = 1000

            [types]
            currency_symbols = ["₿"]
            date_patterns = ["^\\d{2}/\\d{2}/\\d{4}$"]
            "#,
        )
        .unwrap();
        assert_eq!(c.k, 2);
        assert_eq!(c.theta, 0.5);
        assert_eq!(c.split.gate, 1000);
        assert_eq!(c.split.stride, 3);
        let rules = c.type_rules().unwrap();
        assert_eq!(rules.currency_symbols, vec!['₿']);
        assert_eq!(rules.extra_date_patterns.len(), 1);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = Config::default();
        c.theta = 1.5;
        assert!(c.validate().is_err());

        let mut c = Config::default();
        c.split.stride = 0;
        assert!(c.validate().is_err());

        let mut c = Config::default();
        c.tokenizer = "bpe".into();
        assert!(c.validate().is_err());

        let mut c = Config::default();
        c.anchor_source = "everything".into();
        assert!(c.validate().is_err());

        let mut c = Config::default();
        c.types.currency_symbols = vec!["US$".into()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_toml_keys_fail_parse() {
        assert!(toml::from_str::<Config>("verbosity = 3").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        std::fs::write(&path, "k = 7\n[llm]\nendpoint = \"http://localhost:9\"\n").unwrap();
        let c = load(&path).unwrap();
        assert_eq!(c.k, 7);
        assert_eq!(c.llm.endpoint, "http://localhost:9");
        assert!(load(&dir.path().join("absent.toml")).is_err());
    }
}
