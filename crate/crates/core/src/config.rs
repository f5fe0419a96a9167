//! Engine configuration: flat `key = value` TOML, `OPENINDEX_*` environment
//! variables and command-line overrides. Later layers win:
//! flag > environment > file > built-in default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::api::ApiConfig;
use crate::concepts::TaggerConfig;
use crate::disambiguation::AuthorWeights;
use crate::ingest::PipelineConfig;

pub const ENV_PREFIX: &str = "OPENINDEX_";
pub const DEFAULT_CONFIG_FILE: &str = "openindex.toml";

/// Every key with its built-in default. Empty string means unset.
pub const KEYS: &[(&str, &str)] = &[
    ("data_dir", "openindex-data"),
    ("bind", "127.0.0.1"),
    ("port", "8080"),
    ("base_url", "https://openalex.org"),
    ("default_per_page", "25"),
    ("max_per_page", "200"),
    ("max_connections", "1024"),
    ("author_threshold", "0.5"),
    ("institution_threshold", "0.7"),
    ("concept_threshold", "0.3"),
    ("ancestor_decay", "0.5"),
    ("title_weight", "2.0"),
    ("weight_name_exact", "0.4"),
    ("weight_coauthor_each", "0.1"),
    ("weight_coauthor_cap", "0.3"),
    ("weight_venue", "0.2"),
    ("weight_citation_each", "0.05"),
    ("weight_citation_cap", "0.1"),
    ("issn_table", ""),
    ("concept_tree", ""),
    ("institution_registry", ""),
    ("resolve_report", ""),
    ("sync_writes", "true"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Default,
    File,
    Env,
    Flag,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("config file {path} is not valid TOML: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("unknown config key {key:?} ({layer:?})")]
    UnknownKey { key: String, layer: Layer },
    #[error("config key {key} = {value:?} ({layer:?}): {reason}")]
    BadValue { key: String, value: String, layer: Layer, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub data_dir: PathBuf,
    pub bind: String,
    pub port: u16,
    pub base_url: String,
    pub default_per_page: usize,
    pub max_per_page: usize,
    pub max_connections: usize,
    pub author_threshold: f64,
    pub institution_threshold: f64,
    pub concept_threshold: f64,
    pub ancestor_decay: f64,
    pub title_weight: f64,
    pub author_weights: AuthorWeights,
    pub issn_table: Option<PathBuf>,
    pub concept_tree: Option<PathBuf>,
    pub institution_registry: Option<PathBuf>,
    pub resolve_report: Option<PathBuf>,
    pub sync_writes: bool,
    /// Which layer supplied each key.
    #[serde(skip)]
    pub sources: BTreeMap<String, Layer>,
}

/// Raw string values per key, tagged with the layer that set them.
#[derive(Debug, Clone)]
pub struct RawConfig {
    values: BTreeMap<String, (String, Layer)>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|(k, v)| ((*k).to_owned(), ((*v).to_owned(), Layer::Default))).collect() }
    }
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: impl Into<String>, layer: Layer) -> Result<(), ConfigError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = (value.into(), layer);
                Ok(())
            }
            None => Err(ConfigError::UnknownKey { key: key.to_owned(), layer }),
        }
    }

    /// Layer a TOML document of flat `key = value` pairs.
    pub fn apply_toml(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        let table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        for (k, v) in table {
            let s = match v {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                other => {
                    return Err(ConfigError::BadValue {
                        key: k,
                        value: other.to_string(),
                        layer: Layer::File,
                        reason: "expected a string, number or boolean".into(),
                    })
                }
            };
            self.set(&k, s, Layer::File)?;
        }
        Ok(())
    }

    /// Layer `OPENINDEX_<KEY>` variables. Unrelated variables are ignored.
    pub fn apply_env<I, K, V>(&mut self, vars: I)
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        for (k, v) in vars {
            let Some(rest) = k.as_ref().strip_prefix(ENV_PREFIX) else { continue };
            let key = rest.to_ascii_lowercase();
            if self.values.contains_key(&key) {
                let _ = self.set(&key, v, Layer::Env);
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn finish(self) -> Result<Config, ConfigError> {
        let v = &self.values;
        fn parse<T: std::str::FromStr>(v: &BTreeMap<String, (String, Layer)>, key: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            let (raw, layer) = &v[key];
            raw.trim().parse().map_err(|e: T::Err| ConfigError::BadValue {
                key: key.to_owned(),
                value: raw.clone(),
                layer: *layer,
                reason: e.to_string(),
            })
        }
        let unit = |key: &str| -> Result<f64, ConfigError> {
            let x: f64 = parse(v, key)?;
            if (0.0..=1.0).contains(&x) {
                Ok(x)
            } else {
                let (raw, layer) = &v[key];
                Err(ConfigError::BadValue { key: key.into(), value: raw.clone(), layer: *layer, reason: "must lie in [0, 1]".into() })
            }
        };
        let path = |key: &str| -> Option<PathBuf> {
            let raw = v[key].0.trim();
            (!raw.is_empty()).then(|| PathBuf::from(raw))
        };
        let cfg = Config {
            data_dir: PathBuf::from(&v["data_dir"].0),
            bind: v["bind"].0.clone(),
            port: parse(v, "port")?,
            base_url: v["base_url"].0.trim_end_matches('/').to_owned(),
            default_per_page: parse(v, "default_per_page")?,
            max_per_page: parse(v, "max_per_page")?,
            max_connections: parse(v, "max_connections")?,
            author_threshold: unit("author_threshold")?,
            institution_threshold: unit("institution_threshold")?,
            concept_threshold: unit("concept_threshold")?,
            ancestor_decay: unit("ancestor_decay")?,
            title_weight: parse(v, "title_weight")?,
            author_weights: AuthorWeights {
                name_exact: unit("weight_name_exact")?,
                coauthor_each: unit("weight_coauthor_each")?,
                coauthor_cap: unit("weight_coauthor_cap")?,
                venue: unit("weight_venue")?,
                citation_each: unit("weight_citation_each")?,
                citation_cap: unit("weight_citation_cap")?,
            },
            issn_table: path("issn_table"),
            concept_tree: path("concept_tree"),
            institution_registry: path("institution_registry"),
            resolve_report: path("resolve_report"),
            sync_writes: parse(v, "sync_writes")?,
            sources: v.iter().map(|(k, (_, l))| (k.clone(), *l)).collect(),
        };
        if cfg.default_per_page == 0 || cfg.max_per_page < cfg.default_per_page {
            let (raw, layer) = &v["max_per_page"];
            return Err(ConfigError::BadValue {
                key: "max_per_page".into(),
                value: raw.clone(),
                layer: *layer,
                reason: format!("need max_per_page >= default_per_page ({}) >= 1", cfg.default_per_page),
            });
        }
        Ok(cfg)
    }
}

impl Config {
    /// Resolve from an optional config file, environment and flag overrides.
    /// A missing file is an error only when `required` is set.
    pub fn load<I, K, V>(file: &Path, required: bool, env: I, flags: &[(&str, String)]) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        let mut raw = RawConfig::default();
        match std::fs::read_to_string(file) {
            Ok(text) => raw.apply_toml(&text, file)?,
            Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(ConfigError::Read { path: file.to_path_buf(), message: e.to_string() }),
        }
        raw.apply_env(env);
        for (k, v) in flags {
            raw.set(k, v.clone(), Layer::Flag)?;
        }
        raw.finish()
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            author_weights: self.author_weights,
            author_threshold: self.author_threshold,
            institution_threshold: self.institution_threshold,
            tagger: TaggerConfig {
                threshold: self.concept_threshold,
                ancestor_decay: self.ancestor_decay,
                title_weight: self.title_weight,
            },
        }
    }

    pub fn api(&self) -> ApiConfig {
        ApiConfig {
            base_url: self.base_url.clone(),
            default_per_page: self.default_per_page,
            max_per_page: self.max_per_page,
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        RawConfig::default().finish().expect("built-in defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_module_constants() {
        let c = Config::default();
        assert_eq!(c.pipeline(), PipelineConfig::default());
        assert_eq!((c.default_per_page, c.max_per_page), (25, 200));
    }

    #[test]
    fn unknown_file_key_is_rejected() {
        let mut raw = RawConfig::default();
        let err = raw.apply_toml("colour = \"blue\"", Path::new("x.toml")).unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey { key: "colour".into(), layer: Layer::File });
    }

    #[test]
    fn thresholds_must_be_unit_interval() {
        let mut raw = RawConfig::default();
        raw.set("author_threshold", "1.5", Layer::Flag).unwrap();
        assert!(matches!(raw.finish(), Err(ConfigError::BadValue { layer: Layer::Flag, .. })));
    }
}
