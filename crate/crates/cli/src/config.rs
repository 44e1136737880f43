//! Setting resolution: flag, then `ASSETOPT_<KEY>` environment variable,
//! then config file, then built-in default.
//!
//! The config file holds `key = value` lines; `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const ENV_PREFIX: &str = "ASSETOPT_";

/// Keys never echoed into manifests.
const SECRET_KEYS: [&str; 2] = ["api_key", "judge_api_key"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Flag,
    Env,
    File,
    Default,
}

#[derive(Debug, Default)]
pub struct Settings {
    env: BTreeMap<String, String>,
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl Settings {
    /// `env` is the process environment (or a stand-in for tests).
    pub fn new(
        env: impl IntoIterator<Item = (String, String)>,
        config_file: Option<&Path>,
    ) -> Result<Self, CliError> {
        let env: BTreeMap<String, String> = env
            .into_iter()
            .filter_map(|(k, v)| {
                k.strip_prefix(ENV_PREFIX)
                    .map(|rest| (rest.to_lowercase(), v))
            })
            .collect();
        let path = config_file
            .map(Path::to_path_buf)
            .or_else(|| env.get("config").map(Into::into));
        let file = match path {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    CliError::usage(format!("cannot read config file {}: {e}", path.display()))
                })?;
                parse_config_file(&text).map_err(CliError::usage)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self {
            env,
            file,
            resolved: BTreeMap::new(),
        })
    }

    fn lookup(&self, key: &str, flag: Option<String>) -> Option<(String, Source)> {
        flag.map(|v| (v, Source::Flag))
            .or_else(|| self.env.get(key).map(|v| (v.clone(), Source::Env)))
            .or_else(|| self.file.get(key).map(|v| (v.clone(), Source::File)))
    }

    fn record(&mut self, key: &str, value: &str) {
        if !SECRET_KEYS.contains(&key) {
            self.resolved.insert(key.to_string(), value.to_string());
        }
    }

    pub fn source(&self, key: &str, flag_given: bool) -> Source {
        if flag_given {
            Source::Flag
        } else {
            self.lookup(key, None).map_or(Source::Default, |(_, s)| s)
        }
    }

    pub fn string(&mut self, key: &str, flag: Option<String>, default: &str) -> String {
        let value = self
            .lookup(key, flag)
            .map_or_else(|| default.to_string(), |(v, _)| v);
        self.record(key, &value);
        value
    }

    pub fn optional(&mut self, key: &str, flag: Option<String>) -> Option<String> {
        let value = self.lookup(key, flag).map(|(v, _)| v);
        if let Some(v) = &value {
            self.record(key, v);
        }
        value
    }

    pub fn parse<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.lookup(key, None) {
                Some((raw, source)) => raw.parse().map_err(|e| {
                    CliError::usage(format!("invalid {key} `{raw}` from {source:?}: {e}"))
                })?,
                None => default,
            },
        };
        self.record(key, &value.to_string());
        Ok(value)
    }

    /// Everything resolved so far, secrets excluded.
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}
