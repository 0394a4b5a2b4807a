//! Plain-text `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{key}': {message}")]
    InvalidValue { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Parsed pairs in key order, each with the line it came from.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected key = value, got '{line}'"),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1, message: "empty key".into() });
            }
            if entries.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
                return Err(ConfigError::Syntax { line: i + 1, message: format!("duplicate key '{key}'") });
            }
        }
        Ok(Self { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Errors on any key outside `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<(), ConfigError> {
        match self.keys().find(|k| !known.contains(k)) {
            Some(k) => Err(ConfigError::UnknownKey(k.to_string())),
            None => Ok(()),
        }
    }

    /// Parses `key` into `slot` when present.
    pub fn set<T>(&self, key: &str, slot: &mut T) -> Result<(), ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(raw) = self.raw(key) {
            *slot = raw
                .parse()
                .map_err(|e: T::Err| ConfigError::InvalidValue { key: key.into(), message: e.to_string() })?;
        }
        Ok(())
    }

    /// Like [`set`](Self::set) for optional values; `none`, `off` or `disabled` clear the slot.
    pub fn set_opt<T>(&self, key: &str, slot: &mut Option<T>) -> Result<(), ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(()),
            Some(v) if matches!(v.to_ascii_lowercase().as_str(), "" | "none" | "off" | "disabled") => {
                *slot = None;
                Ok(())
            }
            Some(raw) => {
                let value = raw
                    .parse()
                    .map_err(|e: T::Err| ConfigError::InvalidValue { key: key.into(), message: e.to_string() })?;
                *slot = Some(value);
                Ok(())
            }
        }
    }
}
