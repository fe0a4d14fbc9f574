//! Flat `key = value` files with `[section]` headers, one section per
//! command. Flags given on the command line win over file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("config line {}: expected key = value", n + 1)));
            };
            sections
                .entry(current.clone())
                .or_default()
                .insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(Self { sections })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .or_else(|| self.sections.get("").and_then(|s| s.get(key)))
            .map(String::as_str)
    }
}

/// Resolves settings for one command and records what was used.
pub struct Settings<'a> {
    file: &'a ConfigFile,
    section: &'a str,
    pub resolved: BTreeMap<String, String>,
}

impl<'a> Settings<'a> {
    pub fn new(file: &'a ConfigFile, section: &'a str) -> Self {
        Self { file, section, resolved: BTreeMap::new() }
    }

    /// Raw text: flag, then file, then default.
    pub fn text(&mut self, key: &str, flag: Option<&str>, default: &str) -> String {
        let value = flag
            .map(str::to_string)
            .or_else(|| self.file.get(self.section, key).map(str::to_string))
            .unwrap_or_else(|| default.to_string());
        self.resolved.insert(key.to_string(), value.clone());
        value
    }

    pub fn value<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        if let Some(v) = flag {
            self.resolved.insert(key.to_string(), v.to_string());
            return Ok(v);
        }
        match self.file.get(self.section, key) {
            Some(text) => {
                let v = text
                    .parse::<T>()
                    .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {text:?}")))?;
                self.resolved.insert(key.to_string(), text.to_string());
                Ok(v)
            }
            None => {
                self.resolved.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn list(&mut self, key: &str, flag: Option<&str>, default: &str) -> Result<Vec<f64>, CliError> {
        let text = self.text(key, flag, default);
        parse_list(&text).map_err(|e| CliError::Usage(format!("{key}: {e}")))
    }
}

/// Comma-separated reals; `inf` is accepted.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "inf" | "∞" => Ok(f64::INFINITY),
            _ => s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")),
        })
        .collect()
}

pub fn parse_vector(text: &str) -> Result<[f64; 3], String> {
    let v = parse_list(text)?;
    match v.as_slice() {
        [x] => Ok([*x, 0.0, 0.0]),
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(format!("expected one or three components, got {text:?}")),
    }
}
