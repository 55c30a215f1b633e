//! Plain-text configuration: `key = value` lines grouped under `[section]`
//! headers. Lines starting with `#` or `;` are comments. Keys before the
//! first header belong to the unnamed section `""`.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    /// `(section, key, value)` in file order.
    entries: Vec<(String, String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut out = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let err = |msg: &str| Error::Config(format!("line {}: {msg}: `{line}`", no + 1));
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err("unterminated section"))?;
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c)) {
                    return Err(err("bad section name"));
                }
                section = name.to_ascii_lowercase();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(err("empty key"));
            }
            if out.get(&section, &key).is_some() {
                return Err(err("duplicate key"));
            }
            out.entries.push((section.clone(), key, value));
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.entries.iter().any(|(s, _, _)| s == section)
    }

    pub fn section<'a>(&'a self, section: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.entries
            .iter()
            .filter(move |(s, _, _)| s == section)
            .map(|(_, k, v)| (k.as_str(), v.as_str()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.entries.iter().map(|(s, k, v)| (s.as_str(), k.as_str(), v.as_str()))
    }

    /// Sets or replaces a value.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        match self.entries.iter_mut().find(|(s, k, _)| s == section && k == key) {
            Some(entry) => entry.2 = value.to_string(),
            None => self.entries.push((section.into(), key.into(), value.into())),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key)
            .map(|v| parse_f64(v).map_err(|e| Error::Config(format!("[{section}] {key}: {e}"))))
            .transpose()
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("[{section}] {key}: `{v}` is not a count")))
            })
            .transpose()
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        self.get(section, key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::Config(format!("[{section}] {key}: `{v}` is not a boolean"))),
            })
            .transpose()
    }
}

/// Parses a finite real; `pi`, `2pi` and `tau` are accepted as shorthands.
pub fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v = match s.trim().to_ascii_lowercase().as_str() {
        "pi" => std::f64::consts::PI,
        "2pi" | "tau" => std::f64::consts::TAU,
        "-pi" => -std::f64::consts::PI,
        other => other.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}
