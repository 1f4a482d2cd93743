//! Plain-text experiment configuration: `key = value` lines grouped under
//! `[section]` headers. `#` starts a comment. Keys before the first header
//! belong to the unnamed section `""`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    section_lines: BTreeMap<String, usize>,
    /// Directory that relative paths resolve against.
    base_dir: PathBuf,
    used: RefCell<BTreeSet<(String, String)>>,
}

fn parse_error<T>(line: usize, reason: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        reason: reason.into(),
    })
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return parse_error(line, format!("unterminated section header `{content}`"));
                };
                let name = name.trim();
                if name.is_empty() {
                    return parse_error(line, "empty section name");
                }
                if cfg.section_lines.contains_key(name) {
                    return parse_error(line, format!("section [{name}] appears twice"));
                }
                section = name.to_string();
                cfg.section_lines.insert(section.clone(), line);
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return parse_error(line, format!("expected `key = value`, found `{content}`"));
            };
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return parse_error(line, format!("invalid key `{key}`"));
            }
            let entries = cfg.sections.entry(section.clone()).or_default();
            if let Some(prev) = entries.get(key) {
                return parse_error(line, format!("key `{key}` already set at line {}", prev.line));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line,
                },
            );
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        let e = self.sections.get(section)?.get(key)?;
        self.used.borrow_mut().insert((section.to_string(), key.to_string()));
        Some(e)
    }

    /// Line of a key, or of its section header, for error messages.
    fn line_of(&self, section: &str, key: &str) -> usize {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|e| e.line)
            .or_else(|| self.section_lines.get(section).copied())
            .unwrap_or(0)
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    pub fn require_str(&self, section: &str, key: &str) -> Result<&str> {
        match self.get_str(section, key) {
            Some(v) => Ok(v),
            None => parse_error(self.line_of(section, key), format!("missing key `{key}` in [{section}]")),
        }
    }

    pub fn get<T>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(e) = self.entry(section, key) else {
            return Ok(None);
        };
        match e.value.parse() {
            Ok(v) => Ok(Some(v)),
            Err(err) => parse_error(e.line, format!("`{key}` = `{}`: {err}", e.value)),
        }
    }

    pub fn get_or<T>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T>(&self, section: &str, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.get(section, key)? {
            Some(v) => Ok(v),
            None => parse_error(self.line_of(section, key), format!("missing key `{key}` in [{section}]")),
        }
    }

    /// Comma-separated list; an empty value gives an empty list.
    pub fn get_list<T>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(e) = self.entry(section, key) else {
            return Ok(None);
        };
        if e.value.is_empty() {
            return Ok(Some(Vec::new()));
        }
        e.value
            .split(',')
            .map(|item| {
                let item = item.trim();
                item.parse()
                    .or_else(|err| parse_error(e.line, format!("`{key}` item `{item}`: {err}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    pub fn get_path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.get_str(section, key).map(|p| self.base_dir.join(p))
    }

    /// Error naming a key's line, for values that parse but are out of range.
    pub fn invalid<T>(&self, section: &str, key: &str, reason: impl Display) -> Result<T> {
        parse_error(self.line_of(section, key), format!("`{key}` in [{section}]: {reason}"))
    }

    /// Rejects keys no reader asked for, which are almost always typos.
    pub fn ensure_all_used(&self) -> Result<()> {
        let used = self.used.borrow();
        let mut unknown: Vec<(usize, String)> = self
            .sections
            .iter()
            .flat_map(|(s, entries)| {
                entries
                    .iter()
                    .filter(|(k, _)| !used.contains(&(s.clone(), (*k).clone())))
                    .map(move |(k, e)| (e.line, format!("[{s}] {k}")))
            })
            .collect();
        unknown.sort();
        match unknown.first() {
            Some((line, name)) => parse_error(*line, format!("unknown key {name}")),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sweep on a strip
title = demo
[mesh]
kind = flat_strip   # inline comment
nx = 8

[sweep]
eps = 0.2, 0.1 ,0.05
empty =
";

    #[test]
    fn reads_sections_and_values() {
        let c = Config::parse(SAMPLE).unwrap();
        assert_eq!(c.get_str("", "title"), Some("demo"));
        assert_eq!(c.require_str("mesh", "kind").unwrap(), "flat_strip");
        assert_eq!(c.require::<usize>("mesh", "nx").unwrap(), 8);
        assert_eq!(c.get_list::<f64>("sweep", "eps").unwrap(), Some(vec![0.2, 0.1, 0.05]));
        assert_eq!(c.get_list::<f64>("sweep", "empty").unwrap(), Some(vec![]));
        assert_eq!(c.get_or("mesh", "ny", 3usize).unwrap(), 3);
        c.ensure_all_used().unwrap();
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of(Config::parse("[a]\nnot a pair\n").unwrap_err()), 2);
        assert_eq!(line_of(Config::parse("[a\n").unwrap_err()), 1);
        assert_eq!(line_of(Config::parse("[a]\nx = 1\nx = 2\n").unwrap_err()), 3);
        assert_eq!(line_of(Config::parse("[a]\n[a]\n").unwrap_err()), 2);
        let c = Config::parse("[mesh]\n\nnx = eight\n").unwrap();
        assert_eq!(line_of(c.require::<usize>("mesh", "nx").unwrap_err()), 3);
        assert_eq!(line_of(c.require::<usize>("mesh", "ny").unwrap_err()), 1);
        let c = Config::parse("[s]\neps = 0.1, x\n").unwrap();
        assert_eq!(line_of(c.get_list::<f64>("s", "eps").unwrap_err()), 2);
    }

    #[test]
    fn unknown_keys_are_reported() {
        let c = Config::parse("[mesh]\nkind = icosphere\nradus = 1\n").unwrap();
        c.require_str("mesh", "kind").unwrap();
        assert_eq!(line_of(c.ensure_all_used().unwrap_err()), 3);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(Config::load("/nonexistent/x.cfg"), Err(Error::NotFound(_))));
    }
}
