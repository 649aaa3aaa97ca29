//! Flat `key = value` text files. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;

use super::RunError;

#[derive(Debug, Default)]
pub(crate) struct KvFile {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvFile {
    pub(crate) fn parse(text: &str) -> Result<Self, RunError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| RunError::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(RunError::Config(format!("line {}: empty key", n + 1)));
            }
            if entries.insert(key.clone(), (v.trim().to_string(), n + 1)).is_some() {
                return Err(RunError::Config(format!("line {}: duplicate key {key}", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub(crate) fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    pub(crate) fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, RunError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| RunError::Config(format!("line {line}: invalid value {v:?} for {key}"))),
        }
    }

    /// Fails on the first key nobody consumed.
    pub(crate) fn finish(self) -> Result<(), RunError> {
        match self.entries.into_iter().next() {
            Some((k, (_, line))) => Err(RunError::Config(format!("line {line}: unknown key {k}"))),
            None => Ok(()),
        }
    }
}
