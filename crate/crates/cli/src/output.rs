use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use jointergm::error::Result;

/// Attaches `path` to an I/O or CSV failure so the message names the file.
pub fn at_path<T, E: std::fmt::Display>(r: std::result::Result<T, E>, path: &Path) -> Result<T> {
    r.map_err(|e| jointergm::error::Error::Data(format!("{}: {e}", path.display())))
}

pub fn prepare_dir(dir: &Path) -> Result<()> {
    at_path(fs::create_dir_all(dir), dir)
}

/// Writer for CSV at `dir/name`. Floats should go through [`num`] so they
/// keep full round-trip precision.
pub fn csv_at(dir: &Path, name: &str) -> Result<(csv::Writer<fs::File>, PathBuf)> {
    let path = dir.join(name);
    Ok((at_path(csv::Writer::from_path(&path), &path)?, path))
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Flat `key=value` report, written in insertion order.
#[derive(Debug, Default)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, num(value));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    #[cfg(test)]
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Parses a `key=value` file, skipping blank lines and `#` comments.
pub fn read_key_values(path: &Path) -> Result<KeyValues> {
    let text = at_path(fs::read_to_string(path), path)?;
    let mut kv = KeyValues::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| jointergm::error::Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("expected key=value, got `{line}`"),
        })?;
        kv.push(k.trim(), v.trim());
    }
    Ok(kv)
}
