//! Plain-text key=value summaries and deterministic float formatting.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// 17 significant digits: round-trips any f64 exactly and keeps text output
/// byte-identical across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Ordered key=value report; every acceptance metric of an experiment lands
/// here.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Summary {
        Summary::default()
    }

    pub fn put(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn put_f64(&mut self, key: &str, value: f64) {
        self.put(key, fmt_f64(value));
    }

    pub fn put_usize(&mut self, key: &str, value: usize) {
        self.put(key, value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for (k, v) in &self.entries {
            writeln!(&mut out, "{k} = {v}")?;
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Write rows of already-formatted cells as CSV with a header line.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(&mut out, "{}", header.join(","))?;
    for row in rows {
        writeln!(&mut out, "{}", row.join(","))?;
    }
    std::fs::write(path, out)?;
    Ok(())
}
