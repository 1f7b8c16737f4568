//! Tabular and nested output with a reproducibility header.
//!
//! CSV files start with `# key=value` comment lines (tool, version, config
//! hash, seed, then every resolved configuration entry) followed by an
//! ordinary header row. JSON files wrap their payload as
//! `{"metadata": {...}, "data": ...}`. Nothing time- or host-dependent is
//! written, so a rerun of the same configuration is byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Run results worth seeing before the table (period, rates, ...).
    pub results: Vec<(String, String)>,
    pub config: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str, cfg: &RunConfig) -> crate::Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: cfg.hash()?,
            seed: cfg.seed,
            results: Vec::new(),
            config: cfg.flat_entries(),
        })
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.results.push((key.to_string(), value.to_string()));
        self
    }

    fn lines(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("tool".to_string(), self.tool.clone()),
            ("version".to_string(), self.version.clone()),
            ("command".to_string(), self.command.clone()),
            ("config_hash".to_string(), self.config_hash.clone()),
            ("seed".to_string(), self.seed.to_string()),
        ];
        out.extend(self.results.iter().cloned());
        out.extend(self.config.iter().map(|(k, v)| (format!("config.{k}"), v.clone())));
        out
    }

    fn json(&self) -> serde_json::Value {
        let obj: serde_json::Map<String, serde_json::Value> = self
            .lines()
            .into_iter()
            .map(|(k, v)| (k, serde_json::Value::String(v)))
            .collect();
        serde_json::Value::Object(obj)
    }
}

/// A CSV cell; floats print in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(v) => write!(f, "{v}"),
            Cell::I(v) => write!(f, "{v}"),
            Cell::U(v) => write!(f, "{v}"),
            Cell::S(v) => f.write_str(v),
        }
    }
}

pub fn write_csv<I>(path: &Path, meta: &Metadata, header: &[&str], rows: I) -> crate::Result<()>
where
    I: IntoIterator<Item = Vec<Cell>>,
{
    let mut out = BufWriter::new(File::create(path)?);
    for (k, v) in meta.lines() {
        // Newlines would end the comment early.
        writeln!(out, "# {k}={}", v.replace(['\n', '\r'], " "))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|c| c.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, meta: &Metadata, data: &T) -> crate::Result<()> {
    let doc = serde_json::json!({ "metadata": meta.json(), "data": data });
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Metadata lines and records of a CSV written by [`write_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r.get(j)?.parse().ok()).collect()
    }
}

pub fn read_csv(path: &Path) -> crate::Result<CsvTable> {
    let text = std::fs::read_to_string(path)?;
    let metadata = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].trim_start().split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    Ok(CsvTable { metadata, header, rows })
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let meta = Metadata::new("test", &RunConfig::default()).unwrap().with("period", 6.5);
        let rows = vec![vec![Cell::F(0.1), Cell::from("a,b")], vec![Cell::F(1e-300), Cell::U(3)]];
        write_csv(&path, &meta, &["x", "label"], rows).unwrap();
        let t = read_csv(&path).unwrap();
        assert_eq!(t.meta("period"), Some("6.5"));
        assert_eq!(t.meta("seed"), Some("0"));
        assert_eq!(t.meta("config.omega"), Some("3000.0"));
        assert_eq!(t.header, ["x", "label"]);
        assert_eq!(t.rows[0][1], "a,b");
        assert_eq!(t.column("x").unwrap(), vec![0.1, 1e-300]);
    }

    #[test]
    fn json_wraps_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let meta = Metadata::new("test", &RunConfig::default()).unwrap();
        write_json(&path, &meta, &vec![1.0, 2.0]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["data"][1], 2.0);
        assert_eq!(v["metadata"]["config_hash"].as_str().unwrap().len(), 64);
    }
}
