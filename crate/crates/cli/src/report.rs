//! Machine-readable report assembly: one CSV row per quantity and a
//! schema-versioned JSON envelope. Identical inputs must serialize to
//! identical bytes, so nothing time- or environment-dependent goes in.

use std::fs;
use std::io::Write;
use std::path::Path;

use gravexch::C64;
use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA: &str = "gravexch-report/1";

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub name: String,
    pub mode: String,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub meta: String,
}

impl Row {
    pub fn complex(name: impl Into<String>, mode: impl Into<String>, value: C64) -> Self {
        Self {
            name: name.into(),
            mode: mode.into(),
            re: value.re,
            im: value.im,
            abs: value.norm(),
            meta: String::new(),
        }
    }

    pub fn real(name: impl Into<String>, mode: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            mode: mode.into(),
            re: value,
            im: 0.0,
            abs: value.abs(),
            meta: String::new(),
        }
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = meta.into();
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryEntry {
    pub name: String,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: Tool,
    pub command: String,
    pub config: RunConfig,
    pub seeds: Seeds,
    pub summary: Vec<SummaryEntry>,
    pub results: Vec<Row>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Seeds {
    pub quadrature: u64,
}

impl Report {
    pub fn new(command: &str, echo: &RunConfig) -> Self {
        Self {
            schema: SCHEMA,
            tool: Tool {
                name: "gravexch",
                version: env!("CARGO_PKG_VERSION"),
            },
            command: command.to_string(),
            config: echo.clone(),
            seeds: Seeds {
                quadrature: echo.quadrature.seed,
            },
            summary: Vec::new(),
            results: Vec::new(),
        }
    }

    pub fn summarize(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.summary.push(SummaryEntry {
            name: name.into(),
            value: value.into(),
        });
    }

    pub fn push(&mut self, row: Row) {
        self.results.push(row);
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>, String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["name", "mode", "re", "im", "abs", "meta"])
            .map_err(|e| e.to_string())?;
        for row in &self.results {
            writer
                .write_record([
                    row.name.as_str(),
                    row.mode.as_str(),
                    &row.re.to_string(),
                    &row.im.to_string(),
                    &row.abs.to_string(),
                    row.meta.as_str(),
                ])
                .map_err(|e| e.to_string())?;
        }
        writer.into_inner().map_err(|e| e.to_string())
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>, String> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| e.to_string())?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Writes the requested formats into `directory` as `report.csv` and
    /// `report.json`, returning the paths written.
    pub fn write(&self, directory: &Path, formats: &[String]) -> Result<Vec<String>, String> {
        fs::create_dir_all(directory)
            .map_err(|e| format!("cannot create {}: {e}", directory.display()))?;
        let mut written = Vec::new();
        for format in formats {
            let (file_name, bytes) = match format.as_str() {
                "csv" => ("report.csv", self.to_csv_bytes()?),
                "json" => ("report.json", self.to_json_bytes()?),
                other => return Err(format!("unknown output format \"{other}\"")),
            };
            let path = directory.join(file_name);
            let mut file = fs::File::create(&path)
                .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
            file.write_all(&bytes)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            written.push(path.display().to_string());
        }
        Ok(written)
    }
}
