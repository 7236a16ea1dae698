//! Diagnostics JSON produced by external linters.
//!
//! A file may hold a single record, an array of records, or one record per
//! line. Rule ids the native engine does not know are kept as they are.

use std::path::Path;

use serde::{Deserialize, Serialize};
use smellprop_core::diagnostic::sort_diagnostics;
use smellprop_core::SmellDiagnostic;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSmell {
    pub rule_id: String,
    pub symbol: String,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: Option<usize>,
    pub end_col: Option<usize>,
    pub message: String,
}

/// One snippet's diagnostics, optionally stamped with the producing linter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linter_version: Option<String>,
    /// Set when the linter crashed on this snippet; `smells` is then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub smells: Vec<BridgeSmell>,
}

impl DiagnosticsRecord {
    pub fn from_diagnostics(sample_id: &str, diags: &[SmellDiagnostic], linter_version: Option<&str>) -> Self {
        Self {
            sample_id: sample_id.to_owned(),
            linter_version: linter_version.map(str::to_owned),
            error: None,
            smells: diags
                .iter()
                .map(|d| BridgeSmell {
                    rule_id: d.rule_id.clone(),
                    symbol: d.symbol.clone(),
                    start_line: d.start_line,
                    start_col: d.start_col,
                    end_line: d.end_line,
                    end_col: d.end_col,
                    message: d.message.clone(),
                })
                .collect(),
        }
    }

    pub fn diagnostics(&self) -> Vec<SmellDiagnostic> {
        self.smells
            .iter()
            .map(|s| SmellDiagnostic {
                sample_id: self.sample_id.clone(),
                rule_id: s.rule_id.clone(),
                symbol: s.symbol.clone(),
                start_line: s.start_line,
                start_col: s.start_col,
                end_line: s.end_line,
                end_col: s.end_col,
                message: s.message.clone(),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_id.is_empty() {
            return Err(Error::Schema("sample_id is empty".into()));
        }
        if self.linter_version.as_deref() == Some("") {
            return Err(Error::Schema(format!("{}: linter_version is empty", self.sample_id)));
        }
        for d in self.diagnostics() {
            d.validate()
                .map_err(|e| Error::Schema(format!("{}: {e}", self.sample_id)))?;
        }
        Ok(())
    }
}

fn schema(context: &str, e: serde_json::Error) -> Error {
    Error::Schema(format!("{context}: {e}"))
}

/// Parses records from any of the accepted layouts.
pub fn parse_records(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let trimmed = text.trim_start();
    let records = if trimmed.starts_with('[') {
        serde_json::from_str::<Vec<DiagnosticsRecord>>(text).map_err(|e| schema("array", e))?
    } else {
        match serde_json::from_str::<DiagnosticsRecord>(text) {
            Ok(r) => vec![r],
            Err(whole) => {
                let lines: Vec<(usize, &str)> = text
                    .lines()
                    .enumerate()
                    .filter(|(_, l)| !l.trim().is_empty())
                    .collect();
                if lines.len() <= 1 {
                    return Err(schema("record", whole));
                }
                lines
                    .into_iter()
                    .map(|(k, l)| serde_json::from_str(l).map_err(|e| schema(&format!("line {}", k + 1), e)))
                    .collect::<Result<_>>()?
            }
        }
    };
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

pub fn read_records(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path)?;
    parse_records(&text).map_err(|e| match e {
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads, validates and sorts every diagnostic in a bridge file.
pub fn ingest_diagnostics(path: &Path) -> Result<Vec<SmellDiagnostic>> {
    let mut out: Vec<SmellDiagnostic> = read_records(path)?
        .iter()
        .flat_map(DiagnosticsRecord::diagnostics)
        .collect();
    sort_diagnostics(&mut out);
    Ok(out)
}

/// Pretty JSON with a trailing newline, the layout of committed golden files.
pub fn render_record(record: &DiagnosticsRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("records always serialize");
    s.push('\n');
    s
}
