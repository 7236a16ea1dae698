use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One detected smell instance. Lines are 1-based, columns 0-based byte
/// offsets within the line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SmellDiagnostic {
    pub sample_id: String,
    pub rule_id: String,
    pub symbol: String,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: Option<usize>,
    pub end_col: Option<usize>,
    pub message: String,
}

impl SmellDiagnostic {
    pub fn validate(&self) -> Result<()> {
        if self.rule_id.is_empty() {
            return Err(Error::Schema("rule_id is empty".into()));
        }
        if self.start_line == 0 {
            return Err(Error::Schema(format!(
                "{}: start_line must be 1-based",
                self.rule_id
            )));
        }
        if let (Some(el), Some(ec)) = (self.end_line, self.end_col) {
            if (self.start_line, self.start_col) > (el, ec) {
                return Err(Error::Schema(format!(
                    "{}: start ({}, {}) after end ({el}, {ec})",
                    self.rule_id, self.start_line, self.start_col
                )));
            }
        } else if let Some(el) = self.end_line {
            if el < self.start_line {
                return Err(Error::Schema(format!(
                    "{}: end_line {el} before start_line {}",
                    self.rule_id, self.start_line
                )));
            }
        }
        Ok(())
    }

    /// Ordering key shared by the detector and the bridge ingester.
    pub fn sort_key(&self) -> (usize, usize, &str) {
        (self.start_line, self.start_col, self.rule_id.as_str())
    }
}

pub fn sort_diagnostics(diags: &mut [SmellDiagnostic]) {
    diags.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then_with(|| a.end_line.cmp(&b.end_line))
            .then_with(|| a.end_col.cmp(&b.end_col))
            .then_with(|| a.message.cmp(&b.message))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeverityLabel {
    Low,
    High,
}

impl SeverityLabel {
    /// High when strictly more than half of the tokens are smelly.
    pub fn from_counts(smelly: usize, total: usize) -> Self {
        if total > 0 && 2 * smelly > total {
            SeverityLabel::High
        } else {
            SeverityLabel::Low
        }
    }
}

impl fmt::Display for SeverityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeverityLabel::Low => "low",
            SeverityLabel::High => "high",
        })
    }
}

impl FromStr for SeverityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(SeverityLabel::Low),
            "high" => Ok(SeverityLabel::High),
            other => Err(Error::Schema(format!("unknown severity `{other}`"))),
        }
    }
}
