//! Structured, non-fatal findings reported by every pipeline stage.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Stable machine-readable code, e.g. `orphan-room`.
    pub code: &'static str,
    pub severity: Severity,
    /// Element the finding is about: an IFC GlobalId or an occupant subject id.
    pub source_id: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(code: &'static str, source_id: Option<&str>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Warning,
            source_id: source_id.map(str::to_owned),
            message: message.into(),
        }
    }

    pub fn info(code: &'static str, source_id: Option<&str>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Info, ..Diagnostic::warning(code, source_id, message) }
    }

    pub fn error(code: &'static str, source_id: Option<&str>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, ..Diagnostic::warning(code, source_id, message) }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.severity, self.code)?;
        if let Some(id) = &self.source_id {
            write!(f, " {id}")?;
        }
        write!(f, ": {}", self.message)
    }
}
