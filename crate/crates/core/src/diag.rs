//! Structured diagnostics, rendered as `LEVEL code message` lines.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Error,
    Warn,
    Info,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Error => "ERROR",
            Level::Warn => "WARN",
            Level::Info => "INFO",
        }
    }

    /// Parses a verbosity threshold such as `warn` or `INFO`.
    pub fn parse(text: &str) -> Option<Level> {
        match text.trim().to_ascii_lowercase().as_str() {
            "error" => Some(Level::Error),
            "warn" | "warning" => Some(Level::Warn),
            "info" => Some(Level::Info),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn warn(code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            level: Level::Warn,
            code,
            message: message.into(),
        }
    }

    pub fn info(code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            level: Level::Info,
            code,
            message: message.into(),
        }
    }

    pub fn error(code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            level: Level::Error,
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.level.as_str(), self.code, self.message)
    }
}

pub mod codes {
    pub const UNKNOWN_SLOT: &str = "unknown-slot";
    pub const TYPING_CONFLICT: &str = "typing-conflict";
    pub const UNTYPED_NODE: &str = "untyped-node";
    pub const HAPPENINGS_SUBJECT_FIRST: &str = "happenings-subject-first";
    pub const ENDPOINT_CONSTRAINT: &str = "endpoint-constraint";
    pub const BROKEN_CHAIN: &str = "broken-chain";
    pub const UNKNOWN_INSTANCE: &str = "unknown-instance";
    pub const NON_LOCATION: &str = "non-location-spatial";
    pub const BRANCHING_CHAIN: &str = "branching-chain";
    pub const NAME_COLLISION: &str = "name-collision";
}
