use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use parabell_core::Error;
use serde::Serialize;

/// Reasons a command stops early, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::UnknownSet(_) | Error::NotHermitian { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Recorded verbatim at the top of every report.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest<C: Serialize> {
    pub command: String,
    pub config: C,
    pub set_labels: Vec<String>,
    pub output_path: String,
    #[serde(rename = "timestampUTC")]
    pub timestamp_utc: String,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &str, config: C, set_labels: Vec<String>, output: Option<&Path>) -> Self {
        Self {
            command: command.to_string(),
            config,
            set_labels,
            output_path: output
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".to_string()),
            timestamp_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// Pretty JSON to `path`, or to stdout when absent.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
