use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use riverbank_core::CoregistrationReport;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Scenes cannot be differenced; maps to exit code 3.
#[derive(Debug)]
pub struct CoregistrationFailure {
    pub report: Option<CoregistrationReport>,
    pub reason: String,
}

impl fmt::Display for CoregistrationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "co-registration failed: {}", self.reason)?;
        if let Some(json) = self
            .report
            .as_ref()
            .and_then(|r| serde_json::to_string_pretty(r).ok())
        {
            write!(f, "\n{json}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CoregistrationFailure {}

/// A result that violates an invariant of the computation; exit code 4.
#[derive(Debug)]
pub struct InternalError(pub String);

impl fmt::Display for InternalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for InternalError {}

/// 3 for co-registration, 4 for internal failures, 2 for everything else
/// (bad input, unreadable or unwritable files).
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<CoregistrationFailure>().is_some() {
        3
    } else if err.downcast_ref::<InternalError>().is_some() {
        4
    } else {
        2
    }
}

#[derive(Serialize)]
struct Versioned<'a, T> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a top-level `schema_version`.
pub fn to_json<T: Serialize>(body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    })?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    write_text(path, &to_json(body)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .with_context(|| format!("cannot create directory {}", path.display()))
}

/// Path as recorded in reports: exactly as given on the command line.
pub fn shown(path: &Path) -> String {
    path.display().to_string()
}
