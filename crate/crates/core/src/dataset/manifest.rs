use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::raster::GeoMeta;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Low,
    Medium,
    High,
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Unassigned];
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(Error::InvalidParameter(format!("unknown split {other}"))),
        }
    }
}

/// One line of a JSON-lines manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scene_id: String,
    pub image_path: PathBuf,
    pub mask_path: PathBuf,
    pub geo: GeoMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    /// Declared by the user; never inferred.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
    #[serde(default)]
    pub split: Split,
}

impl ManifestEntry {
    pub fn validate(&self) -> Result<()> {
        if let Some(year) = self.year {
            if !(1900..=2100).contains(&year) {
                return Err(Error::InvalidParameter(format!(
                    "{}: year {year} outside [1900, 2100]",
                    self.scene_id
                )));
            }
        }
        self.geo.validate()
    }
}

pub(crate) fn check_unique(entries: &[ManifestEntry]) -> Result<()> {
    let mut seen = HashSet::new();
    for e in entries {
        if !seen.insert(e.scene_id.as_str()) {
            return Err(Error::DuplicateSceneId(e.scene_id.clone()));
        }
    }
    Ok(())
}

/// Reads a JSON-lines manifest; blank lines are skipped.
pub fn read_manifest(reader: impl BufRead) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line)
            .map_err(|e| Error::SchemaMismatch(format!("manifest line {}: {e}", n + 1)))?;
        entry.validate()?;
        entries.push(entry);
    }
    check_unique(&entries)?;
    Ok(entries)
}

pub fn write_manifest(mut writer: impl Write, entries: &[ManifestEntry]) -> Result<()> {
    for e in entries {
        serde_json::to_writer(&mut writer, e)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}
