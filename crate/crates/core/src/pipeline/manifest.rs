//! Image manifests: one `path<TAB>label` pair per line. Relative paths are
//! resolved against the manifest's own directory.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
}

impl ManifestEntry {
    pub fn new(path: impl Into<PathBuf>, label: impl Into<String>) -> Self {
        ManifestEntry { path: path.into(), label: label.into() }
    }
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let (path, label) = line
            .split_once('\t')
            .ok_or_else(|| Error::SpecSyntax { line: i + 1, reason: "expected `path<TAB>label`".into() })?;
        if path.is_empty() || label.is_empty() || label.contains('\t') {
            return Err(Error::SpecSyntax { line: i + 1, reason: "empty path or label, or extra tab".into() });
        }
        out.push(ManifestEntry::new(path, label));
    }
    Ok(out)
}

pub fn format_manifest(entries: &[ManifestEntry]) -> Result<String> {
    let mut out = String::new();
    for e in entries {
        let path = e.path.to_str().ok_or_else(|| Error::InvalidConfig(format!("non UTF-8 path {:?}", e.path)))?;
        if path.contains(['\t', '\n']) || e.label.contains(['\t', '\n']) || e.label.is_empty() {
            return Err(Error::InvalidConfig(format!("entry `{path}` cannot be written as a manifest line")));
        }
        out.push_str(path);
        out.push('\t');
        out.push_str(&e.label);
        out.push('\n');
    }
    Ok(out)
}

/// Reads entries as written; see [`resolve_entry`].
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
    parse_manifest(&text).map_err(|e| e.at(path))
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    std::fs::write(path, format_manifest(entries)?).map_err(|e| Error::from(e).at(path))
}

/// Image path relative to the manifest file's directory.
pub fn resolve_entry(manifest: &Path, entry: &ManifestEntry) -> PathBuf {
    if entry.path.is_absolute() {
        return entry.path.clone();
    }
    manifest.parent().unwrap_or(Path::new("")).join(&entry.path)
}
