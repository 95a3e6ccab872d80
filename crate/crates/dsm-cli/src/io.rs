//! File helpers that wrap errors with their pipeline stage and path.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::pipeline::{StageError, StageResult};

pub fn read_file(stage: &'static str, path: &Path) -> StageResult<String> {
    fs::read_to_string(path).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

/// Writes a file, creating parent directories as needed.
pub fn write_file(stage: &'static str, path: &Path, contents: &str) -> StageResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| StageError::new(stage, format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

pub fn load_json<T: DeserializeOwned>(stage: &'static str, path: &Path) -> StageResult<T> {
    let text = read_file(stage, path)?;
    serde_json::from_str(&text)
        .map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

pub fn save_json<T: Serialize>(stage: &'static str, path: &Path, value: &T) -> StageResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_file(stage, path, &text)
}

/// The corpus directory's document files (`*.txt`), sorted by file name so
/// every run sees the same order.
pub fn corpus_files(stage: &'static str, dir: &Path) -> StageResult<Vec<PathBuf>> {
    let entries =
        fs::read_dir(dir).map_err(|e| StageError::new(stage, format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| StageError::new(stage, format!("{}: {e}", dir.display())))?;
        let path = entry.path();
        if path.extension().is_some_and(|ext| ext == "txt") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(StageError::new(
            stage,
            format!("{}: no .txt documents found", dir.display()),
        ));
    }
    Ok(files)
}

/// A document's id is its file stem.
pub fn doc_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
