//! Output directory of one run. All files go through a single writer that
//! records a SHA-256 per file for the manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::seeds::sha256_hex;
use crate::HarnessError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// Integration stopped early; the outputs cover the partial trajectory.
    Partial,
    Failed,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    status: RunStatus,
    seed: u64,
    model_hash: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
    files: &'a [FileEntry],
}

pub struct RunDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(root).map_err(|e| HarnessError::output_io(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `rel` (slash-separated, relative to the run directory).
    pub fn write(&mut self, rel: &str, contents: &[u8]) -> Result<(), HarnessError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| HarnessError::output_io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| HarnessError::output_io(&path, e))?;
        let entry = FileEntry { path: rel.to_string(), sha256: sha256_hex(contents), bytes: contents.len() };
        match self.files.iter_mut().find(|f| f.path == rel) {
            Some(f) => *f = entry,
            None => self.files.push(entry),
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), HarnessError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Writes the manifest listing every file written so far.
    pub fn finish(
        self,
        command: &str,
        status: RunStatus,
        seed: u64,
        model_hash: &str,
        note: Option<&str>,
    ) -> Result<PathBuf, HarnessError> {
        let manifest = Manifest { command, status, seed, model_hash, note, files: &self.files };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| HarnessError::output_io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_file_with_its_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(dir.path()).unwrap();
        run.write("a.txt", b"abc").unwrap();
        run.write("sub/b.txt", b"").unwrap();
        run.write("a.txt", b"abc").unwrap();
        let path = run.finish("test", RunStatus::Complete, 1, "h", None).unwrap();
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let files = m["files"].as_array().unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(files[0]["sha256"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(m["status"], "complete");
        assert!(dir.path().join("sub/b.txt").exists());
    }
}
