//! Per-stage artifacts named `<stage>.<role>.<digest>.<ext>` and the
//! `artifacts.json` index pointing at the current file for each role.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::digest::short_digest;
use crate::error::{Error, Result};

pub const INDEX_FILE: &str = "artifacts.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArtifactIndex {
    /// stage -> role -> file name
    pub stages: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Debug)]
pub struct ArtifactStore {
    dir: PathBuf,
    index: ArtifactIndex,
}

/// Files written by one stage; committed to the index only when the stage
/// finishes, so a failed stage leaves the previous index untouched.
#[derive(Debug, Default)]
pub struct StageOutput {
    stage: String,
    files: BTreeMap<String, String>,
}

impl ArtifactStore {
    /// Opens `dir`, reading the index if one exists. Nothing is created
    /// until the first write.
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(INDEX_FILE);
        let index = if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            serde_json::from_str(&text)?
        } else {
            ArtifactIndex::default()
        };
        Ok(ArtifactStore {
            dir: dir.to_path_buf(),
            index,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn index(&self) -> &ArtifactIndex {
        &self.index
    }

    pub fn has(&self, stage: &str, role: &str) -> bool {
        self.file_name(stage, role).is_some()
    }

    pub fn file_name(&self, stage: &str, role: &str) -> Option<&str> {
        self.index.stages.get(stage)?.get(role).map(String::as_str)
    }

    pub fn path(&self, stage: &str, role: &str) -> Result<PathBuf> {
        self.file_name(stage, role)
            .map(|f| self.dir.join(f))
            .ok_or_else(|| Error::Config(format!("no {stage}.{role} artifact in {}; run the {stage} stage first", self.dir.display())))
    }

    pub fn read(&self, stage: &str, role: &str) -> Result<Vec<u8>> {
        let path = self.path(stage, role)?;
        fs::read(&path).map_err(|e| Error::io(&path, e))
    }

    pub fn read_json<T: DeserializeOwned>(&self, stage: &str, role: &str) -> Result<T> {
        Ok(serde_json::from_slice(&self.read(stage, role)?)?)
    }

    pub fn read_jsonl<T: DeserializeOwned>(&self, stage: &str, role: &str) -> Result<Vec<T>> {
        let bytes = self.read(stage, role)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect()
    }

    pub fn begin(&self, stage: &str) -> StageOutput {
        StageOutput {
            stage: stage.to_string(),
            files: BTreeMap::new(),
        }
    }

    /// Writes one artifact; the content digest goes into the file name.
    pub fn put(&self, out: &mut StageOutput, role: &str, ext: &str, bytes: &[u8]) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let name = format!("{}.{role}.{}.{ext}", out.stage, short_digest(bytes));
        let path = self.dir.join(&name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        out.files.insert(role.to_string(), name);
        Ok(path)
    }

    pub fn put_json<T: Serialize>(&self, out: &mut StageOutput, role: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.put(out, role, "json", text.as_bytes())
    }

    pub fn put_jsonl<T: Serialize>(&self, out: &mut StageOutput, role: &str, items: &[T]) -> Result<PathBuf> {
        let mut text = String::new();
        for item in items {
            text.push_str(&serde_json::to_string(item)?);
            text.push('\n');
        }
        self.put(out, role, "jsonl", text.as_bytes())
    }

    /// Forgets the given stages' entries; their files are left in place.
    /// Takes effect on disk with the next commit.
    pub fn invalidate(&mut self, stages: &[&str]) {
        for s in stages {
            self.index.stages.remove(*s);
        }
    }

    /// Replaces the stage's index entry and rewrites the index.
    pub fn commit(&mut self, out: StageOutput) -> Result<()> {
        self.index.stages.insert(out.stage, out.files);
        let path = self.dir.join(INDEX_FILE);
        let tmp = self.dir.join(format!(".{INDEX_FILE}.tmp"));
        let mut text = serde_json::to_string_pretty(&self.index)?;
        text.push('\n');
        fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}
