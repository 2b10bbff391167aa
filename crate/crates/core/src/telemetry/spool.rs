//! Durable local store of sessions awaiting upload.
//!
//! Layout: `<dir>/<session-id>.json`, written as `<session-id>.tmp` then
//! renamed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stats::SessionStats;

#[derive(Debug, Error)]
pub enum SpoolError {
    #[error("spool i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("corrupt spool entry {path}: {source}")]
    Corrupt {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid session id {0:?}")]
    InvalidId(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpoolEntry {
    /// Failed upload attempts so far.
    pub attempts: u32,
    /// Earliest time of the next attempt, clock milliseconds.
    pub next_due_ms: u64,
    pub stats: SessionStats,
}

#[derive(Debug, Clone)]
pub struct SpoolStore {
    dir: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SpoolError + '_ {
    move |source| SpoolError::Io {
        path: path.to_owned(),
        source,
    }
}

impl SpoolStore {
    /// Opens `dir`, creating it if needed. Leftover `*.tmp` files from an
    /// interrupted write are removed.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SpoolError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let store = SpoolStore { dir };
        for entry in fs::read_dir(&store.dir).map_err(io_err(&store.dir))? {
            let path = entry.map_err(io_err(&store.dir))?.path();
            if path.extension().is_some_and(|e| e == "tmp") {
                fs::remove_file(&path).map_err(io_err(&path))?;
            }
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_of(&self, id: &str) -> Result<PathBuf, SpoolError> {
        let valid = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !valid {
            return Err(SpoolError::InvalidId(id.to_owned()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    /// Stores `stats` with a fresh attempt count; replaces an entry with the
    /// same session id. Returns the id.
    pub fn spool(&self, stats: &SessionStats) -> Result<String, SpoolError> {
        let entry = SpoolEntry {
            attempts: 0,
            next_due_ms: 0,
            stats: stats.clone(),
        };
        self.write(&entry)?;
        Ok(stats.session_id.clone())
    }

    pub fn write(&self, entry: &SpoolEntry) -> Result<(), SpoolError> {
        let id = &entry.stats.session_id;
        let path = self.path_of(id)?;
        let tmp = self.dir.join(format!("{id}.tmp"));
        let bytes = serde_json::to_vec(entry).expect("spool entry serializes");
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(&bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        drop(f);
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(())
    }

    /// Pending session ids, sorted.
    pub fn list(&self) -> Result<Vec<String>, SpoolError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let path = entry.map_err(io_err(&self.dir))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_owned());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn load(&self, id: &str) -> Result<SpoolEntry, SpoolError> {
        let path = self.path_of(id)?;
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        serde_json::from_slice(&bytes).map_err(|source| SpoolError::Corrupt { path, source })
    }

    /// Deletes an acknowledged entry.
    pub fn remove(&self, id: &str) -> Result<(), SpoolError> {
        let path = self.path_of(id)?;
        fs::remove_file(&path).map_err(io_err(&path))
    }
}
