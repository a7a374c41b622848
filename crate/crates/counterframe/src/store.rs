//! File-backed store for runs produced by the service.
//!
//! Runs are appended to `runs.jsonl` in the store directory (same line
//! format as the batch run log). An id → byte-range index is rebuilt from
//! the file on startup. One writer at a time; readers open their own
//! handle.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use counterframe_core::{CounterfactualRun, Category, RunStatus, SentimentClass};
use serde::Deserialize;

use crate::runlog::{LogEntry, LogError, RunLog};

pub const RUNS_FILE: &str = "runs.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("store io: {0}")]
    Io(#[from] std::io::Error),
    #[error("stored record for {0} is unreadable: {1}")]
    Corrupt(String, String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct RunFilter {
    pub status: Option<RunStatus>,
    pub target: Option<SentimentClass>,
    /// Category of the step that reached the target.
    pub category: Option<Category>,
}

impl RunFilter {
    pub fn matches(&self, run: &CounterfactualRun) -> bool {
        self.status.is_none_or(|s| run.status == s)
            && self.target.is_none_or(|t| run.target_class == t)
            && self.category.is_none_or(|c| run.achieving_category() == Some(c))
    }
}

struct Writer {
    file: File,
    len: u64,
    next_seq: u64,
}

pub struct RunStore {
    path: PathBuf,
    writer: Mutex<Writer>,
    index: RwLock<BTreeMap<String, (u64, u64)>>,
}

impl RunStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let path = dir.join(RUNS_FILE);
        // repairs a torn tail before indexing
        drop(RunLog::open(&path)?);
        let bytes = std::fs::read(&path)?;
        let mut index = BTreeMap::new();
        let mut offset = 0u64;
        for line in bytes.split_inclusive(|&b| b == b'\n') {
            let len = line.len() as u64;
            let text = std::str::from_utf8(line).map_err(|e| StoreError::Corrupt("?".into(), e.to_string()))?;
            if !text.trim().is_empty() {
                if let Ok(LogEntry::Run(run)) = parse_line(text) {
                    index.insert(run.run_id, (offset, len));
                }
            }
            offset += len;
        }
        let file = OpenOptions::new().append(true).open(&path)?;
        let next_seq = index.len() as u64 + 1;
        Ok(Self {
            path,
            writer: Mutex::new(Writer {
                file,
                len: offset,
                next_seq,
            }),
            index: RwLock::new(index),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("index lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reserves the next sequential run id.
    pub fn next_run_id(&self) -> String {
        let mut w = self.writer.lock().expect("writer lock");
        loop {
            let id = format!("run-{:06}", w.next_seq);
            w.next_seq += 1;
            if !self.index.read().expect("index lock").contains_key(&id) {
                return id;
            }
        }
    }

    /// Appends the run. On a failed write the file is cut back so no
    /// partial record remains.
    pub fn persist(&self, run: &CounterfactualRun) -> Result<(), StoreError> {
        let line = LogEntry::Run(run.clone()).to_line();
        let mut w = self.writer.lock().expect("writer lock");
        let offset = w.len;
        let written = w.file.write_all(line.as_bytes()).and_then(|_| w.file.flush());
        if let Err(e) = written {
            let _ = w.file.set_len(offset);
            return Err(e.into());
        }
        w.len += line.len() as u64;
        self.index
            .write()
            .expect("index lock")
            .insert(run.run_id.clone(), (offset, line.len() as u64));
        Ok(())
    }

    /// Raw stored line (without the newline) for a run id.
    pub fn get_line(&self, run_id: &str) -> Result<Option<String>, StoreError> {
        let Some((offset, len)) = self.index.read().expect("index lock").get(run_id).copied() else {
            return Ok(None);
        };
        let mut f = File::open(&self.path)?;
        f.seek(SeekFrom::Start(offset))?;
        let mut buf = vec![0u8; len as usize];
        f.read_exact(&mut buf)?;
        let s = String::from_utf8(buf).map_err(|e| StoreError::Corrupt(run_id.into(), e.to_string()))?;
        Ok(Some(s.trim_end().to_string()))
    }

    pub fn get(&self, run_id: &str) -> Result<Option<CounterfactualRun>, StoreError> {
        match self.get_line(run_id)? {
            None => Ok(None),
            Some(line) => match parse_line(&line) {
                Ok(LogEntry::Run(run)) => Ok(Some(run)),
                Ok(_) => Err(StoreError::Corrupt(run_id.into(), "not a run record".into())),
                Err(e) => Err(StoreError::Corrupt(run_id.into(), e)),
            },
        }
    }

    /// Matching runs in insertion order.
    pub fn list(&self, filter: &RunFilter) -> Result<Vec<CounterfactualRun>, StoreError> {
        let mut ids: Vec<(u64, String)> = self
            .index
            .read()
            .expect("index lock")
            .iter()
            .map(|(id, (off, _))| (*off, id.clone()))
            .collect();
        ids.sort();
        let mut out = Vec::new();
        for (_, id) in ids {
            if let Some(run) = self.get(&id)? {
                if filter.matches(&run) {
                    out.push(run);
                }
            }
        }
        Ok(out)
    }
}

fn parse_line(line: &str) -> Result<LogEntry, String> {
    LogEntry::from_line(line.trim_end())
}
