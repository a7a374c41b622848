//! Append-only JSON-lines run log.
//!
//! Every line is one object with `schema_version` and a `kind` tag: `run`
//! lines carry a complete [`CounterfactualRun`], `ablation` lines carry one
//! [`AblationResult`] plus the thresholds and client provenance it was
//! produced under. A partially written last line (from a crash mid-write)
//! is dropped when the log is reopened.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use counterframe_core::engine::Provenance;
use counterframe_core::{AblationResult, ClassThresholds, CounterfactualRun};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub result: AblationResult,
    pub thresholds: ClassThresholds,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogEntry {
    Run(CounterfactualRun),
    Ablation(AblationEntry),
}

#[derive(Serialize, Deserialize)]
struct LogLine {
    schema_version: u32,
    #[serde(flatten)]
    entry: LogEntry,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl LogEntry {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(&LogLine {
            schema_version: SCHEMA_VERSION,
            entry: self.clone(),
        })
        .expect("log entries always serialize");
        s.push('\n');
        s
    }

    /// Parses one line, checking the schema version and run invariants.
    pub fn from_line(line: &str) -> Result<Self, String> {
        let l: LogLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if l.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {}", l.schema_version));
        }
        if let LogEntry::Run(run) = &l.entry {
            run.validate()?;
        }
        Ok(l.entry)
    }
}

/// Parses a log's bytes. Returns the entries and the byte length of the
/// valid prefix; a trailing line without a newline that fails to parse is
/// treated as torn and excluded.
fn parse_bytes(path: &Path, bytes: &[u8]) -> Result<(Vec<LogEntry>, usize), LogError> {
    let mut entries = Vec::new();
    let mut offset = 0;
    let mut line_no = 0;
    while offset < bytes.len() {
        line_no += 1;
        let rest = &bytes[offset..];
        let (line, next, complete) = match rest.iter().position(|&b| b == b'\n') {
            Some(i) => (&rest[..i], offset + i + 1, true),
            None => (rest, bytes.len(), false),
        };
        let text = std::str::from_utf8(line).map_err(|e| e.to_string());
        let parsed = text.and_then(|t| {
            if t.trim().is_empty() {
                Ok(None)
            } else {
                LogEntry::from_line(t).map(Some)
            }
        });
        match parsed {
            Ok(Some(e)) => entries.push(e),
            Ok(None) => {}
            Err(_) if !complete => {
                tracing::warn!(path = %path.display(), line = line_no, "dropping torn last line");
                return Ok((entries, offset));
            }
            Err(message) => {
                return Err(LogError::Corrupt {
                    path: path.to_path_buf(),
                    line: line_no,
                    message,
                })
            }
        }
        offset = next;
    }
    Ok((entries, offset))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LogError + '_ {
    move |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads every entry of a log file.
pub fn read_log(path: &Path) -> Result<Vec<LogEntry>, LogError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(parse_bytes(path, &bytes)?.0)
}

pub fn runs(entries: &[LogEntry]) -> Vec<CounterfactualRun> {
    entries
        .iter()
        .filter_map(|e| match e {
            LogEntry::Run(r) => Some(r.clone()),
            _ => None,
        })
        .collect()
}

pub fn ablation_results(entries: &[LogEntry]) -> Vec<AblationResult> {
    entries
        .iter()
        .filter_map(|e| match e {
            LogEntry::Ablation(a) => Some(a.result.clone()),
            _ => None,
        })
        .collect()
}

/// Open handle on a log for appending. Remembers which events (and, for
/// ablation, which modifications of each event) are already recorded.
pub struct RunLog {
    path: PathBuf,
    file: File,
    runs: BTreeSet<String>,
    ablations: BTreeMap<String, BTreeSet<String>>,
}

impl RunLog {
    /// Opens or creates the log, truncating a torn last line.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(&path))?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io_err(&path))?;
        let (entries, valid) = parse_bytes(&path, &bytes)?;
        if valid < bytes.len() {
            file.set_len(valid as u64).map_err(io_err(&path))?;
        }
        file.seek(SeekFrom::Start(valid as u64)).map_err(io_err(&path))?;
        if valid > 0 && bytes[valid - 1] != b'\n' {
            // last entry parsed but its newline never made it to disk
            file.write_all(b"\n").map_err(io_err(&path))?;
        }
        let mut log = Self {
            path,
            file,
            runs: BTreeSet::new(),
            ablations: BTreeMap::new(),
        };
        for e in &entries {
            log.note(e);
        }
        Ok(log)
    }

    fn note(&mut self, entry: &LogEntry) {
        match entry {
            LogEntry::Run(r) => {
                self.runs.insert(r.event_id.clone().unwrap_or_else(|| r.run_id.clone()));
            }
            LogEntry::Ablation(a) => {
                let id = a.result.event_id.clone().unwrap_or_default();
                self.ablations.entry(id).or_default().insert(a.result.modification.clone());
            }
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn has_run(&self, event_id: &str) -> bool {
        self.runs.contains(event_id)
    }

    /// Modification keys already ablated for `event_id`.
    pub fn ablated(&self, event_id: &str) -> Option<&BTreeSet<String>> {
        self.ablations.get(event_id)
    }

    /// Writes the entries as one buffer and flushes.
    pub fn append(&mut self, entries: &[LogEntry]) -> Result<(), LogError> {
        let buf: String = entries.iter().map(LogEntry::to_line).collect();
        self.file.write_all(buf.as_bytes()).map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))?;
        for e in entries {
            self.note(e);
        }
        Ok(())
    }
}
