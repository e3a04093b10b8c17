//! Data directory layout:
//!
//! - `config.json`: users, tokens, assignments (see [`crate::config`])
//! - `corpus.cupt`: the sentences to annotate, read once at startup
//! - `events.jsonl`: append-only event log, one [`EventRecord`] per line
//! - `snapshot.cupt`: current gold corpus, rewritten after each gold change

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use mwekit_core::cupt::{read_cupt, to_cupt_string};
use mwekit_core::Corpus;
use thiserror::Error;

use crate::config::{ConfigError, ServiceConfig};
use crate::state::{EventRecord, State};

pub const CONFIG_FILE: &str = "config.json";
pub const CORPUS_FILE: &str = "corpus.cupt";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.cupt";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
    #[error("{path}:{line}: {reason}")]
    BadEvent { path: PathBuf, line: usize, reason: String },
    #[error("config.json: {0}")]
    Config(#[from] ConfigError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    log: File,
}

impl Store {
    /// Loads config and corpus, replays the event log, and refreshes the snapshot.
    pub fn open(dir: &Path) -> Result<(Store, State), StoreError> {
        let cfg_path = dir.join(CONFIG_FILE);
        let text = fs::read_to_string(&cfg_path).map_err(io_err(&cfg_path))?;
        let config: ServiceConfig = serde_json::from_str(&text).map_err(|e| StoreError::Invalid {
            path: cfg_path.clone(),
            reason: e.to_string(),
        })?;

        let corpus_path = dir.join(CORPUS_FILE);
        let f = File::open(&corpus_path).map_err(io_err(&corpus_path))?;
        let corpus = read_cupt(BufReader::new(f)).map_err(|e| StoreError::Invalid {
            path: corpus_path.clone(),
            reason: e.to_string(),
        })?;
        config.validate(&corpus)?;

        let events_path = dir.join(EVENTS_FILE);
        let mut state = State::new(config, corpus);
        if events_path.exists() {
            for record in read_events(&events_path)? {
                state.apply(&record).map_err(|e| StoreError::Invalid {
                    path: events_path.clone(),
                    reason: format!("event {} cannot be applied: {e}", record.seq),
                })?;
            }
        }
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&events_path)
            .map_err(io_err(&events_path))?;
        let store = Store {
            dir: dir.to_path_buf(),
            log,
        };
        store.write_snapshot(state.corpus())?;
        Ok((store, state))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append(&mut self, record: &EventRecord) -> Result<(), StoreError> {
        let path = self.dir.join(EVENTS_FILE);
        let mut line = serde_json::to_string(record).expect("events serialize");
        line.push('\n');
        self.log.write_all(line.as_bytes()).map_err(io_err(&path))?;
        self.log.sync_data().map_err(io_err(&path))
    }

    /// Writes to a temporary file and renames it over the snapshot.
    pub fn write_snapshot(&self, corpus: &Corpus) -> Result<(), StoreError> {
        let path = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        fs::write(&tmp, to_cupt_string(corpus)).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}

pub fn read_events(path: &Path) -> Result<Vec<EventRecord>, StoreError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    let mut last_seq = 0;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| StoreError::BadEvent {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let record: EventRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if record.seq != last_seq + 1 {
            return Err(bad(format!("expected seq {}, found {}", last_seq + 1, record.seq)));
        }
        last_seq = record.seq;
        out.push(record);
    }
    Ok(out)
}
