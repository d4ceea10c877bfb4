//! File-backed persistence: an append-only JSONL event journal plus a
//! periodic snapshot that lets the journal be truncated.
//!
//! Journal lines are flushed to the OS on every append, which survives a
//! process crash. Snapshots are fsynced and swapped in by rename.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::state::{Event, ManagerState};
use crate::ManagerError;

const JOURNAL: &str = "journal.jsonl";
const SNAPSHOT: &str = "snapshot.json";

#[derive(Serialize, Deserialize)]
struct Entry {
    seq: u64,
    event: Event,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    state: ManagerState,
}

pub struct Journal {
    dir: PathBuf,
    file: File,
    seq: u64,
    since_snapshot: u64,
    snapshot_every: u64,
}

impl Journal {
    /// Opens (or creates) the store in `dir` and rebuilds the state it
    /// describes.
    pub fn open(dir: &Path, snapshot_every: u64) -> Result<(Self, ManagerState), ManagerError> {
        fs::create_dir_all(dir)?;
        let (mut state, mut seq) = match fs::read(dir.join(SNAPSHOT)) {
            Ok(bytes) => {
                let snap: Snapshot = serde_json::from_slice(&bytes)
                    .map_err(|e| ManagerError::Storage(format!("snapshot unreadable: {e}")))?;
                (snap.state, snap.seq)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (ManagerState::default(), 0),
            Err(e) => return Err(e.into()),
        };
        let journal_path = dir.join(JOURNAL);
        let mut replayed = 0;
        if journal_path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(&journal_path)?).lines().collect::<Result<_, _>>()?;
            let last = lines.len().saturating_sub(1);
            for (n, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: Entry = match serde_json::from_str(line) {
                    Ok(e) => e,
                    // a torn final line is the signature of a crash mid-append
                    Err(e) if n == last => {
                        log::warn!("ignoring incomplete journal tail: {e}");
                        break;
                    }
                    Err(e) => return Err(ManagerError::Storage(format!("journal line {}: {e}", n + 1))),
                };
                if entry.seq <= seq {
                    continue;
                }
                state.apply(&entry.event);
                seq = entry.seq;
                replayed += 1;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&journal_path)?;
        let journal = Self {
            dir: dir.to_path_buf(),
            file,
            seq,
            since_snapshot: replayed,
            snapshot_every: snapshot_every.max(1),
        };
        Ok((journal, state))
    }

    /// Persists `event`. The caller applies it to its in-memory state
    /// afterwards and passes that state for occasional snapshotting.
    pub fn append(&mut self, event: &Event) -> Result<(), ManagerError> {
        let entry = Entry {
            seq: self.seq + 1,
            event: event.clone(),
        };
        let mut line = serde_json::to_vec(&entry).expect("events serialize");
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()?;
        self.seq += 1;
        self.since_snapshot += 1;
        Ok(())
    }

    pub fn maybe_snapshot(&mut self, state: &ManagerState) -> Result<(), ManagerError> {
        if self.since_snapshot >= self.snapshot_every {
            self.snapshot(state)?;
        }
        Ok(())
    }

    pub fn snapshot(&mut self, state: &ManagerState) -> Result<(), ManagerError> {
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            serde_json::to_writer(&mut f, &Snapshot { seq: self.seq, state: state.clone() })
                .map_err(|e| ManagerError::Storage(e.to_string()))?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(SNAPSHOT))?;
        // entries up to `seq` are now redundant
        self.file = File::create(self.dir.join(JOURNAL))?;
        self.file = OpenOptions::new().append(true).open(self.dir.join(JOURNAL))?;
        self.since_snapshot = 0;
        Ok(())
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }
}
