//! Single-directory persistence: an append-only ndjson journal of
//! operations plus periodic full snapshots.
//!
//! Layout of the data directory:
//! - `snapshot.json`: the full state as of `seq`
//! - `journal.ndjson`: one `{"seq": n, "op": ...}` line per mutation after
//!   the snapshot
//!
//! A torn final journal line (crash mid-write) is ignored on recovery.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tripwise_core::analytics::{FeedbackResponse, WellbeingRecord};
use tripwise_core::providers::Reminder;
use tripwise_core::roadnet::RoadClosure;
use tripwise_core::scheduler::{EventKind, Schedule, Trip};

const SNAPSHOT: &str = "snapshot.json";
const JOURNAL: &str = "journal.ndjson";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: String,
    pub phone: String,
    pub name: String,
    pub created_at: DateTime<Utc>,
}

/// A scheduler event queued for the trip's owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    /// Position in the event stream; `?since=` compares against it.
    pub seq: u64,
    pub trip_id: String,
    pub user_id: String,
    pub created_at: DateTime<Utc>,
    #[serde(flatten)]
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reminder: Option<Reminder>,
    /// Set once the owner acknowledges the event.
    pub delivered: bool,
}

/// A stored feedback answer. `overall_rating` carries the older one-question
/// form when a client still sends it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    #[serde(flatten)]
    pub response: FeedbackResponse,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_rating: Option<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Data {
    /// Last applied operation number. Also the source of fresh ids.
    pub seq: u64,
    pub users: BTreeMap<String, User>,
    /// token → user id
    pub tokens: BTreeMap<String, String>,
    pub schedules: BTreeMap<String, Schedule>,
    pub trips: BTreeMap<String, Trip>,
    pub events: BTreeMap<u64, EventRecord>,
    /// Keyed by trip id: one answer per trip.
    pub feedback: BTreeMap<String, FeedbackRecord>,
    pub closures: Vec<RoadClosure>,
    pub wellbeing: Vec<WellbeingRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Op {
    PutUser {
        user: User,
    },
    PutToken {
        token: String,
        user_id: String,
    },
    DropToken {
        token: String,
    },
    /// Creates or replaces a schedule, adding `trips` and removing
    /// `drop_trips`.
    PutSchedule {
        schedule: Schedule,
        trips: Vec<Trip>,
        drop_trips: Vec<String>,
    },
    /// Removes a schedule with its trips that have not started.
    DropSchedule {
        id: String,
        trips: Vec<String>,
    },
    PutTrips {
        trips: Vec<Trip>,
    },
    /// One scheduler tick, applied atomically.
    Tick {
        trips: Vec<Trip>,
        events: Vec<EventRecord>,
    },
    MarkDelivered {
        seq: u64,
    },
    PutFeedback {
        feedback: FeedbackRecord,
        trip: Trip,
    },
    SetClosures {
        closures: Vec<RoadClosure>,
    },
    AddWellbeing {
        records: Vec<WellbeingRecord>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct JournalLine {
    seq: u64,
    op: Op,
}

impl Data {
    fn apply(&mut self, op: Op) {
        match op {
            Op::PutUser { user } => {
                self.users.insert(user.id.clone(), user);
            }
            Op::PutToken { token, user_id } => {
                self.tokens.insert(token, user_id);
            }
            Op::DropToken { token } => {
                self.tokens.remove(&token);
            }
            Op::PutSchedule {
                schedule,
                trips,
                drop_trips,
            } => {
                self.schedules.insert(schedule.id.clone(), schedule);
                for t in drop_trips {
                    self.trips.remove(&t);
                }
                for t in trips {
                    self.trips.insert(t.id.clone(), t);
                }
            }
            Op::DropSchedule { id, trips } => {
                self.schedules.remove(&id);
                for t in trips {
                    self.trips.remove(&t);
                }
            }
            Op::PutTrips { trips } => {
                for t in trips {
                    self.trips.insert(t.id.clone(), t);
                }
            }
            Op::Tick { trips, events } => {
                for t in trips {
                    self.trips.insert(t.id.clone(), t);
                }
                for e in events {
                    self.events.insert(e.seq, e);
                }
            }
            Op::MarkDelivered { seq } => {
                if let Some(e) = self.events.get_mut(&seq) {
                    e.delivered = true;
                }
            }
            Op::PutFeedback { feedback, trip } => {
                self.trips.insert(trip.id.clone(), trip);
                self.feedback.insert(feedback.response.trip_id.clone(), feedback);
            }
            Op::SetClosures { closures } => self.closures = closures,
            Op::AddWellbeing { records } => self.wellbeing.extend(records),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: corrupt record at line {line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub struct Store {
    dir: Option<PathBuf>,
    journal: Option<File>,
    data: Data,
    since_snapshot: u64,
    snapshot_every: u64,
}

impl Store {
    /// Volatile store for tests and one-off tools.
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            journal: None,
            data: Data::default(),
            since_snapshot: 0,
            snapshot_every: u64::MAX,
        }
    }

    /// Opens (creating if needed) a data directory and recovers its state.
    pub fn open(dir: impl AsRef<Path>, snapshot_every: u64) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let snap_path = dir.join(SNAPSHOT);
        let mut data = if snap_path.exists() {
            let text = std::fs::read_to_string(&snap_path).map_err(io_err(&snap_path))?;
            serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                path: snap_path.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })?
        } else {
            Data::default()
        };

        let journal_path = dir.join(JOURNAL);
        let mut replayed = 0;
        if journal_path.exists() {
            let file = File::open(&journal_path).map_err(io_err(&journal_path))?;
            let lines: Vec<String> = BufReader::new(file)
                .lines()
                .collect::<Result<_, _>>()
                .map_err(io_err(&journal_path))?;
            let last = lines.len();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: JournalLine = match serde_json::from_str(line) {
                    Ok(rec) => rec,
                    Err(_) if i + 1 == last => {
                        tracing::warn!(line = i + 1, "ignoring torn journal tail");
                        break;
                    }
                    Err(e) => {
                        return Err(StoreError::Corrupt {
                            path: journal_path.display().to_string(),
                            line: i + 1,
                            message: e.to_string(),
                        })
                    }
                };
                // lines at or below the snapshot were already folded in
                if rec.seq > data.seq {
                    data.apply(rec.op);
                    data.seq = rec.seq;
                    replayed += 1;
                }
            }
        }
        let mut store = Self {
            journal: None,
            dir: Some(dir),
            data,
            since_snapshot: replayed,
            snapshot_every,
        };
        // start from a clean journal so a torn tail never sits mid-file
        store.snapshot()?;
        Ok(store)
    }

    pub fn data(&self) -> &Data {
        &self.data
    }

    /// Next id number, without consuming it.
    pub fn peek_seq(&self) -> u64 {
        self.data.seq + 1
    }

    /// Journals then applies `op`, returning its sequence number.
    pub fn commit(&mut self, op: Op) -> Result<u64, StoreError> {
        let seq = self.data.seq + 1;
        if let Some(file) = &mut self.journal {
            let mut line = serde_json::to_string(&JournalLine { seq, op: op.clone() }).expect("ops serialize");
            line.push('\n');
            let path = self.dir.as_ref().expect("journal implies dir").join(JOURNAL);
            file.write_all(line.as_bytes()).map_err(io_err(&path))?;
            file.sync_data().map_err(io_err(&path))?;
        }
        self.data.apply(op);
        self.data.seq = seq;
        self.since_snapshot += 1;
        if self.since_snapshot >= self.snapshot_every {
            self.snapshot()?;
        }
        Ok(seq)
    }

    /// Writes the full state and starts an empty journal.
    pub fn snapshot(&mut self) -> Result<(), StoreError> {
        let Some(dir) = self.dir.clone() else {
            return Ok(());
        };
        let tmp = dir.join("snapshot.json.tmp");
        let text = serde_json::to_string(&self.data).expect("state serializes");
        std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
        let snap = dir.join(SNAPSHOT);
        std::fs::rename(&tmp, &snap).map_err(io_err(&snap))?;
        let journal_path = dir.join(JOURNAL);
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&journal_path)
            .map_err(io_err(&journal_path))?;
        self.journal = Some(file);
        self.since_snapshot = 0;
        Ok(())
    }

    /// Writes the analytics exports into `out`.
    pub fn export(&self, out: impl AsRef<Path>) -> Result<(), StoreError> {
        let d = &self.data;
        let mut feedback: Vec<&FeedbackRecord> = d.feedback.values().collect();
        feedback.sort_by(|a, b| {
            (a.response.submitted_at, &a.response.trip_id).cmp(&(b.response.submitted_at, &b.response.trip_id))
        });
        write_exports(
            out.as_ref(),
            d.users.values(),
            d.schedules.values(),
            d.trips.values(),
            feedback,
            d.wellbeing.iter(),
        )
    }
}

pub fn write_ndjson<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), StoreError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(&row).expect("export rows serialize");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads an ndjson file; a missing file is an empty list.
pub fn read_ndjson<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, StoreError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub const EXPORT_FILES: [&str; 5] = [
    "users.ndjson",
    "schedules.ndjson",
    "trips.ndjson",
    "feedback.ndjson",
    "wellbeing.ndjson",
];

pub fn write_exports<'a, F: Serialize>(
    out: &Path,
    users: impl IntoIterator<Item = &'a User>,
    schedules: impl IntoIterator<Item = &'a Schedule>,
    trips: impl IntoIterator<Item = &'a Trip>,
    feedback: impl IntoIterator<Item = F>,
    wellbeing: impl IntoIterator<Item = &'a WellbeingRecord>,
) -> Result<(), StoreError> {
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    write_ndjson(&out.join(EXPORT_FILES[0]), users)?;
    write_ndjson(&out.join(EXPORT_FILES[1]), schedules)?;
    write_ndjson(&out.join(EXPORT_FILES[2]), trips)?;
    write_ndjson(&out.join(EXPORT_FILES[3]), feedback)?;
    write_ndjson(&out.join(EXPORT_FILES[4]), wellbeing)
}
