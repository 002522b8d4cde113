//! Input files and the canonical data model.
//!
//! Four delimited-text inputs feed the engine: the bus event feed, the
//! station registry, the static schedule and the hand-authored shortcut
//! estimates. Event rows that fail to parse are collected in a
//! [`ValidationReport`]; structural problems in the other files are hard
//! errors because every downstream table depends on them.

mod boardings;
mod events;
mod report;
mod schedule;
mod shortcuts;
mod stations;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boardings::{parse_boardings, parse_boardings_from, BoardingAverages};
pub use events::{parse_events, parse_events_from, write_events, RawEvent, TIMESTAMP_FORMAT};
pub use report::{Rejection, ValidationReport};
pub use schedule::{parse_schedule, parse_schedule_from, DayKind, Schedule, ScheduleEntry};
pub use shortcuts::{
    parse_shortcuts, parse_shortcuts_from, validate_shortcuts, FlaggedShortcut, ShortcutEdge,
    ShortcutValidation,
};
pub use stations::{parse_stations, parse_stations_from, Route, Station, StationRegistry};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StopId(pub String);

impl StopId {
    pub fn new(id: impl Into<String>) -> Self {
        StopId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StopId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StopId {
    fn from(s: &str) -> Self {
        StopId(s.to_string())
    }
}

/// Opaque trip key; unique only within one service date.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TripId(pub String);

impl fmt::Display for TripId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TripId {
    fn from(s: &str) -> Self {
        TripId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Incoming,
    Outgoing,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Incoming => "incoming",
            Direction::Outgoing => "outgoing",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "incoming" => Ok(Direction::Incoming),
            "outgoing" => Ok(Direction::Outgoing),
            other => Err(format!("unknown direction_id {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventType {
    Arriving,
    Departing,
}

impl EventType {
    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Arriving => "arriving",
            EventType::Departing => "departing",
        }
    }
}

impl std::str::FromStr for EventType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "arriving" => Ok(EventType::Arriving),
            "departing" => Ok(EventType::Departing),
            other => Err(format!("unknown event_type {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed delimited text in {source_name}: {source}")]
    Csv {
        source_name: String,
        #[source]
        source: csv::Error,
    },
    #[error("{source_name}: missing required column {column:?}")]
    MissingColumn { source_name: String, column: String },
    #[error("{source_name}: no accepted rows ({rejected} rejected)")]
    NoAcceptedRows {
        source_name: String,
        rejected: usize,
    },
    #[error("{source_name} line {line}: {reason}")]
    Malformed {
        source_name: String,
        line: u64,
        reason: String,
    },
    #[error("duplicate stop_id {stop_id} in direction {direction}")]
    DuplicateStop {
        stop_id: StopId,
        direction: Direction,
    },
    #[error("non-contiguous route_position in direction {direction}: expected {expected}, found {found}")]
    NonContiguousPosition {
        direction: Direction,
        expected: usize,
        found: usize,
    },
    #[error("direction {direction}: {reason}")]
    Endpoints {
        direction: Direction,
        reason: String,
    },
    #[error("{source_name} line {line}: unknown stop_id {stop_id}")]
    UnknownStop {
        source_name: String,
        line: u64,
        stop_id: StopId,
    },
    #[error("shortcut {from}->{to}: {reason}")]
    Shortcut {
        from: StopId,
        to: StopId,
        reason: String,
    },
}

/// Maps required header names to column indices.
pub(crate) fn column_indices(
    headers: &csv::StringRecord,
    required: &[&str],
    source_name: &str,
) -> Result<Vec<usize>, IngestError> {
    required
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| IngestError::MissingColumn {
                    source_name: source_name.to_string(),
                    column: (*name).to_string(),
                })
        })
        .collect()
}

pub(crate) fn open(path: &std::path::Path) -> Result<std::fs::File, IngestError> {
    std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn reader<R: std::io::Read>(rdr: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(rdr)
}

pub(crate) fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" | "" => Ok(false),
        other => Err(format!("invalid boolean {other:?}")),
    }
}
