use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::{column_indices, open, reader, IngestError, StationRegistry, StopId};
use crate::time::ScheduleTime;

const SCHEDULE_COLUMNS: [&str; 3] = ["stop_id", "scheduled_departure", "day_kind"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayKind {
    Weekday,
    Saturday,
    Sunday,
}

impl DayKind {
    pub fn of(date: NaiveDate) -> Self {
        match date.weekday() {
            Weekday::Sat => DayKind::Saturday,
            Weekday::Sun => DayKind::Sunday,
            _ => DayKind::Weekday,
        }
    }
}

impl std::str::FromStr for DayKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "weekday" => Ok(DayKind::Weekday),
            "saturday" => Ok(DayKind::Saturday),
            "sunday" => Ok(DayKind::Sunday),
            other => Err(format!("unknown day_kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub stop_id: StopId,
    pub scheduled_departure: ScheduleTime,
    pub day_kind: DayKind,
}

/// Schedule entries grouped by day kind, each group sorted by (stop, time).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    by_day: BTreeMap<DayKind, Vec<ScheduleEntry>>,
}

impl Schedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Self {
        let mut by_day: BTreeMap<DayKind, Vec<ScheduleEntry>> = BTreeMap::new();
        for e in entries {
            by_day.entry(e.day_kind).or_default().push(e);
        }
        for list in by_day.values_mut() {
            list.sort_by(|a, b| {
                (&a.stop_id, a.scheduled_departure).cmp(&(&b.stop_id, b.scheduled_departure))
            });
        }
        Schedule { by_day }
    }

    pub fn entries(&self, day: DayKind) -> &[ScheduleEntry] {
        self.by_day.get(&day).map_or(&[], Vec::as_slice)
    }

    /// Scheduled departures of one stop on one day kind, ascending.
    pub fn departures_at(&self, day: DayKind, stop: &StopId) -> Vec<ScheduleTime> {
        self.entries(day)
            .iter()
            .filter(|e| &e.stop_id == stop)
            .map(|e| e.scheduled_departure)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.by_day.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn parse_schedule(path: &Path, registry: &StationRegistry) -> Result<Schedule, IngestError> {
    parse_schedule_from(open(path)?, &path.display().to_string(), registry)
}

pub fn parse_schedule_from<R: Read>(
    input: R,
    source_name: &str,
    registry: &StationRegistry,
) -> Result<Schedule, IngestError> {
    let mut rdr = reader(input);
    let csv_err = |source| IngestError::Csv {
        source_name: source_name.to_string(),
        source,
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let cols = column_indices(&headers, &SCHEDULE_COLUMNS, source_name)?;
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(cols[i]).unwrap_or("");
        let malformed = |reason: String| IngestError::Malformed {
            source_name: source_name.to_string(),
            line,
            reason,
        };
        let stop_id = StopId::new(field(0));
        if !registry.contains(&stop_id) {
            return Err(IngestError::UnknownStop {
                source_name: source_name.to_string(),
                line,
                stop_id,
            });
        }
        let scheduled_departure = field(1)
            .parse::<ScheduleTime>()
            .map_err(|e| malformed(e.to_string()))?;
        let day_kind = field(2).parse().map_err(malformed)?;
        entries.push(ScheduleEntry {
            stop_id,
            scheduled_departure,
            day_kind,
        });
    }
    Ok(Schedule::new(entries))
}
