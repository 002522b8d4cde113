use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::{
    column_indices, open, reader, Direction, EventType, IngestError, StopId, TripId,
    ValidationReport,
};

/// Canonical local timestamp encoding (ISO-8601 without offset).
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
const DATE_FORMAT: &str = "%Y-%m-%d";

/// Events after midnight still belong to the previous service date up to this hour.
const POST_MIDNIGHT_HOURS: u32 = 4;

const EVENT_COLUMNS: [&str; 6] = [
    "service_date",
    "timestamp",
    "direction_id",
    "event_type",
    "stop_id",
    "trip_id",
];

/// One arrival or departure record from the bus feed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEvent {
    pub service_date: NaiveDate,
    pub timestamp: NaiveDateTime,
    pub direction: Direction,
    pub event_type: EventType,
    pub stop_id: StopId,
    pub trip_id: TripId,
}

pub fn parse_events(path: &Path) -> Result<(Vec<RawEvent>, ValidationReport), IngestError> {
    parse_events_from(open(path)?, &path.display().to_string())
}

/// Parses an events table. Malformed rows land in the report; the call fails
/// only on structural problems or when every row was rejected.
pub fn parse_events_from<R: Read>(
    input: R,
    source_name: &str,
) -> Result<(Vec<RawEvent>, ValidationReport), IngestError> {
    let mut rdr = reader(input);
    let csv_err = |source| IngestError::Csv {
        source_name: source_name.to_string(),
        source,
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let cols = column_indices(&headers, &EVENT_COLUMNS, source_name)?;

    let mut events = Vec::new();
    let mut report = ValidationReport::default();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line());
                report.reject(line, "", e.to_string());
                continue;
            }
        };
        let line = record.position().map(|p| p.line());
        let field = |i: usize| record.get(cols[i]).unwrap_or("");
        match parse_row(field(0), field(1), field(2), field(3), field(4), field(5)) {
            Ok(ev) => {
                report.accept();
                events.push(ev);
            }
            Err(reason) => report.reject(line, record.iter().collect::<Vec<_>>().join(","), reason),
        }
    }
    if report.total > 0 && report.accepted == 0 {
        return Err(IngestError::NoAcceptedRows {
            source_name: source_name.to_string(),
            rejected: report.rejected,
        });
    }
    Ok((events, report))
}

fn parse_row(
    service_date: &str,
    timestamp: &str,
    direction: &str,
    event_type: &str,
    stop_id: &str,
    trip_id: &str,
) -> Result<RawEvent, String> {
    let service_date = NaiveDate::parse_from_str(service_date, DATE_FORMAT)
        .map_err(|e| format!("unparseable service_date {service_date:?}: {e}"))?;
    let timestamp = NaiveDateTime::parse_from_str(timestamp, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(timestamp, "%Y-%m-%d %H:%M:%S"))
        .map_err(|e| format!("unparseable timestamp {timestamp:?}: {e}"))?;
    let on_day = timestamp.date() == service_date;
    let after_midnight = service_date.succ_opt() == Some(timestamp.date())
        && timestamp.time().hour() < POST_MIDNIGHT_HOURS;
    if !on_day && !after_midnight {
        return Err(format!(
            "timestamp {timestamp} does not fall on service_date {service_date}"
        ));
    }
    if stop_id.is_empty() {
        return Err("empty stop_id".into());
    }
    if trip_id.is_empty() {
        return Err("empty trip_id".into());
    }
    Ok(RawEvent {
        service_date,
        timestamp,
        direction: direction.parse()?,
        event_type: event_type.parse()?,
        stop_id: StopId::new(stop_id),
        trip_id: TripId(trip_id.to_string()),
    })
}

/// Writes events in the canonical column order and encodings.
pub fn write_events<W: Write>(events: &[RawEvent], out: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(EVENT_COLUMNS)?;
    for ev in events {
        wtr.write_record([
            ev.service_date.format(DATE_FORMAT).to_string().as_str(),
            ev.timestamp.format(TIMESTAMP_FORMAT).to_string().as_str(),
            ev.direction.as_str(),
            ev.event_type.as_str(),
            ev.stop_id.as_str(),
            ev.trip_id.0.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
