use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{column_indices, open, reader, IngestError};
use crate::time::ScheduleTime;

const BOARDING_COLUMNS: [&str; 2] = ["scheduled_departure", "average_boardings"];

/// Average boardings per scheduled origin departure, sorted by time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoardingAverages {
    entries: Vec<(ScheduleTime, f64)>,
}

impl BoardingAverages {
    pub fn new(mut entries: Vec<(ScheduleTime, f64)>) -> Self {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        BoardingAverages { entries }
    }

    pub fn entries(&self) -> &[(ScheduleTime, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_boardings(path: &Path) -> Result<BoardingAverages, IngestError> {
    parse_boardings_from(open(path)?, &path.display().to_string())
}

pub fn parse_boardings_from<R: Read>(
    input: R,
    source_name: &str,
) -> Result<BoardingAverages, IngestError> {
    let mut rdr = reader(input);
    let csv_err = |source| IngestError::Csv {
        source_name: source_name.to_string(),
        source,
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let cols = column_indices(&headers, &BOARDING_COLUMNS, source_name)?;
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
        let time = field(0)
            .parse::<ScheduleTime>()
            .map_err(|e| malformed(e.to_string()))?;
        let avg = field(1)
            .parse::<f64>()
            .ok()
            .filter(|v| *v >= 0.0 && v.is_finite())
            .ok_or_else(|| {
                malformed(format!(
                    "average_boardings {:?} must be a nonnegative number",
                    field(1)
                ))
            })?;
        if entries.iter().any(|(t, _)| *t == time) {
            return Err(malformed(format!("duplicate scheduled_departure {time}")));
        }
        entries.push((time, avg));
    }
    Ok(BoardingAverages::new(entries))
}
