//! Event linking and the hourly idle-time / trip-time tables.

mod idle;
mod lateness;
mod linking;
mod trip_time;
mod trips;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::StopId;

pub use idle::{build_idle_table, IdleCell, IdleTimeTable};
pub use lateness::{compute_lateness, LatenessOutcome, LatenessRecord};
pub use linking::{
    link_events, link_times, LinkOutcome, LinkReport, LinkedVisit, DEFAULT_LINK_THRESHOLD_MINUTES,
};
pub use trip_time::{build_trip_time_matrix, TripCell, TripTimeMatrix};
pub use trips::{group_trips, TripRecord, TripVisit};

/// Where a table cell's value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Observed,
    /// Filled from the same station (or pair) over all hours.
    ImputedHour,
    /// Filled from the nearest observed station pair.
    ImputedPair,
    /// Filled from the median over every station.
    ImputedGlobal,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Observed => "observed",
            Provenance::ImputedHour => "imputed_hour",
            Provenance::ImputedPair => "imputed_pair",
            Provenance::ImputedGlobal => "imputed_global",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WrangleError {
    #[error("linking threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("no linked visits")]
    NoLinkedVisits,
    #[error("station pair {from}->{to} has no trip-time data and no similar pair to impute from")]
    NoTripTimeData { from: StopId, to: StopId },
    #[error("table rows incomplete or inconsistent: {0}")]
    BadRows(String),
}

/// Rebuilds a dense `[cell; 24]` grid from row form, requiring every cell once.
pub(crate) fn dense_grid<T: Copy>(
    n: usize,
    rows: impl IntoIterator<Item = (usize, u8, T)>,
) -> Result<Vec<[T; 24]>, WrangleError> {
    let mut grid: Vec<[Option<T>; 24]> = vec![[None; 24]; n];
    for (idx, hour, cell) in rows {
        let slot = grid
            .get_mut(idx)
            .and_then(|r| r.get_mut(hour as usize))
            .ok_or_else(|| WrangleError::BadRows(format!("cell ({idx}, {hour}) out of range")))?;
        if slot.replace(cell).is_some() {
            return Err(WrangleError::BadRows(format!(
                "duplicate cell ({idx}, {hour})"
            )));
        }
    }
    grid.into_iter()
        .enumerate()
        .map(|(idx, row)| {
            let mut out = [row[0].ok_or_else(|| missing(idx, 0))?; 24];
            for (h, c) in row.iter().enumerate() {
                out[h] = c.ok_or_else(|| missing(idx, h))?;
            }
            Ok(out)
        })
        .collect()
}

fn missing(idx: usize, hour: usize) -> WrangleError {
    WrangleError::BadRows(format!("missing cell ({idx}, {hour})"))
}
