use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{LinkedVisit, WrangleError};
use crate::ingest::{DayKind, Schedule, StopId, TripId, ValidationReport};
use crate::time::ScheduleTime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatenessRecord {
    pub service_date: NaiveDate,
    pub trip_id: TripId,
    pub stop_id: StopId,
    pub scheduled_departure: ScheduleTime,
    pub actual_departure: NaiveDateTime,
    /// Actual minus scheduled; negative means the bus left early.
    pub lateness_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatenessOutcome {
    pub records: Vec<LatenessRecord>,
    pub report: ValidationReport,
}

/// Matches each actual departure to the nearest scheduled departure of its
/// stop on the same day kind. Matches at or beyond the threshold, and stops
/// without any schedule, are reported and skipped. Equidistant candidates
/// resolve to the earlier scheduled time.
pub fn compute_lateness(
    visits: &[LinkedVisit],
    schedule: &Schedule,
    threshold_minutes: f64,
) -> Result<LatenessOutcome, WrangleError> {
    if !(threshold_minutes > 0.0) {
        return Err(WrangleError::InvalidThreshold(threshold_minutes));
    }
    let mut records = Vec::new();
    let mut report = ValidationReport::default();
    for v in visits {
        let label = format!("{} {} {}", v.service_date, v.trip_id, v.stop_id);
        let day = DayKind::of(v.service_date);
        let candidates = schedule.departures_at(day, &v.stop_id);
        if candidates.is_empty() {
            report.reject(
                None,
                label,
                format!("no {day:?} schedule for stop {}", v.stop_id),
            );
            continue;
        }
        let actual = v.departure_clock();
        let best = candidates
            .iter()
            .map(|&s| (s, actual - s.clock()))
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(a.0.cmp(&b.0)))
            .expect("nonempty");
        if best.1.abs() >= threshold_minutes {
            report.reject(
                None,
                label,
                format!(
                    "nearest scheduled departure {} is {:.1} min away",
                    best.0, best.1
                ),
            );
            continue;
        }
        report.accept();
        records.push(LatenessRecord {
            service_date: v.service_date,
            trip_id: v.trip_id.clone(),
            stop_id: v.stop_id.clone(),
            scheduled_departure: best.0,
            actual_departure: v.departure,
            lateness_minutes: best.1,
        });
    }
    Ok(LatenessOutcome { records, report })
}
