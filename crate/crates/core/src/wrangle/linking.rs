use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::WrangleError;
use crate::ingest::{Direction, EventType, RawEvent, StopId, TripId};
use crate::time::{timestamp_hour, ClockTime};

/// Longer gaps between arrival and departure are treated as breakdowns.
pub const DEFAULT_LINK_THRESHOLD_MINUTES: f64 = 30.0;

/// An arrival and the departure it was linked to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedVisit {
    pub service_date: NaiveDate,
    pub direction: Direction,
    pub trip_id: TripId,
    pub stop_id: StopId,
    pub arrival: NaiveDateTime,
    pub departure: NaiveDateTime,
    pub idle_minutes: f64,
}

impl LinkedVisit {
    pub fn arrival_clock(&self) -> ClockTime {
        ClockTime::on_service_day(self.service_date, self.arrival)
    }

    pub fn departure_clock(&self) -> ClockTime {
        ClockTime::on_service_day(self.service_date, self.departure)
    }

    pub fn arrival_hour(&self) -> u8 {
        timestamp_hour(self.arrival)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReport {
    pub arrivals: usize,
    pub departures: usize,
    pub linked: usize,
    /// Departures whose closest earlier arrival was at least the threshold away.
    pub over_threshold: usize,
    /// Departures with no strictly earlier unconsumed arrival.
    pub no_candidate: usize,
    /// Of `no_candidate`, those that had an arrival at the very same instant.
    pub same_instant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub visits: Vec<LinkedVisit>,
    pub report: LinkReport,
}

/// Pairs each departure with the latest strictly earlier arrival.
///
/// Departures are processed in time order and each arrival is consumed at
/// most once. A pair is kept only when `0 < departure - arrival < threshold`.
/// Returns `(departure_index, arrival_index)` pairs in departure order.
pub fn link_times(
    departures: &[NaiveDateTime],
    arrivals: &[NaiveDateTime],
    threshold_minutes: f64,
) -> Result<Vec<(usize, usize)>, WrangleError> {
    Ok(link_group(departures, arrivals, threshold_minutes)?.0)
}

fn link_group(
    departures: &[NaiveDateTime],
    arrivals: &[NaiveDateTime],
    threshold_minutes: f64,
) -> Result<(Vec<(usize, usize)>, LinkReport), WrangleError> {
    if !(threshold_minutes > 0.0) {
        return Err(WrangleError::InvalidThreshold(threshold_minutes));
    }
    let threshold_secs = threshold_minutes * 60.0;
    let mut dep_order: Vec<usize> = (0..departures.len()).collect();
    dep_order.sort_by_key(|&i| (departures[i], i));
    let mut arr_order: Vec<usize> = (0..arrivals.len()).collect();
    arr_order.sort_by_key(|&i| (arrivals[i], i));
    let mut consumed = vec![false; arrivals.len()];

    let mut report = LinkReport {
        arrivals: arrivals.len(),
        departures: departures.len(),
        ..LinkReport::default()
    };
    let mut pairs = Vec::new();
    for &d in &dep_order {
        let dep = departures[d];
        // latest unconsumed arrival strictly before the departure
        let candidate = arr_order
            .iter()
            .rev()
            .copied()
            .find(|&a| !consumed[a] && arrivals[a] < dep);
        match candidate {
            None => {
                report.no_candidate += 1;
                if arrivals.iter().any(|&a| a == dep) {
                    report.same_instant += 1;
                }
            }
            Some(a) => {
                let diff = (dep - arrivals[a]).num_seconds() as f64;
                if diff < threshold_secs {
                    consumed[a] = true;
                    pairs.push((d, a));
                    report.linked += 1;
                } else {
                    report.over_threshold += 1;
                }
            }
        }
    }
    Ok((pairs, report))
}

type GroupKey = (NaiveDate, Direction, TripId, StopId);

/// Links arrivals to departures within each (service date, direction, trip, stop).
pub fn link_events(
    events: &[RawEvent],
    threshold_minutes: f64,
) -> Result<LinkOutcome, WrangleError> {
    if !(threshold_minutes > 0.0) {
        return Err(WrangleError::InvalidThreshold(threshold_minutes));
    }
    let mut groups: BTreeMap<GroupKey, (Vec<NaiveDateTime>, Vec<NaiveDateTime>)> = BTreeMap::new();
    for ev in events {
        let key = (
            ev.service_date,
            ev.direction,
            ev.trip_id.clone(),
            ev.stop_id.clone(),
        );
        let entry = groups.entry(key).or_default();
        match ev.event_type {
            EventType::Departing => entry.0.push(ev.timestamp),
            EventType::Arriving => entry.1.push(ev.timestamp),
        }
    }

    let mut visits = Vec::new();
    let mut report = LinkReport::default();
    for ((service_date, direction, trip_id, stop_id), (deps, arrs)) in groups {
        let (pairs, r) = link_group(&deps, &arrs, threshold_minutes)?;
        report.arrivals += r.arrivals;
        report.departures += r.departures;
        report.linked += r.linked;
        report.over_threshold += r.over_threshold;
        report.no_candidate += r.no_candidate;
        report.same_instant += r.same_instant;
        for (d, a) in pairs {
            let (arrival, departure) = (arrs[a], deps[d]);
            visits.push(LinkedVisit {
                service_date,
                direction,
                trip_id: trip_id.clone(),
                stop_id: stop_id.clone(),
                arrival,
                departure,
                idle_minutes: (departure - arrival).num_seconds() as f64 / 60.0,
            });
        }
    }
    visits.sort_by(|a, b| {
        (
            a.service_date,
            a.direction,
            &a.trip_id,
            a.arrival,
            &a.stop_id,
            a.departure,
        )
            .cmp(&(
                b.service_date,
                b.direction,
                &b.trip_id,
                b.arrival,
                &b.stop_id,
                b.departure,
            ))
    });
    Ok(LinkOutcome { visits, report })
}
