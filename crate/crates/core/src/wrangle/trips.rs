use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::LinkedVisit;
use crate::ingest::{Route, TripId};
use crate::time::ClockTime;

/// A stop the bus actually made, located on the route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripVisit {
    pub position: usize,
    pub arrival: ClockTime,
    pub departure: ClockTime,
}

/// The stopped stations of one trip in route order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub service_date: NaiveDate,
    pub trip_id: TripId,
    pub visits: Vec<TripVisit>,
}

impl TripRecord {
    /// First and last visited route positions (inclusive).
    pub fn span(&self) -> Option<(usize, usize)> {
        Some((self.visits.first()?.position, self.visits.last()?.position))
    }

    pub fn visit_at(&self, position: usize) -> Option<&TripVisit> {
        self.visits
            .binary_search_by_key(&position, |v| v.position)
            .ok()
            .map(|i| &self.visits[i])
    }
}

/// Groups linked visits on `route` into trips. Visits off the route or in the
/// other direction are skipped; a repeated station keeps its earliest arrival.
/// Returns the trips (ordered by date, trip id) and the number of skipped visits.
pub fn group_trips(visits: &[LinkedVisit], route: &Route) -> (Vec<TripRecord>, usize) {
    let mut skipped = 0;
    let mut trips: BTreeMap<(NaiveDate, TripId), BTreeMap<usize, TripVisit>> = BTreeMap::new();
    for v in visits {
        let position = match route.position_of(&v.stop_id) {
            Some(p) if v.direction == route.direction() => p,
            _ => {
                skipped += 1;
                continue;
            }
        };
        let visit = TripVisit {
            position,
            arrival: v.arrival_clock(),
            departure: v.departure_clock(),
        };
        let stops = trips
            .entry((v.service_date, v.trip_id.clone()))
            .or_default();
        match stops.get(&position) {
            Some(existing) if existing.arrival <= visit.arrival => skipped += 1,
            Some(_) => {
                skipped += 1;
                stops.insert(position, visit);
            }
            None => {
                stops.insert(position, visit);
            }
        }
    }
    let trips = trips
        .into_iter()
        .map(|((service_date, trip_id), stops)| TripRecord {
            service_date,
            trip_id,
            visits: stops.into_values().collect(),
        })
        .collect();
    (trips, skipped)
}
