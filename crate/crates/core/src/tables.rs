//! The hourly tables bundle and its construction from raw events.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{RawEvent, Route, Schedule, StopId};
use crate::probability::{build_probability_table, StopProbabilityTable};
use crate::wrangle::{
    build_idle_table, build_trip_time_matrix, compute_lateness, group_trips, link_events,
    IdleTimeTable, LatenessOutcome, LinkReport, TripRecord, TripTimeMatrix, WrangleError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("{table} covers stops {found:?}, route has {expected:?}")]
    RouteMismatch {
        table: &'static str,
        expected: Vec<StopId>,
        found: Vec<StopId>,
    },
    #[error(transparent)]
    Wrangle(#[from] WrangleError),
}

/// Everything the router reads: the route plus the three hourly tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TablesRepr", into = "TablesRepr")]
pub struct HourlyTables {
    route: Route,
    idle: IdleTimeTable,
    trip_times: TripTimeMatrix,
    probabilities: StopProbabilityTable,
}

impl HourlyTables {
    pub fn new(
        route: Route,
        idle: IdleTimeTable,
        trip_times: TripTimeMatrix,
        probabilities: StopProbabilityTable,
    ) -> Result<Self, TableError> {
        let expected = route.stop_ids();
        let check = |table: &'static str, found: &[StopId]| {
            if found == expected.as_slice() {
                Ok(())
            } else {
                Err(TableError::RouteMismatch {
                    table,
                    expected: expected.clone(),
                    found: found.to_vec(),
                })
            }
        };
        check("idle_time", idle.stops())?;
        check("stop_probability", probabilities.stops())?;
        if trip_times.pair_count() + 1 != route.len() {
            return Err(TableError::RouteMismatch {
                table: "trip_time",
                expected,
                found: Vec::new(),
            });
        }
        Ok(HourlyTables {
            route,
            idle,
            trip_times,
            probabilities,
        })
    }

    pub fn route(&self) -> &Route {
        &self.route
    }

    pub fn idle(&self) -> &IdleTimeTable {
        &self.idle
    }

    pub fn trip_times(&self) -> &TripTimeMatrix {
        &self.trip_times
    }

    pub fn probabilities(&self) -> &StopProbabilityTable {
        &self.probabilities
    }
}

#[derive(Serialize, Deserialize)]
struct TablesRepr {
    route: Route,
    idle_time: IdleTimeTable,
    trip_time: TripTimeMatrix,
    stop_probability: StopProbabilityTable,
}

impl From<HourlyTables> for TablesRepr {
    fn from(t: HourlyTables) -> Self {
        TablesRepr {
            route: t.route,
            idle_time: t.idle,
            trip_time: t.trip_times,
            stop_probability: t.probabilities,
        }
    }
}

impl TryFrom<TablesRepr> for HourlyTables {
    type Error = TableError;

    fn try_from(r: TablesRepr) -> Result<Self, Self::Error> {
        HourlyTables::new(r.route, r.idle_time, r.trip_time, r.stop_probability)
    }
}

/// Intermediate products of a table build, kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableBuild {
    pub tables: HourlyTables,
    pub link_report: LinkReport,
    pub trips: Vec<TripRecord>,
    /// Linked visits dropped because they were off the route or duplicated.
    pub visits_off_route: usize,
    pub lateness: LatenessOutcome,
}

/// Links events and builds every hourly table for `route`.
pub fn build_tables(
    events: &[RawEvent],
    route: &Route,
    schedule: &Schedule,
    threshold_minutes: f64,
) -> Result<TableBuild, TableError> {
    let linked = link_events(events, threshold_minutes)?;
    let on_route: Vec<_> = linked
        .visits
        .iter()
        .filter(|v| v.direction == route.direction())
        .cloned()
        .collect();
    let (trips, visits_off_route) = group_trips(&on_route, route);
    let idle = build_idle_table(&on_route, route)?;
    let trip_times = build_trip_time_matrix(&trips, route, threshold_minutes)?;
    let probabilities = build_probability_table(&trips, route);
    let lateness = compute_lateness(&on_route, schedule, threshold_minutes)?;
    Ok(TableBuild {
        tables: HourlyTables::new(route.clone(), idle, trip_times, probabilities)?,
        link_report: linked.report,
        trips,
        visits_off_route,
        lateness,
    })
}
