#![allow(dead_code)]

use std::collections::BTreeMap;

use busroute_core::ingest::{BoardingAverages, Direction, Route, ShortcutEdge, Station, StopId};
use busroute_core::probability::StopProbabilityTable;
use busroute_core::wrangle::{IdleTimeTable, TripTimeMatrix};
use busroute_core::{HourlyTables, ScheduleTime};

pub fn stop(p: usize) -> StopId {
    StopId::new(format!("S{p}"))
}

pub fn route(densities: &[f64]) -> Route {
    let n = densities.len();
    let stations = densities
        .iter()
        .enumerate()
        .map(|(p, &d)| Station {
            stop_id: stop(p),
            name: format!("Station {p}"),
            route_position: p,
            population_density: d,
            is_origin: p == 0,
            is_terminus: p + 1 == n,
            direction: Direction::Outgoing,
        })
        .collect();
    Route::new(Direction::Outgoing, stations).unwrap()
}

/// Hour-independent tables. `probs` are `(stopped, passed)` counts.
pub fn flat_tables(
    densities: &[f64],
    idle: &[f64],
    trips: &[f64],
    probs: &[(u32, u32)],
) -> HourlyTables {
    let r = route(densities);
    HourlyTables::new(
        r.clone(),
        IdleTimeTable::constant(&r, idle),
        TripTimeMatrix::constant(&r, trips),
        StopProbabilityTable::constant(&r, probs),
    )
    .unwrap()
}

pub fn shortcut(from: usize, to: usize, estimates: &[(u8, f64)]) -> ShortcutEdge {
    ShortcutEdge {
        direction: Direction::Outgoing,
        from_stop: stop(from),
        to_stop: stop(to),
        bypassed_stops: (from + 1..to).map(stop).collect(),
        estimated_minutes_per_hour: estimates.iter().copied().collect::<BTreeMap<_, _>>(),
    }
}

pub fn all_hours(minutes: f64) -> Vec<(u8, f64)> {
    (0..24).map(|h| (h, minutes)).collect()
}

pub fn boardings(entries: &[(&str, f64)]) -> BoardingAverages {
    BoardingAverages::new(
        entries
            .iter()
            .map(|(t, a)| (t.parse::<ScheduleTime>().unwrap(), *a))
            .collect(),
    )
}
