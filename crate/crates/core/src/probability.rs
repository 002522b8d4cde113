//! Per-station, per-hour stopping probabilities and percentile skip thresholds.
//!
//! A trip *passes* every station between its first and last stopped station.
//! A pass without a stop is attributed to the hour given by the skipping-time
//! heuristic: the latest arrival among the trip's stopped stations before it,
//! or, when there are none, the earliest arrival among those after it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Route, StopId};
use crate::stats::percentile;
use crate::time::{ClockTime, HOURS_PER_DAY};
use crate::wrangle::{dense_grid, TripRecord, WrangleError};

pub const DEFAULT_PERCENTILE: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbabilityError {
    #[error("trip {0} has no stopped stations")]
    DegenerateTrip(String),
    #[error("station at position {0} was stopped at by the trip")]
    StationVisited(usize),
    #[error("no probability data for hour {0}")]
    NoDataForHour(u8),
    #[error("percentile {0} outside [0, 100]")]
    InvalidPercentile(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbCell {
    pub stopped: u32,
    pub passed: u32,
}

impl ProbCell {
    pub fn probability(self) -> Option<f64> {
        (self.passed > 0).then(|| f64::from(self.stopped) / f64::from(self.passed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ProbRows", try_from = "ProbRows")]
pub struct StopProbabilityTable {
    stops: Vec<StopId>,
    cells: Vec<[ProbCell; 24]>,
}

impl StopProbabilityTable {
    /// Table with the given per-station `(stopped, passed)` counts at every hour.
    pub fn constant(route: &Route, counts: &[(u32, u32)]) -> Self {
        assert_eq!(counts.len(), route.len());
        StopProbabilityTable {
            stops: route.stop_ids(),
            cells: counts
                .iter()
                .map(|&(stopped, passed)| {
                    assert!(stopped <= passed);
                    [ProbCell { stopped, passed }; 24]
                })
                .collect(),
        }
    }

    /// Overrides one cell; intended for building fixtures.
    pub fn with_cell(mut self, position: usize, hour: u8, stopped: u32, passed: u32) -> Self {
        assert!(stopped <= passed);
        self.cells[position][hour as usize] = ProbCell { stopped, passed };
        self
    }

    pub fn stops(&self) -> &[StopId] {
        &self.stops
    }

    pub fn cell(&self, position: usize, hour: u8) -> ProbCell {
        self.cells[position][hour as usize]
    }

    pub fn probability(&self, position: usize, hour: u8) -> Option<f64> {
        self.cell(position, hour).probability()
    }

    /// Probability with fallbacks: the cell, then the station over all hours,
    /// then 1.0 so that missing evidence never causes a skip.
    pub fn effective(&self, position: usize, hour: u8) -> f64 {
        if let Some(p) = self.probability(position, hour) {
            return p;
        }
        let total = self.cells[position]
            .iter()
            .fold(ProbCell::default(), |acc, c| ProbCell {
                stopped: acc.stopped + c.stopped,
                passed: acc.passed + c.passed,
            });
        total.probability().unwrap_or(1.0)
    }

    /// Effective probabilities of every station at `hour`, in route order.
    pub fn effective_at_hour(&self, hour: u8) -> Vec<f64> {
        (0..self.stops.len())
            .map(|p| self.effective(p, hour))
            .collect()
    }

    /// Probabilities of the cells that have data at `hour`.
    pub fn observed_at_hour(&self, hour: u8) -> Vec<f64> {
        (0..self.stops.len())
            .filter_map(|p| self.probability(p, hour))
            .collect()
    }

    pub fn rows(&self) -> Vec<ProbRow> {
        ProbRows::from(self.clone()).rows
    }
}

/// Time attributed to a station the trip did not stop at.
pub fn skipped_station_time(
    trip: &TripRecord,
    position: usize,
) -> Result<ClockTime, ProbabilityError> {
    if trip.visits.is_empty() {
        return Err(ProbabilityError::DegenerateTrip(trip.trip_id.to_string()));
    }
    if trip.visit_at(position).is_some() {
        return Err(ProbabilityError::StationVisited(position));
    }
    let preceding = trip
        .visits
        .iter()
        .filter(|v| v.position < position)
        .map(|v| v.arrival)
        .max_by(|a, b| a.minutes().total_cmp(&b.minutes()));
    if let Some(t) = preceding {
        return Ok(t);
    }
    let succeeding = trip
        .visits
        .iter()
        .filter(|v| v.position > position)
        .map(|v| v.arrival)
        .min_by(|a, b| a.minutes().total_cmp(&b.minutes()));
    succeeding.ok_or_else(|| ProbabilityError::DegenerateTrip(trip.trip_id.to_string()))
}

/// Counts stops and passes per (station, hour) over all trips on `route`.
pub fn build_probability_table(trips: &[TripRecord], route: &Route) -> StopProbabilityTable {
    let mut cells = vec![[ProbCell::default(); HOURS_PER_DAY]; route.len()];
    for trip in trips {
        let Some((first, last)) = trip.span() else {
            continue;
        };
        for position in first..=last.min(route.len() - 1) {
            let (hour, stopped) = match trip.visit_at(position) {
                Some(v) => (v.arrival.hour(), true),
                None => match skipped_station_time(trip, position) {
                    Ok(t) => (t.hour(), false),
                    Err(_) => continue,
                },
            };
            let cell = &mut cells[position][hour as usize];
            cell.passed += 1;
            cell.stopped += u32::from(stopped);
        }
    }
    StopProbabilityTable {
        stops: route.stop_ids(),
        cells,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkipThreshold {
    pub hour: u8,
    /// Stations with a stopping probability below `t` are skipped.
    pub t: f64,
    pub t_p: f64,
}

/// The `t_p`-th percentile of the observed probabilities at `hour`.
pub fn threshold_for_hour(
    table: &StopProbabilityTable,
    hour: u8,
    t_p: f64,
) -> Result<SkipThreshold, ProbabilityError> {
    check_percentile(t_p)?;
    let t = percentile(&table.observed_at_hour(hour), t_p)
        .ok_or(ProbabilityError::NoDataForHour(hour))?;
    Ok(SkipThreshold { hour, t, t_p })
}

/// Threshold over the effective (fallback-filled) probabilities of every
/// station at `hour`. Equals [`threshold_for_hour`] when every cell of that
/// hour has data, and is defined for every hour.
pub fn effective_threshold(
    table: &StopProbabilityTable,
    hour: u8,
    t_p: f64,
) -> Result<SkipThreshold, ProbabilityError> {
    check_percentile(t_p)?;
    let t = percentile(&table.effective_at_hour(hour), t_p)
        .ok_or(ProbabilityError::NoDataForHour(hour))?;
    Ok(SkipThreshold { hour, t, t_p })
}

fn check_percentile(t_p: f64) -> Result<(), ProbabilityError> {
    if (0.0..=100.0).contains(&t_p) {
        Ok(())
    } else {
        Err(ProbabilityError::InvalidPercentile(t_p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbRow {
    pub stop_id: StopId,
    pub hour: u8,
    pub stopped_count: u32,
    pub passed_count: u32,
    /// `None` marks a no-data cell.
    pub probability: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProbRows {
    stops: Vec<StopId>,
    rows: Vec<ProbRow>,
}

impl From<StopProbabilityTable> for ProbRows {
    fn from(t: StopProbabilityTable) -> Self {
        let rows = t
            .cells
            .iter()
            .enumerate()
            .flat_map(|(p, row)| {
                let stop = t.stops[p].clone();
                row.iter().enumerate().map(move |(h, c)| ProbRow {
                    stop_id: stop.clone(),
                    hour: h as u8,
                    stopped_count: c.stopped,
                    passed_count: c.passed,
                    probability: c.probability(),
                })
            })
            .collect();
        ProbRows {
            stops: t.stops,
            rows,
        }
    }
}

impl TryFrom<ProbRows> for StopProbabilityTable {
    type Error = WrangleError;

    fn try_from(r: ProbRows) -> Result<Self, Self::Error> {
        let rows = r
            .rows
            .iter()
            .map(|row| {
                let idx = r
                    .stops
                    .iter()
                    .position(|s| s == &row.stop_id)
                    .ok_or_else(|| {
                        WrangleError::BadRows(format!("unknown stop {}", row.stop_id))
                    })?;
                if row.stopped_count > row.passed_count {
                    return Err(WrangleError::BadRows(format!(
                        "stopped > passed at {}",
                        row.stop_id
                    )));
                }
                Ok((
                    idx,
                    row.hour,
                    ProbCell {
                        stopped: row.stopped_count,
                        passed: row.passed_count,
                    },
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StopProbabilityTable {
            cells: dense_grid(r.stops.len(), rows)?,
            stops: r.stops,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Direction, Station, TripId};
    use crate::wrangle::TripVisit;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn route(n: usize) -> Route {
        let stations = (0..n)
            .map(|p| Station {
                stop_id: StopId::new(((b'A' + p as u8) as char).to_string()),
                name: String::new(),
                route_position: p,
                population_density: 1.0,
                is_origin: p == 0,
                is_terminus: p == n - 1,
                direction: Direction::Outgoing,
            })
            .collect();
        Route::new(Direction::Outgoing, stations).unwrap()
    }

    /// Trip with stops at `(position, "HH:MM")`.
    fn trip(id: &str, stops: &[(usize, &str)]) -> TripRecord {
        TripRecord {
            service_date: NaiveDate::from_ymd_opt(2019, 10, 4).unwrap(),
            trip_id: TripId::from(id),
            visits: stops
                .iter()
                .map(|&(position, hm)| {
                    let t: ClockTime = hm.parse().unwrap();
                    TripVisit {
                        position,
                        arrival: t,
                        departure: t + 0.5,
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn skip_time_takes_latest_preceding() {
        let t = trip("T", &[(0, "09:00"), (2, "09:10")]);
        assert_eq!(
            skipped_station_time(&t, 1).unwrap(),
            "09:00".parse().unwrap()
        );
        let t = trip("T", &[(0, "09:00"), (1, "09:03"), (4, "09:15")]);
        assert_eq!(
            skipped_station_time(&t, 3).unwrap(),
            "09:03".parse().unwrap()
        );
    }

    #[test]
    fn skip_time_without_preceding_stop() {
        let t = trip("T", &[(2, "09:10")]);
        assert_eq!(
            skipped_station_time(&t, 0).unwrap(),
            "09:10".parse().unwrap()
        );
    }

    #[test]
    fn skip_time_errors() {
        let t = trip("T", &[]);
        assert!(matches!(
            skipped_station_time(&t, 0),
            Err(ProbabilityError::DegenerateTrip(_))
        ));
        let t = trip("T", &[(0, "09:00")]);
        assert_eq!(
            skipped_station_time(&t, 0),
            Err(ProbabilityError::StationVisited(0))
        );
    }

    #[test]
    fn always_stopped_is_one() {
        let trips: Vec<_> = (0..10)
            .map(|i| trip(&i.to_string(), &[(0, "09:00"), (1, "09:05")]))
            .collect();
        let table = build_probability_table(&trips, &route(2));
        assert_eq!(
            table.cell(1, 9),
            ProbCell {
                stopped: 10,
                passed: 10
            }
        );
        assert_eq!(table.probability(1, 9), Some(1.0));
    }

    #[test]
    fn three_stops_one_skip() {
        let mut trips: Vec<_> = (0..3)
            .map(|i| trip(&i.to_string(), &[(0, "09:00"), (1, "09:05"), (2, "09:09")]))
            .collect();
        trips.push(trip("s", &[(0, "09:20"), (2, "09:29")]));
        let table = build_probability_table(&trips, &route(3));
        assert_eq!(table.probability(1, 9), Some(0.75));
    }

    #[test]
    fn skip_attributed_to_preceding_stop_hour() {
        let trips = [trip("T", &[(0, "09:50"), (1, "09:58"), (3, "10:04")])];
        let table = build_probability_table(&trips, &route(4));
        assert_eq!(
            table.cell(2, 9),
            ProbCell {
                stopped: 0,
                passed: 1
            }
        );
        assert_eq!(table.cell(2, 10), ProbCell::default());
        assert_eq!(table.probability(2, 10), None);
    }

    #[test]
    fn stations_outside_span_not_counted() {
        let trips = [trip("T", &[(1, "09:00"), (2, "09:05")])];
        let table = build_probability_table(&trips, &route(4));
        assert_eq!(table.cell(0, 9).passed, 0);
        assert_eq!(table.cell(3, 9).passed, 0);
    }

    #[test]
    fn fallbacks() {
        let r = route(2);
        let table = StopProbabilityTable::constant(&r, &[(0, 0), (0, 0)]).with_cell(0, 7, 1, 4);
        assert_eq!(table.effective(0, 7), 0.25);
        assert_eq!(table.effective(0, 12), 0.25);
        assert_eq!(table.effective(1, 12), 1.0);
    }

    #[test]
    fn thresholds() {
        let r = route(4);
        let table = StopProbabilityTable::constant(&r, &[(2, 10), (4, 10), (6, 10), (8, 10)]);
        assert_eq!(threshold_for_hour(&table, 9, 0.0).unwrap().t, 0.2);
        let table3 = StopProbabilityTable::constant(&route(3), &[(1, 10), (5, 10), (9, 10)]);
        assert_eq!(threshold_for_hour(&table3, 9, 50.0).unwrap().t, 0.5);
        let flat = StopProbabilityTable::constant(&r, &[(1, 2), (2, 4), (3, 6), (5, 10)]);
        for tp in [0.0, 13.0, 25.0, 99.0, 100.0] {
            assert_eq!(threshold_for_hour(&flat, 3, tp).unwrap().t, 0.5);
        }
        let empty = StopProbabilityTable::constant(&r, &[(0, 0); 4]);
        assert_eq!(
            threshold_for_hour(&empty, 3, 25.0),
            Err(ProbabilityError::NoDataForHour(3))
        );
        assert_eq!(effective_threshold(&empty, 3, 25.0).unwrap().t, 1.0);
        assert!(matches!(
            threshold_for_hour(&table, 3, 101.0),
            Err(ProbabilityError::InvalidPercentile(_))
        ));
    }

    #[test]
    fn rows_round_trip() {
        let table = build_probability_table(&[trip("T", &[(0, "09:00"), (2, "09:10")])], &route(3));
        let back: StopProbabilityTable =
            serde_json::from_str(&serde_json::to_string(&table).unwrap()).unwrap();
        assert_eq!(back, table);
    }

    fn arb_trip(n: usize) -> impl Strategy<Value = TripRecord> {
        (
            prop::collection::vec(any::<bool>(), n),
            300u32..1300,
            prop::collection::vec(1u32..8, n),
        )
            .prop_map(move |(mask, start, gaps)| {
                let mut clock = f64::from(start);
                let mut visits = Vec::new();
                for p in 0..n {
                    clock += f64::from(gaps[p]);
                    if mask[p] {
                        visits.push(TripVisit {
                            position: p,
                            arrival: ClockTime::from_minutes(clock),
                            departure: ClockTime::from_minutes(clock + 0.5),
                        });
                    }
                }
                TripRecord {
                    service_date: NaiveDate::from_ymd_opt(2019, 10, 4).unwrap(),
                    trip_id: TripId::from("T"),
                    visits,
                }
            })
    }

    proptest! {
        #[test]
        fn counts_are_order_independent(mut trips in prop::collection::vec(arb_trip(6), 1..25), k in 0usize..25) {
            let r = route(6);
            let before = build_probability_table(&trips, &r);
            let k = k % trips.len();
            trips.rotate_left(k);
            trips.reverse();
            prop_assert_eq!(build_probability_table(&trips, &r), before.clone());
            for p in 0..6 {
                for h in 0..24u8 {
                    let c = before.cell(p, h);
                    prop_assert!(c.stopped <= c.passed);
                    if let Some(x) = c.probability() {
                        prop_assert!((0.0..=1.0).contains(&x));
                    }
                }
            }
        }

        #[test]
        fn threshold_monotone_in_percentile(trips in prop::collection::vec(arb_trip(6), 1..25), a in 0.0f64..=100.0, b in 0.0f64..=100.0) {
            let table = build_probability_table(&trips, &route(6));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for h in 0..24u8 {
                if let (Ok(x), Ok(y)) = (threshold_for_hour(&table, h, lo), threshold_for_hour(&table, h, hi)) {
                    prop_assert!(x.t <= y.t + 1e-15);
                }
            }
        }

        #[test]
        fn extra_stop_never_lowers_probability(stopped in 0u32..50, extra in 0u32..50) {
            let passed = stopped + extra;
            prop_assume!(passed > 0);
            let base = ProbCell { stopped, passed }.probability().unwrap();
            let more = ProbCell { stopped: stopped + 1, passed: passed + 1 }.probability().unwrap();
            let skip = ProbCell { stopped, passed: passed + 1 }.probability().unwrap();
            prop_assert!(more >= base);
            prop_assert!(skip <= base);
        }
    }
}
