use serde::{Deserialize, Serialize};

use super::{dense_grid, Provenance, TripRecord, WrangleError};
use crate::ingest::{Route, StopId};
use crate::stats::median;
use crate::time::HOURS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripCell {
    pub minutes: f64,
    pub provenance: Provenance,
}

/// Median running minutes for each adjacent station pair and hour of
/// departure from the first station of the pair. Pair `i` joins route
/// positions `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TripRows", try_from = "TripRows")]
pub struct TripTimeMatrix {
    stops: Vec<StopId>,
    cells: Vec<[TripCell; 24]>,
}

impl TripTimeMatrix {
    pub fn minutes(&self, from_position: usize, hour: u8) -> f64 {
        self.cells[from_position][hour as usize].minutes
    }

    pub fn cell(&self, from_position: usize, hour: u8) -> TripCell {
        self.cells[from_position][hour as usize]
    }

    pub fn pair_count(&self) -> usize {
        self.cells.len()
    }

    /// Matrix with the given per-pair minutes at every hour.
    pub fn constant(route: &Route, minutes: &[f64]) -> Self {
        assert_eq!(minutes.len() + 1, route.len());
        TripTimeMatrix {
            stops: route.stop_ids(),
            cells: minutes
                .iter()
                .map(|&m| {
                    [TripCell {
                        minutes: m,
                        provenance: Provenance::Observed,
                    }; 24]
                })
                .collect(),
        }
    }

    /// Overrides one cell; intended for building fixtures.
    pub fn with_cell(mut self, from_position: usize, hour: u8, minutes: f64) -> Self {
        assert!(minutes > 0.0);
        self.cells[from_position][hour as usize] = TripCell {
            minutes,
            provenance: Provenance::Observed,
        };
        self
    }

    pub fn rows(&self) -> Vec<TripRow> {
        TripRows::from(self.clone()).rows
    }
}

/// Builds the trip-time matrix from consecutive stops at adjacent positions.
///
/// Samples must satisfy `0 < minutes < threshold`. Hours without samples take
/// the pair's overall median; pairs without any samples copy the overall
/// median of the nearest observed pair in route order (the preceding pair on
/// a tie).
pub fn build_trip_time_matrix(
    trips: &[TripRecord],
    route: &Route,
    threshold_minutes: f64,
) -> Result<TripTimeMatrix, WrangleError> {
    if !(threshold_minutes > 0.0) {
        return Err(WrangleError::InvalidThreshold(threshold_minutes));
    }
    let pairs = route.len() - 1;
    let mut samples: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); HOURS_PER_DAY]; pairs];
    for trip in trips {
        for w in trip.visits.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.position != a.position + 1 || a.position >= pairs {
                continue;
            }
            let minutes = b.arrival - a.departure;
            if minutes > 0.0 && minutes < threshold_minutes {
                samples[a.position][a.departure.hour() as usize].push(minutes);
            }
        }
    }

    let overall: Vec<Option<f64>> = samples
        .iter()
        .map(|hours| median(&hours.iter().flatten().copied().collect::<Vec<_>>()))
        .collect();

    let mut cells = Vec::with_capacity(pairs);
    for (i, hours) in samples.iter().enumerate() {
        let row = match overall[i] {
            Some(pair_median) => {
                let mut row = [TripCell {
                    minutes: pair_median,
                    provenance: Provenance::ImputedHour,
                }; 24];
                for (h, s) in hours.iter().enumerate() {
                    if let Some(m) = median(s) {
                        row[h] = TripCell {
                            minutes: m,
                            provenance: Provenance::Observed,
                        };
                    }
                }
                row
            }
            None => {
                let donor = (0..pairs)
                    .filter(|&j| overall[j].is_some())
                    .min_by_key(|&j| (j.abs_diff(i), j))
                    .ok_or_else(|| WrangleError::NoTripTimeData {
                        from: route.stop_id(i).clone(),
                        to: route.stop_id(i + 1).clone(),
                    })?;
                [TripCell {
                    minutes: overall[donor].expect("donor observed"),
                    provenance: Provenance::ImputedPair,
                }; 24]
            }
        };
        cells.push(row);
    }
    Ok(TripTimeMatrix {
        stops: route.stop_ids(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRow {
    pub from_stop: StopId,
    pub to_stop: StopId,
    pub hour: u8,
    pub median_trip_minutes: f64,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct TripRows {
    stops: Vec<StopId>,
    rows: Vec<TripRow>,
}

impl From<TripTimeMatrix> for TripRows {
    fn from(t: TripTimeMatrix) -> Self {
        let rows = t
            .cells
            .iter()
            .enumerate()
            .flat_map(|(p, row)| {
                let (from, to) = (t.stops[p].clone(), t.stops[p + 1].clone());
                row.iter().enumerate().map(move |(h, c)| TripRow {
                    from_stop: from.clone(),
                    to_stop: to.clone(),
                    hour: h as u8,
                    median_trip_minutes: c.minutes,
                    provenance: c.provenance,
                })
            })
            .collect();
        TripRows {
            stops: t.stops,
            rows,
        }
    }
}

impl TryFrom<TripRows> for TripTimeMatrix {
    type Error = WrangleError;

    fn try_from(r: TripRows) -> Result<Self, Self::Error> {
        if r.stops.len() < 2 {
            return Err(WrangleError::BadRows("need at least two stops".into()));
        }
        let rows = r
            .rows
            .iter()
            .map(|row| {
                let idx = r
                    .stops
                    .iter()
                    .position(|s| s == &row.from_stop)
                    .filter(|&i| r.stops.get(i + 1) == Some(&row.to_stop))
                    .ok_or_else(|| {
                        WrangleError::BadRows(format!(
                            "{}->{} is not an adjacent pair",
                            row.from_stop, row.to_stop
                        ))
                    })?;
                if !(row.median_trip_minutes > 0.0) {
                    return Err(WrangleError::BadRows(format!(
                        "non-positive trip time {}->{}",
                        row.from_stop, row.to_stop
                    )));
                }
                Ok((
                    idx,
                    row.hour,
                    TripCell {
                        minutes: row.median_trip_minutes,
                        provenance: row.provenance,
                    },
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TripTimeMatrix {
            cells: dense_grid(r.stops.len() - 1, rows)?,
            stops: r.stops,
        })
    }
}
