use serde::{Deserialize, Serialize};

use super::{dense_grid, LinkedVisit, Provenance, WrangleError};
use crate::ingest::{Route, StopId};
use crate::stats::median;
use crate::time::HOURS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdleCell {
    pub minutes: f64,
    pub provenance: Provenance,
}

/// Median dwell minutes per (station, hour of arrival); total over the route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "IdleRows", try_from = "IdleRows")]
pub struct IdleTimeTable {
    stops: Vec<StopId>,
    cells: Vec<[IdleCell; 24]>,
}

impl IdleTimeTable {
    pub fn minutes(&self, position: usize, hour: u8) -> f64 {
        self.cells[position][hour as usize].minutes
    }

    pub fn cell(&self, position: usize, hour: u8) -> IdleCell {
        self.cells[position][hour as usize]
    }

    pub fn stops(&self) -> &[StopId] {
        &self.stops
    }

    /// Table with the given per-station dwell at every hour.
    pub fn constant(route: &Route, minutes: &[f64]) -> Self {
        assert_eq!(minutes.len(), route.len());
        IdleTimeTable {
            stops: route.stop_ids(),
            cells: minutes
                .iter()
                .map(|&m| {
                    [IdleCell {
                        minutes: m,
                        provenance: Provenance::Observed,
                    }; 24]
                })
                .collect(),
        }
    }

    /// Overrides one cell; intended for building fixtures.
    pub fn with_cell(mut self, position: usize, hour: u8, minutes: f64) -> Self {
        self.cells[position][hour as usize] = IdleCell {
            minutes,
            provenance: Provenance::Observed,
        };
        self
    }

    pub fn rows(&self) -> Vec<IdleRow> {
        IdleRows::from(self.clone()).rows
    }
}

/// Builds the idle table from visits on `route`. Hours without visits take
/// the station's all-hours median; stations without visits take the median
/// over all visits.
pub fn build_idle_table(
    visits: &[LinkedVisit],
    route: &Route,
) -> Result<IdleTimeTable, WrangleError> {
    let n = route.len();
    let mut samples: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); HOURS_PER_DAY]; n];
    let mut all = Vec::new();
    for v in visits {
        if v.direction != route.direction() {
            continue;
        }
        if let Some(p) = route.position_of(&v.stop_id) {
            samples[p][v.arrival_hour() as usize].push(v.idle_minutes);
            all.push(v.idle_minutes);
        }
    }
    let global = median(&all).ok_or(WrangleError::NoLinkedVisits)?;
    let cells = samples
        .iter()
        .map(|hours| {
            let flat: Vec<f64> = hours.iter().flatten().copied().collect();
            let station = median(&flat);
            let mut row = [IdleCell {
                minutes: global,
                provenance: Provenance::ImputedGlobal,
            }; 24];
            for (h, s) in hours.iter().enumerate() {
                row[h] = match (median(s), station) {
                    (Some(m), _) => IdleCell {
                        minutes: m,
                        provenance: Provenance::Observed,
                    },
                    (None, Some(m)) => IdleCell {
                        minutes: m,
                        provenance: Provenance::ImputedHour,
                    },
                    (None, None) => row[h],
                };
            }
            row
        })
        .collect();
    Ok(IdleTimeTable {
        stops: route.stop_ids(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdleRow {
    pub stop_id: StopId,
    pub hour: u8,
    pub median_idle_minutes: f64,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct IdleRows {
    stops: Vec<StopId>,
    rows: Vec<IdleRow>,
}

impl From<IdleTimeTable> for IdleRows {
    fn from(t: IdleTimeTable) -> Self {
        let rows = t
            .cells
            .iter()
            .enumerate()
            .flat_map(|(p, row)| {
                let stop = t.stops[p].clone();
                row.iter().enumerate().map(move |(h, c)| IdleRow {
                    stop_id: stop.clone(),
                    hour: h as u8,
                    median_idle_minutes: c.minutes,
                    provenance: c.provenance,
                })
            })
            .collect();
        IdleRows {
            stops: t.stops,
            rows,
        }
    }
}

impl TryFrom<IdleRows> for IdleTimeTable {
    type Error = WrangleError;

    fn try_from(r: IdleRows) -> Result<Self, Self::Error> {
        let index = |s: &StopId| {
            r.stops
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| WrangleError::BadRows(format!("unknown stop {s}")))
        };
        let rows = r
            .rows
            .iter()
            .map(|row| {
                if !(row.median_idle_minutes >= 0.0) {
                    return Err(WrangleError::BadRows(format!(
                        "negative idle time at {}",
                        row.stop_id
                    )));
                }
                Ok((
                    index(&row.stop_id)?,
                    row.hour,
                    IdleCell {
                        minutes: row.median_idle_minutes,
                        provenance: row.provenance,
                    },
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IdleTimeTable {
            cells: dense_grid(r.stops.len(), rows)?,
            stops: r.stops,
        })
    }
}
