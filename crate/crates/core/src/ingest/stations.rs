use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{column_indices, open, parse_bool, reader, Direction, IngestError, StopId};

const STATION_COLUMNS: [&str; 7] = [
    "stop_id",
    "name",
    "route_position",
    "population_density",
    "is_origin",
    "is_terminus",
    "direction_id",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub stop_id: StopId,
    pub name: String,
    pub route_position: usize,
    /// Only used as a relative sampling weight; any consistent scale works.
    pub population_density: f64,
    pub is_origin: bool,
    pub is_terminus: bool,
    pub direction: Direction,
}

/// The full canonical route of one direction, ordered by `route_position`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RouteRepr", into = "RouteRepr")]
pub struct Route {
    direction: Direction,
    stations: Vec<Station>,
}

#[derive(Serialize, Deserialize)]
struct RouteRepr {
    direction: Direction,
    stations: Vec<Station>,
}

impl TryFrom<RouteRepr> for Route {
    type Error = IngestError;

    fn try_from(r: RouteRepr) -> Result<Self, Self::Error> {
        Route::new(r.direction, r.stations)
    }
}

impl From<Route> for RouteRepr {
    fn from(r: Route) -> Self {
        RouteRepr {
            direction: r.direction,
            stations: r.stations,
        }
    }
}

impl Route {
    /// Validates uniqueness, contiguity and endpoints; positions must cover `0..len`.
    pub fn new(direction: Direction, mut stations: Vec<Station>) -> Result<Self, IngestError> {
        let mut seen = HashSet::new();
        for s in &stations {
            if !seen.insert(s.stop_id.clone()) {
                return Err(IngestError::DuplicateStop {
                    stop_id: s.stop_id.clone(),
                    direction,
                });
            }
        }
        stations.sort_by_key(|s| s.route_position);
        for (expected, s) in stations.iter().enumerate() {
            if s.route_position != expected {
                return Err(IngestError::NonContiguousPosition {
                    direction,
                    expected,
                    found: s.route_position,
                });
            }
        }
        let endpoint_err = |reason: &str| IngestError::Endpoints {
            direction,
            reason: reason.to_string(),
        };
        if stations.len() < 2 {
            return Err(endpoint_err("a route needs at least two stations"));
        }
        if stations.iter().filter(|s| s.is_origin).count() != 1 {
            return Err(endpoint_err("exactly one origin station required"));
        }
        if stations.iter().filter(|s| s.is_terminus).count() != 1 {
            return Err(endpoint_err("exactly one terminus station required"));
        }
        if !stations[0].is_origin {
            return Err(endpoint_err("origin must be at route_position 0"));
        }
        if !stations[stations.len() - 1].is_terminus {
            return Err(endpoint_err("terminus must be at the last route_position"));
        }
        if let Some(s) = stations
            .iter()
            .find(|s| !(s.population_density >= 0.0 && s.population_density.is_finite()))
        {
            return Err(endpoint_err(&format!(
                "population_density of {} must be a nonnegative number",
                s.stop_id
            )));
        }
        Ok(Route {
            direction,
            stations,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn terminus_position(&self) -> usize {
        self.stations.len() - 1
    }

    pub fn position_of(&self, stop: &StopId) -> Option<usize> {
        self.stations.iter().position(|s| &s.stop_id == stop)
    }

    pub fn stop_id(&self, position: usize) -> &StopId {
        &self.stations[position].stop_id
    }

    pub fn stop_ids(&self) -> Vec<StopId> {
        self.stations.iter().map(|s| s.stop_id.clone()).collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.stations.iter().map(|s| s.population_density).collect()
    }

    pub fn is_endpoint(&self, position: usize) -> bool {
        position == 0 || position == self.terminus_position()
    }
}

/// Routes keyed by direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationRegistry {
    routes: BTreeMap<Direction, Route>,
}

impl StationRegistry {
    pub fn new(stations: Vec<Station>) -> Result<Self, IngestError> {
        let mut by_dir: BTreeMap<Direction, Vec<Station>> = BTreeMap::new();
        for s in stations {
            by_dir.entry(s.direction).or_default().push(s);
        }
        let routes = by_dir
            .into_iter()
            .map(|(d, st)| Route::new(d, st).map(|r| (d, r)))
            .collect::<Result<_, _>>()?;
        Ok(StationRegistry { routes })
    }

    pub fn route(&self, direction: Direction) -> Option<&Route> {
        self.routes.get(&direction)
    }

    pub fn routes(&self) -> impl Iterator<Item = &Route> {
        self.routes.values()
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.routes.keys().copied().collect()
    }

    pub fn contains(&self, stop: &StopId) -> bool {
        self.routes.values().any(|r| r.position_of(stop).is_some())
    }
}

pub fn parse_stations(path: &Path) -> Result<StationRegistry, IngestError> {
    parse_stations_from(open(path)?, &path.display().to_string())
}

pub fn parse_stations_from<R: Read>(
    input: R,
    source_name: &str,
) -> Result<StationRegistry, IngestError> {
    let mut rdr = reader(input);
    let csv_err = |source| IngestError::Csv {
        source_name: source_name.to_string(),
        source,
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let cols = column_indices(&headers, &STATION_COLUMNS, source_name)?;
    let mut stations = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(cols[i]).unwrap_or("");
        let malformed = |reason: String| IngestError::Malformed {
            source_name: source_name.to_string(),
            line,
            reason,
        };
        let stop_id = field(0);
        if stop_id.is_empty() {
            return Err(malformed("empty stop_id".into()));
        }
        let route_position = field(2)
            .parse::<usize>()
            .map_err(|e| malformed(format!("route_position {:?}: {e}", field(2))))?;
        let population_density = field(3)
            .parse::<f64>()
            .map_err(|e| malformed(format!("population_density {:?}: {e}", field(3))))?;
        stations.push(Station {
            stop_id: StopId::new(stop_id),
            name: field(1).to_string(),
            route_position,
            population_density,
            is_origin: parse_bool(field(4)).map_err(malformed)?,
            is_terminus: parse_bool(field(5)).map_err(malformed)?,
            direction: field(6).parse().map_err(malformed)?,
        });
    }
    StationRegistry::new(stations)
}
