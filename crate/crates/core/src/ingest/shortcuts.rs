use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    column_indices, open, reader, Direction, IngestError, Route, StationRegistry, StopId,
    ValidationReport,
};
use crate::wrangle::TripTimeMatrix;

const SHORTCUT_COLUMNS: [&str; 5] = [
    "from_stop",
    "to_stop",
    "bypassed_stops",
    "hour",
    "estimated_minutes",
];

/// Alternate road segment from `from_stop` to `to_stop` that bypasses the
/// stations strictly between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcutEdge {
    pub direction: Direction,
    pub from_stop: StopId,
    pub to_stop: StopId,
    pub bypassed_stops: Vec<StopId>,
    /// Hours without an estimate mean the shortcut is unavailable then.
    pub estimated_minutes_per_hour: BTreeMap<u8, f64>,
}

impl ShortcutEdge {
    pub fn estimate(&self, hour: u8) -> Option<f64> {
        self.estimated_minutes_per_hour.get(&hour).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedShortcut {
    pub from_stop: StopId,
    pub to_stop: StopId,
    /// `(hour, estimated_minutes, direct_minutes)` for every violating hour.
    pub violations: Vec<(u8, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcutValidation {
    pub report: ValidationReport,
    pub accepted: Vec<ShortcutEdge>,
    pub flagged: Vec<FlaggedShortcut>,
}

pub fn parse_shortcuts(
    path: &Path,
    registry: &StationRegistry,
) -> Result<Vec<ShortcutEdge>, IngestError> {
    parse_shortcuts_from(open(path)?, &path.display().to_string(), registry)
}

/// One row per (shortcut, hour); rows sharing endpoints are merged.
pub fn parse_shortcuts_from<R: Read>(
    input: R,
    source_name: &str,
    registry: &StationRegistry,
) -> Result<Vec<ShortcutEdge>, IngestError> {
    let mut rdr = reader(input);
    let csv_err = |source| IngestError::Csv {
        source_name: source_name.to_string(),
        source,
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let cols = column_indices(&headers, &SHORTCUT_COLUMNS, source_name)?;

    let mut edges: BTreeMap<(Direction, usize, usize), ShortcutEdge> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(cols[i]).unwrap_or("");
        let malformed = |reason: String| IngestError::Malformed {
            source_name: source_name.to_string(),
            line,
            reason,
        };
        let from = StopId::new(field(0));
        let to = StopId::new(field(1));
        let bypassed: Vec<StopId> = field(2)
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(StopId::new)
            .collect();
        let hour: u8 = field(3)
            .parse()
            .ok()
            .filter(|h| *h < 24)
            .ok_or_else(|| malformed(format!("hour {:?} must be 0-23", field(3))))?;
        let minutes: f64 = field(4)
            .parse()
            .ok()
            .filter(|m: &f64| *m > 0.0 && m.is_finite())
            .ok_or_else(|| {
                malformed(format!("estimated_minutes {:?} must be positive", field(4)))
            })?;

        let (route, from_pos, to_pos) =
            locate(registry, &from, &to).ok_or_else(|| IngestError::Shortcut {
                from: from.clone(),
                to: to.clone(),
                reason: "endpoints are not on a common route in travel order".into(),
            })?;
        let between: Vec<StopId> = (from_pos + 1..to_pos)
            .map(|p| route.stop_id(p).clone())
            .collect();
        if bypassed.is_empty() || bypassed != between {
            return Err(IngestError::Shortcut {
                from,
                to,
                reason: format!(
                    "bypassed_stops must be exactly the stations strictly between the endpoints ({})",
                    between.iter().map(StopId::as_str).collect::<Vec<_>>().join(";")
                ),
            });
        }
        let edge = edges
            .entry((route.direction(), from_pos, to_pos))
            .or_insert_with(|| ShortcutEdge {
                direction: route.direction(),
                from_stop: from.clone(),
                to_stop: to.clone(),
                bypassed_stops: bypassed,
                estimated_minutes_per_hour: BTreeMap::new(),
            });
        if edge
            .estimated_minutes_per_hour
            .insert(hour, minutes)
            .is_some()
        {
            return Err(malformed(format!(
                "duplicate hour {hour} for shortcut {from}->{to}"
            )));
        }
    }
    Ok(edges.into_values().collect())
}

fn locate<'a>(
    registry: &'a StationRegistry,
    from: &StopId,
    to: &StopId,
) -> Option<(&'a Route, usize, usize)> {
    registry
        .routes()
        .find_map(|r| match (r.position_of(from), r.position_of(to)) {
            (Some(a), Some(b)) if a < b => Some((r, a, b)),
            _ => None,
        })
}

/// Flags every shortcut that is slower, at some hour it is offered, than the
/// direct multi-segment trip time through its bypassed stations.
pub fn validate_shortcuts(
    shortcuts: &[ShortcutEdge],
    matrix: &TripTimeMatrix,
    route: &Route,
) -> ShortcutValidation {
    let mut report = ValidationReport::default();
    let mut accepted = Vec::new();
    let mut flagged = Vec::new();
    for edge in shortcuts {
        let label = format!("{}->{}", edge.from_stop, edge.to_stop);
        let positions = (
            route.position_of(&edge.from_stop),
            route.position_of(&edge.to_stop),
        );
        let (Some(from), Some(to)) = positions else {
            report.reject(
                None,
                label,
                format!("not on the {} route", route.direction()),
            );
            continue;
        };
        if edge.direction != route.direction() || from >= to {
            report.reject(
                None,
                label,
                format!("not on the {} route", route.direction()),
            );
            continue;
        }
        let violations: Vec<(u8, f64, f64)> = edge
            .estimated_minutes_per_hour
            .iter()
            .filter_map(|(&hour, &est)| {
                let direct: f64 = (from..to).map(|p| matrix.minutes(p, hour)).sum();
                (est > direct).then_some((hour, est, direct))
            })
            .collect();
        if violations.is_empty() {
            report.accept();
            accepted.push(edge.clone());
        } else {
            let hours = violations
                .iter()
                .map(|v| v.0.to_string())
                .collect::<Vec<_>>()
                .join(",");
            report.reject(
                None,
                label,
                format!("slower than the direct route at hour(s) {hours}"),
            );
            flagged.push(FlaggedShortcut {
                from_stop: edge.from_stop.clone(),
                to_stop: edge.to_stop.clone(),
                violations,
            });
        }
    }
    ShortcutValidation {
        report,
        accepted,
        flagged,
    }
}
