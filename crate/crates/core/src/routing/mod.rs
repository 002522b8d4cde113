//! Semi-dynamic route proposal.
//!
//! A proposal is computed before departure in three passes:
//!
//! 1. walk the full route in order keeping a simulated clock `g` (minutes
//!    since departure); at each intermediate station read its stopping
//!    probability and the percentile threshold at the clock hour, stop when
//!    the probability is at least the threshold (adding trip time and dwell),
//!    otherwise pass through (trip time only);
//! 2. connect consecutive stopped stations by one segment each, offering a
//!    validated shortcut when it exactly bypasses a run of skipped stations;
//! 3. lay the timeline: each lookup (trip time, shortcut estimate, dwell)
//!    uses the hour of the simulated clock at that moment, and a shortcut is
//!    kept only when strictly faster than the direct segments at that time.
//!
//! Origin and terminus are always stopped. The trip total is the terminus
//! arrival minus the origin departure, i.e. the sum of segment minutes and
//! dwell at intermediate stopped stations.

mod propose;
mod revise;
mod timeline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ShortcutEdge, StopId};
use crate::probability::ProbabilityError;
use crate::tables::HourlyTables;
use crate::time::ClockTime;

pub use propose::{full_stop_route, propose_route};
pub use revise::{revise_for_pickup, COVERAGE_TOLERANCE};
pub use timeline::{compute_timeline, direct_minutes};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
    #[error("PA_min {0} outside [0, 1]; at most the full passenger share (1.0) is achievable")]
    InvalidPaMin(f64),
    #[error("pickup aggregate covers {found:?}, route has {expected:?}")]
    AggregateMismatch {
        expected: Vec<StopId>,
        found: Vec<StopId>,
    },
    #[error("proposal does not match the route: {0}")]
    Inconsistent(String),
}

/// Tables plus the validated shortcuts the router may use.
#[derive(Debug, Clone, Copy)]
pub struct RoutingContext<'a> {
    pub tables: &'a HourlyTables,
    pub shortcuts: &'a [ShortcutEdge],
}

impl<'a> RoutingContext<'a> {
    pub fn new(tables: &'a HourlyTables, shortcuts: &'a [ShortcutEdge]) -> Self {
        RoutingContext { tables, shortcuts }
    }

    pub(crate) fn shortcut(&self, from: &StopId, to: &StopId) -> Option<&'a ShortcutEdge> {
        let direction = self.tables.route().direction();
        self.shortcuts
            .iter()
            .find(|s| s.direction == direction && &s.from_stop == from && &s.to_stop == to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Stop,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub stop_id: StopId,
    pub position: usize,
    pub action: Action,
    /// Clock hour at which the decision was taken.
    pub hour: u8,
    pub probability: f64,
    pub threshold: f64,
    /// Origin and terminus.
    pub mandatory: bool,
    /// Added to meet the passenger pickup minimum.
    pub added_for_pickup: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Direct,
    Shortcut,
}

/// Connection between two consecutive stopped stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from_stop: StopId,
    pub to_stop: StopId,
    pub kind: SegmentKind,
    /// Stations passed without stopping.
    pub passes: Vec<StopId>,
    pub minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub stop_id: StopId,
    pub arrival: ClockTime,
    pub departure: ClockTime,
    pub arrival_clock: String,
    pub departure_clock: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteParameters {
    pub t_p: f64,
    pub pa_min: Option<f64>,
    pub n_simulations: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteProposal {
    pub departure_time: ClockTime,
    pub parameters: RouteParameters,
    pub decisions: Vec<Decision>,
    pub segments: Vec<Segment>,
    pub timeline: Vec<TimelineEntry>,
    pub total_minutes: f64,
}

impl RouteProposal {
    pub fn stopped_positions(&self) -> Vec<usize> {
        self.decisions
            .iter()
            .filter(|d| d.action == Action::Stop)
            .map(|d| d.position)
            .collect()
    }

    pub fn is_stopped(&self, position: usize) -> bool {
        self.decisions
            .get(position)
            .is_some_and(|d| d.action == Action::Stop)
    }

    /// Stopped stations excluding origin and terminus.
    pub fn num_stops(&self) -> usize {
        self.decisions
            .iter()
            .filter(|d| d.action == Action::Stop && !d.mandatory)
            .count()
    }

    pub fn timeline_entry(&self, stop: &StopId) -> Option<&TimelineEntry> {
        self.timeline.iter().find(|e| &e.stop_id == stop)
    }

    /// Terminus arrival.
    pub fn arrival_time(&self) -> ClockTime {
        self.departure_time + self.total_minutes
    }
}
