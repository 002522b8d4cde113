//! Second-bus departure search under a passenger waiting limit.
//!
//! Trip B's start is advanced one minute at a time from trip A's start.
//! Each candidate is planned for its own start time and compared with trip A
//! at every station both trips stop at. The search stops at the first start
//! whose wait proxy exceeds the limit somewhere; the answer is one minute
//! earlier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::StopId;
use crate::planner::{PlanError, PlanRequest, PlannedTrip, Planner};
use crate::routing::RouteProposal;
use crate::time::ClockTime;

pub const DEFAULT_SEARCH_CAP_MINUTES: u32 = 120;
const BATCH: u32 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("trips share no stopped station")]
    NoSharedStations,
    #[error("maximum wait must be a nonnegative number of minutes, got {0}")]
    InvalidMaxWait(f64),
    #[error("search cap must be at least one minute")]
    InvalidCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitModel {
    /// Half the headway gap.
    Median,
    /// The full headway gap.
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitProxy {
    pub minutes: f64,
    /// Trip B arrives no later than trip A leaves.
    pub degenerate: bool,
}

pub fn wait_proxy(b_arrival: ClockTime, a_departure: ClockTime, model: WaitModel) -> WaitProxy {
    let gap = b_arrival - a_departure;
    if gap <= 0.0 {
        return WaitProxy {
            minutes: 0.0,
            degenerate: true,
        };
    }
    let minutes = match model {
        WaitModel::Median => gap / 2.0,
        WaitModel::WorstCase => gap,
    };
    WaitProxy {
        minutes,
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationWait {
    pub stop_id: StopId,
    pub a_departure: ClockTime,
    pub b_arrival: ClockTime,
    pub minutes: f64,
    pub degenerate: bool,
}

/// Proxies at every station stopped by both trips, in route order.
pub fn station_waits(a: &RouteProposal, b: &RouteProposal, model: WaitModel) -> Vec<StationWait> {
    a.timeline
        .iter()
        .filter_map(|ea| {
            let eb = b.timeline_entry(&ea.stop_id)?;
            let p = wait_proxy(eb.arrival, ea.departure, model);
            Some(StationWait {
                stop_id: ea.stop_id.clone(),
                a_departure: ea.departure,
                b_arrival: eb.arrival,
                minutes: p.minutes,
                degenerate: p.degenerate,
            })
        })
        .collect()
}

/// Compact summary in the shape of a published allocation table row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationRow {
    pub trip_a_start: String,
    pub trip_b_start: String,
    pub max_wait: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub trip_a_start: ClockTime,
    pub trip_b_start: ClockTime,
    pub max_wait: f64,
    pub model: WaitModel,
    pub search_cap: u32,
    /// Station proxies with trip B at `trip_b_start`; empty when infeasible.
    pub waits: Vec<StationWait>,
    /// First candidate start that violated the limit.
    pub violated_at: Option<ClockTime>,
    /// The very first candidate (one minute after trip A) violated.
    pub infeasible: bool,
    /// No candidate up to the cap violated.
    pub capped: bool,
    pub trip_b: Option<RouteProposal>,
}

impl AllocationResult {
    pub fn row(&self) -> AllocationRow {
        let hm = |t: ClockTime| t.to_string()[..5].to_string();
        AllocationRow {
            trip_a_start: hm(self.trip_a_start),
            trip_b_start: hm(self.trip_b_start),
            max_wait: format!("{}", self.max_wait),
        }
    }

    pub fn offset_minutes(&self) -> f64 {
        self.trip_b_start - self.trip_a_start
    }
}

/// Latest trip-B start (whole minutes after trip A) keeping every shared
/// station's wait proxy within `max_wait`. `request` supplies the planning
/// parameters used for each candidate.
pub fn optimal_second_departure(
    trip_a: &RouteProposal,
    max_wait: f64,
    model: WaitModel,
    planner: &Planner<'_>,
    request: &PlanRequest,
    search_cap: u32,
) -> Result<AllocationResult, AllocationError> {
    if !(max_wait >= 0.0 && max_wait.is_finite()) {
        return Err(AllocationError::InvalidMaxWait(max_wait));
    }
    if search_cap == 0 {
        return Err(AllocationError::InvalidCap);
    }
    let start = trip_a.departure_time;
    let candidate = |k: u32| -> Result<(PlannedTrip, Vec<StationWait>), AllocationError> {
        let planned = planner.plan(&request.at(start + f64::from(k)))?;
        let waits = station_waits(trip_a, &planned.proposal, model);
        if waits.is_empty() {
            return Err(AllocationError::NoSharedStations);
        }
        Ok((planned, waits))
    };
    let violates = |waits: &[StationWait]| waits.iter().any(|w| w.minutes > max_wait);

    let mut last_ok: Option<(PlannedTrip, Vec<StationWait>)> = None;
    let mut next = 1;
    while next <= search_cap {
        let len = BATCH.min(search_cap - next + 1);
        let batch = planner
            .execution
            .map_range(len as usize, |i| candidate(next + i as u32));
        for (i, outcome) in batch.into_iter().enumerate() {
            let k = next + i as u32;
            let (planned, waits) = outcome?;
            if violates(&waits) {
                let b_start = start + f64::from(k - 1);
                let (waits, trip_b) = match last_ok {
                    Some((p, w)) => (w, Some(p.proposal)),
                    None => (Vec::new(), None),
                };
                return Ok(AllocationResult {
                    trip_a_start: start,
                    trip_b_start: b_start,
                    max_wait,
                    model,
                    search_cap,
                    waits,
                    violated_at: Some(start + f64::from(k)),
                    infeasible: k == 1,
                    capped: false,
                    trip_b,
                });
            }
            last_ok = Some((planned, waits));
        }
        next += len;
    }
    let (planned, waits) = last_ok.expect("search cap is at least one minute");
    Ok(AllocationResult {
        trip_a_start: start,
        trip_b_start: start + f64::from(search_cap),
        max_wait,
        model,
        search_cap,
        waits,
        violated_at: None,
        infeasible: false,
        capped: true,
        trip_b: Some(planned.proposal),
    })
}
