//! Static versus semi-dynamic dry runs and parameter sweeps.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::passenger::{PassengerError, PassengerSampler, PassengerScenario};
use crate::planner::{PlanError, PlanRequest, Planner};
use crate::routing::{full_stop_route, RouteProposal, RoutingError};
use crate::time::ClockTime;

/// Seating capacity used when pickup capping is enabled.
pub const DEFAULT_CAPACITY: u32 = 36;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("parameter grid is empty")]
    EmptyGrid,
}

impl From<RoutingError> for EvaluationError {
    fn from(e: RoutingError) -> Self {
        EvaluationError::Plan(PlanError::Routing(e))
    }
}

impl From<PassengerError> for EvaluationError {
    fn from(e: PassengerError) -> Self {
        EvaluationError::Plan(PlanError::Passenger(e))
    }
}

/// Passengers of a scenario boarding at the stopped stations of `route`,
/// optionally limited to `capacity` boardings in route order.
pub fn boarded(route: &RouteProposal, scenario: &PassengerScenario, capacity: Option<u32>) -> u64 {
    let mut boarded: u64 = 0;
    for (p, &c) in scenario.counts.iter().enumerate() {
        if route.is_stopped(p) {
            boarded += u64::from(c);
            if let Some(cap) = capacity {
                boarded = boarded.min(u64::from(cap));
            }
        }
    }
    boarded
}

pub fn pickup_fraction(
    route: &RouteProposal,
    scenario: &PassengerScenario,
    capacity: Option<u32>,
) -> f64 {
    if scenario.total_boardings == 0 {
        return 0.0;
    }
    boarded(route, scenario, capacity) as f64 / f64::from(scenario.total_boardings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemResult {
    pub pickup_fraction_mean: f64,
    pub num_stops: usize,
    pub pickup_fractions: Vec<f64>,
    pub route: RouteProposal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DryRunReport {
    pub departure_time: ClockTime,
    pub n_simulations: usize,
    pub seed: u64,
    pub t_p: f64,
    pub pa_min: f64,
    pub total_boardings: u32,
    pub capacity: Option<u32>,
    #[serde(rename = "static")]
    pub static_system: SystemResult,
    pub semi_dynamic: SystemResult,
}

/// Scores the all-stations route and the planned route against the same
/// scenarios: simulation `i` uses the stream the planner's aggregate used.
pub fn dry_run(
    planner: &Planner<'_>,
    request: &PlanRequest,
    capacity: Option<u32>,
) -> Result<DryRunReport, EvaluationError> {
    let planned = planner.plan(request)?;
    let static_route = full_stop_route(request.departure, &planner.ctx)?;
    let tables = planner.ctx.tables;
    let probs = tables
        .probabilities()
        .effective_at_hour(request.departure.hour());
    let sampler = PassengerSampler::new(&probs, &tables.route().densities())?;
    let total = planned.aggregate.total_boardings;

    let pairs = planner.execution.map_range(request.n_simulations, |i| {
        let scenario = sampler.simulation(total, request.seed, i);
        (
            boarded(&static_route, &scenario, capacity),
            boarded(&planned.proposal, &scenario, capacity),
        )
    });
    let (static_counts, semi_counts): (Vec<u64>, Vec<u64>) = pairs.into_iter().unzip();
    // every scenario has `total` passengers, so the mean share is exact
    let denominator = f64::from(total);
    let summarize = |counts: Vec<u64>, route: RouteProposal| SystemResult {
        pickup_fraction_mean: counts.iter().sum::<u64>() as f64
            / (denominator * counts.len() as f64),
        num_stops: route.num_stops(),
        pickup_fractions: counts.iter().map(|&c| c as f64 / denominator).collect(),
        route,
    };
    Ok(DryRunReport {
        departure_time: request.departure,
        n_simulations: request.n_simulations,
        seed: request.seed,
        t_p: request.t_p,
        pa_min: request.pa_min,
        total_boardings: total,
        capacity,
        static_system: summarize(static_counts, static_route),
        semi_dynamic: summarize(semi_counts, planned.proposal),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub t_p: f64,
    pub pa_min: f64,
    pub num_stops: usize,
    pub total_minutes: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    NumStops,
    TotalMinutes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub departure_time: ClockTime,
    pub n_simulations: usize,
    pub seed: u64,
    pub t_p_values: Vec<f64>,
    pub pa_min_values: Vec<f64>,
    /// Row-major: `t_p` outer, `pa_min` inner.
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn cell(&self, t_index: usize, pa_index: usize) -> &SweepCell {
        &self.cells[t_index * self.pa_min_values.len() + pa_index]
    }

    /// Matrix with one row per `t_p` and one column per `pa_min`.
    pub fn write_matrix<W: Write>(&self, metric: SweepMetric, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t_p".to_string()];
        header.extend(self.pa_min_values.iter().map(|v| format!("pa_min={v}")));
        w.write_record(&header)?;
        for (ti, t_p) in self.t_p_values.iter().enumerate() {
            let mut row = vec![t_p.to_string()];
            for pi in 0..self.pa_min_values.len() {
                let c = self.cell(ti, pi);
                row.push(match metric {
                    SweepMetric::NumStops => c.num_stops.to_string(),
                    SweepMetric::TotalMinutes => c.total_minutes.to_string(),
                });
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the planning pipeline over every `(t_p, pa_min)` pair. The pickup
/// aggregate depends only on the departure and seed, so it is shared.
pub fn parameter_sweep(
    planner: &Planner<'_>,
    departure: ClockTime,
    t_p_values: &[f64],
    pa_min_values: &[f64],
    n_simulations: usize,
    seed: u64,
) -> Result<SweepReport, EvaluationError> {
    if t_p_values.is_empty() || pa_min_values.is_empty() {
        return Err(EvaluationError::EmptyGrid);
    }
    let aggregate = planner.aggregate(departure, n_simulations, seed)?;
    let width = pa_min_values.len();
    let cells = planner
        .execution
        .map_range(t_p_values.len() * width, |i| {
            let request = PlanRequest {
                departure,
                t_p: t_p_values[i / width],
                pa_min: pa_min_values[i % width],
                n_simulations,
                seed,
            };
            let planned = planner.plan_with(&request, aggregate.clone())?;
            Ok(SweepCell {
                t_p: request.t_p,
                pa_min: request.pa_min,
                num_stops: planned.proposal.num_stops(),
                total_minutes: planned.proposal.total_minutes,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>, PlanError>>()?;
    Ok(SweepReport {
        departure_time: departure,
        n_simulations,
        seed,
        t_p_values: t_p_values.to_vec(),
        pa_min_values: pa_min_values.to_vec(),
        cells,
    })
}
