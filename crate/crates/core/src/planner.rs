//! End-to-end proposal for one departure: infer demand, simulate pickup,
//! propose, revise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::BoardingAverages;
use crate::par::Execution;
use crate::passenger::{
    aggregate_pickup_with, infer_total_boardings, PassengerError, PickupAggregate,
};
use crate::routing::{
    propose_route, revise_for_pickup, RouteProposal, RoutingContext, RoutingError,
};
use crate::time::ClockTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Passenger(#[from] PassengerError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub departure: ClockTime,
    pub t_p: f64,
    pub pa_min: f64,
    pub n_simulations: usize,
    pub seed: u64,
}

impl PlanRequest {
    pub fn at(self, departure: ClockTime) -> Self {
        PlanRequest { departure, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrip {
    pub proposal: RouteProposal,
    pub aggregate: PickupAggregate,
}

#[derive(Debug, Clone, Copy)]
pub struct Planner<'a> {
    pub ctx: RoutingContext<'a>,
    pub boardings: &'a BoardingAverages,
    pub execution: Execution,
}

impl<'a> Planner<'a> {
    pub fn new(ctx: RoutingContext<'a>, boardings: &'a BoardingAverages) -> Self {
        Planner {
            ctx,
            boardings,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Planner { execution, ..self }
    }

    /// Pickup aggregate for a departure, using the probabilities of the
    /// departure hour as sampling weights.
    pub fn aggregate(
        &self,
        departure: ClockTime,
        n_simulations: usize,
        seed: u64,
    ) -> Result<PickupAggregate, PlanError> {
        let route = self.ctx.tables.route();
        let total = infer_total_boardings(departure, self.boardings)?;
        let probs = self
            .ctx
            .tables
            .probabilities()
            .effective_at_hour(departure.hour());
        Ok(aggregate_pickup_with(
            self.execution,
            route,
            departure,
            total,
            &probs,
            n_simulations,
            seed,
        )?)
    }

    pub fn plan(&self, request: &PlanRequest) -> Result<PlannedTrip, PlanError> {
        let aggregate = self.aggregate(request.departure, request.n_simulations, request.seed)?;
        self.plan_with(request, aggregate)
    }

    /// As [`Planner::plan`] with a precomputed aggregate.
    pub fn plan_with(
        &self,
        request: &PlanRequest,
        aggregate: PickupAggregate,
    ) -> Result<PlannedTrip, PlanError> {
        let proposal = propose_route(request.departure, request.t_p, &self.ctx)?;
        let proposal = revise_for_pickup(proposal, &aggregate, request.pa_min, &self.ctx)?;
        Ok(PlannedTrip {
            proposal,
            aggregate,
        })
    }
}
