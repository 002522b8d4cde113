//! Semi-dynamic bus routing: hourly tables from stop event logs, skip and
//! shortcut route proposals, simulated boardings, and follow-up departure
//! search.
//!
//! Data-parallel work (simulations, sweeps, allocation candidates) runs on
//! rayon when the `parallel` feature is enabled; see [`par::Execution`].

pub mod allocation;
pub mod evaluation;
pub mod ingest;
pub mod par;
pub mod passenger;
pub mod planner;
pub mod probability;
pub mod routing;
pub mod stats;
pub mod tables;
pub mod time;
pub mod wrangle;

pub use par::Execution;
pub use planner::{PlanRequest, PlannedTrip, Planner};
pub use tables::{build_tables, HourlyTables};
pub use time::{ClockTime, ScheduleTime};
