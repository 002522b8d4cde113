mod commands;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use busroute_core::ingest::Direction;
use busroute_core::passenger::DEFAULT_SIMULATIONS;
use busroute_core::probability::DEFAULT_PERCENTILE;
use busroute_core::ClockTime;
use clap::{Args, Parser, Subcommand};

use commands::{IngestSources, PlanArgs};
use workspace::Workspace;

/// Semi-dynamic bus routing pipeline.
#[derive(Parser)]
#[command(name = "busroute", version)]
struct Cli {
    /// Workspace directory.
    #[arg(long, global = true, env = "BUSROUTE_WORKSPACE", default_value = ".")]
    workspace: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Planning {
    /// Skip percentile t_p in [0, 100].
    #[arg(long = "tp", default_value_t = DEFAULT_PERCENTILE)]
    t_p: f64,
    /// Minimum pickup share PA_min in [0, 1].
    #[arg(long = "pa-min", default_value_t = 0.0)]
    pa_min: f64,
    /// Passenger simulations.
    #[arg(long = "sims", default_value_t = DEFAULT_SIMULATIONS)]
    sims: usize,
    /// RNG seed; generated and recorded when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

impl From<Planning> for PlanArgs {
    fn from(p: Planning) -> Self {
        PlanArgs {
            t_p: p.t_p,
            pa_min: p.pa_min,
            n_simulations: p.sims,
            seed: p.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate input files and copy them into the workspace.
    Ingest {
        /// Directory holding events.csv, stations.csv, schedule.csv,
        /// shortcuts.csv and boardings.csv.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        stations: Option<PathBuf>,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        shortcuts: Option<PathBuf>,
        #[arg(long)]
        boardings: Option<PathBuf>,
    },
    /// Build the hourly tables.
    Metrics {
        #[arg(long, default_value = "outgoing")]
        direction: Direction,
        /// Arrival/departure linking threshold in minutes.
        #[arg(long, default_value_t = commands::default_threshold())]
        threshold: f64,
    },
    /// Propose a route for one departure.
    Propose {
        #[arg(long)]
        depart: ClockTime,
        #[command(flatten)]
        planning: Planning,
    },
    /// Simulate boardings and aggregate pickup shares.
    Simulate {
        #[arg(long)]
        depart: ClockTime,
        #[arg(long = "sims", default_value_t = DEFAULT_SIMULATIONS)]
        sims: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare the all-stations route with the proposed route.
    DryRun {
        #[arg(long)]
        depart: ClockTime,
        #[command(flatten)]
        planning: Planning,
        /// Cap boardings per trip (36 when given without a value).
        #[arg(long, num_args = 0..=1, default_missing_value = "36")]
        capacity: Option<u32>,
    },
    /// Find the latest second-bus departure within a waiting limit.
    Allocate {
        #[arg(long = "trip-a")]
        trip_a: ClockTime,
        /// Maximum wait in minutes.
        #[arg(long = "max-wait")]
        max_wait: f64,
        /// Use the full headway gap instead of half of it.
        #[arg(long = "worst-case")]
        worst_case: bool,
        /// Minutes after trip A to search.
        #[arg(long = "search-cap")]
        search_cap: Option<u32>,
        #[command(flatten)]
        planning: Planning,
    },
    /// Sweep t_p and PA_min.
    Sweep {
        #[arg(long)]
        depart: ClockTime,
        #[arg(
            long = "tp-values",
            value_delimiter = ',',
            default_value = "0,25,50,75,100"
        )]
        t_p_values: Vec<f64>,
        #[arg(
            long = "pa-min-values",
            value_delimiter = ',',
            default_value = "0,0.2,0.4,0.6,0.8,1"
        )]
        pa_min_values: Vec<f64>,
        #[arg(long = "sims", default_value_t = DEFAULT_SIMULATIONS)]
        sims: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write plot-ready CSV files.
    Report,
}

fn run(cli: Cli) -> Result<()> {
    let ws = Workspace::new(cli.workspace);
    match cli.command {
        Command::Ingest {
            from,
            events,
            stations,
            schedule,
            shortcuts,
            boardings,
        } => commands::ingest(
            &ws,
            IngestSources {
                from,
                files: [events, stations, schedule, shortcuts, boardings],
            },
        ),
        Command::Metrics {
            direction,
            threshold,
        } => commands::metrics(&ws, direction, threshold),
        Command::Propose { depart, planning } => commands::propose(&ws, depart, planning.into()),
        Command::Simulate { depart, sims, seed } => commands::simulate(&ws, depart, sims, seed),
        Command::DryRun {
            depart,
            planning,
            capacity,
        } => commands::dry_run_cmd(&ws, depart, planning.into(), capacity),
        Command::Allocate {
            trip_a,
            max_wait,
            worst_case,
            search_cap,
            planning,
        } => commands::allocate(
            &ws,
            trip_a,
            max_wait,
            worst_case,
            search_cap,
            planning.into(),
        ),
        Command::Sweep {
            depart,
            t_p_values,
            pa_min_values,
            sims,
            seed,
        } => commands::sweep(&ws, depart, &t_p_values, &pa_min_values, sims, seed),
        Command::Report => commands::report(&ws),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
