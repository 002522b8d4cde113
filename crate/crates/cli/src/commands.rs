use std::collections::BTreeMap;
use std::hash::{BuildHasher, RandomState};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use busroute_core::allocation::{optimal_second_departure, WaitModel, DEFAULT_SEARCH_CAP_MINUTES};
use busroute_core::evaluation::{dry_run, parameter_sweep, SweepMetric, SweepReport};
use busroute_core::ingest::{
    parse_boardings, parse_events, parse_schedule, parse_shortcuts, parse_stations,
    BoardingAverages, Direction, FlaggedShortcut, ShortcutEdge, StopId, ValidationReport,
};
use busroute_core::passenger::PickupAggregate;
use busroute_core::routing::RoutingContext;
use busroute_core::stats::median;
use busroute_core::tables::build_tables;
use busroute_core::time::timestamp_hour;
use busroute_core::wrangle::{LinkReport, DEFAULT_LINK_THRESHOLD_MINUTES};
use busroute_core::{ClockTime, HourlyTables, PlanRequest, Planner};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::workspace::{now, Manifest, Workspace, INPUTS, METRICS};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything downstream commands need, persisted by `metrics`.
#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub tool_version: String,
    pub dataset_hash: String,
    pub direction: Direction,
    pub threshold_minutes: f64,
    pub events: ValidationReport,
    pub link_report: LinkReport,
    pub trips: usize,
    pub visits_off_route: usize,
    pub lateness_matched: usize,
    pub lateness_unmatched: usize,
    pub lateness_by_hour: Vec<LatenessHour>,
    pub shortcuts_flagged: Vec<FlaggedShortcut>,
    pub shortcuts: Vec<ShortcutEdge>,
    pub tables: HourlyTables,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatenessHour {
    pub stop_id: StopId,
    pub hour: u8,
    pub median_lateness_minutes: f64,
    pub departures: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PlanArgs {
    pub t_p: f64,
    pub pa_min: f64,
    pub n_simulations: usize,
    pub seed: Option<u64>,
}

struct Resolved {
    request: PlanRequest,
    seed_generated: bool,
}

impl PlanArgs {
    fn resolve(self, departure: ClockTime) -> Resolved {
        let seed_generated = self.seed.is_none();
        let seed = self
            .seed
            .unwrap_or_else(|| RandomState::new().hash_one(std::time::SystemTime::now()));
        Resolved {
            request: PlanRequest {
                departure,
                t_p: self.t_p,
                pa_min: self.pa_min,
                n_simulations: self.n_simulations,
                seed,
            },
            seed_generated,
        }
    }
}

fn params_json(r: &Resolved) -> serde_json::Value {
    json!({
        "departure_time": r.request.departure.to_string(),
        "t_p": r.request.t_p,
        "pa_min": r.request.pa_min,
        "n_simulations": r.request.n_simulations,
        "seed": r.request.seed,
        "seed_generated": r.seed_generated,
    })
}

fn stamp(t: ClockTime) -> String {
    t.to_string()[..5].replace(':', "")
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| anyhow!("{e}"))
}

/// Writes artifacts, appends the log entry and saves the manifest.
struct Run<'a> {
    ws: &'a Workspace,
    manifest: Manifest,
    command: &'static str,
    written: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(ws: &'a Workspace, command: &'static str) -> Result<Self> {
        Ok(Run {
            ws,
            manifest: ws.manifest()?,
            command,
            written: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        self.ws.write_artifact(&mut self.manifest, rel, bytes)?;
        self.written.push(rel.to_string());
        Ok(())
    }

    fn finish(self, params: serde_json::Value) -> Result<()> {
        self.ws.save_manifest(&self.manifest)?;
        self.ws.append_log(&json!({
            "timestamp": now(),
            "command": self.command,
            "params": params,
            "artifacts": self.written,
            "status": "ok",
        }))
    }
}

pub struct IngestSources {
    pub from: Option<PathBuf>,
    pub files: [Option<PathBuf>; 5],
}

pub fn ingest(ws: &Workspace, sources: IngestSources) -> Result<()> {
    let mut chosen = Vec::new();
    for (name, explicit) in INPUTS.iter().zip(sources.files) {
        let path = match (explicit, &sources.from) {
            (Some(p), _) => p,
            (None, Some(dir)) => dir.join(name),
            (None, None) => bail!(
                "no source for {name}: pass --from DIR or --{}",
                name.trim_end_matches(".csv")
            ),
        };
        chosen.push((*name, path));
    }
    for (name, path) in &chosen {
        if !path.is_file() {
            bail!("input {name} not found at {}", path.display());
        }
    }
    // validate before touching the workspace
    let summary =
        validate_inputs(|name| chosen.iter().find(|(n, _)| *n == name).unwrap().1.clone())?;
    for (name, path) in &chosen {
        ws.copy_input(name, path)?;
    }
    let (inputs, dataset_hash) = ws.hash_inputs()?;
    let mut manifest = if ws.exists() {
        ws.manifest()?
    } else {
        Manifest::default()
    };
    manifest.tool_version = TOOL_VERSION.to_string();
    manifest.inputs = inputs;
    manifest.dataset_hash = dataset_hash;
    ws.save_manifest(&manifest)?;
    let mut run = Run::new(ws, "ingest")?;
    run.write("reports/ingest.json", &to_json(&summary)?)?;
    let files: BTreeMap<&str, String> = chosen
        .iter()
        .map(|(n, p)| {
            (
                *n,
                p.file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_default(),
            )
        })
        .collect();
    let ev = &summary["events"];
    println!(
        "ingested {} event rows ({} accepted, {} rejected); dataset {}",
        ev["total"],
        ev["accepted"],
        ev["rejected"],
        &run.manifest.dataset_hash[..12]
    );
    run.finish(json!({ "source_files": files }))
}

fn validate_inputs(path: impl Fn(&str) -> PathBuf) -> Result<serde_json::Value> {
    let registry = parse_stations(&path("stations.csv"))?;
    let (_, events) = parse_events(&path("events.csv"))?;
    let schedule = parse_schedule(&path("schedule.csv"), &registry)?;
    let shortcuts = parse_shortcuts(&path("shortcuts.csv"), &registry)?;
    let boardings = parse_boardings(&path("boardings.csv"))?;
    Ok(json!({
        "events": events,
        "directions": registry.directions(),
        "stations": registry.routes().map(|r| r.len()).sum::<usize>(),
        "schedule_entries": schedule.len(),
        "shortcuts": shortcuts.len(),
        "boarding_departures": boardings.entries().len(),
    }))
}

pub fn metrics(ws: &Workspace, direction: Direction, threshold: f64) -> Result<()> {
    let mut run = Run::new(ws, "metrics")?;
    let (_, dataset_hash) = ws.hash_inputs()?;
    let registry = parse_stations(&ws.input("stations.csv"))?;
    let route = registry
        .route(direction)
        .ok_or_else(|| anyhow!("no stations for direction {direction}"))?;
    let (events, event_report) = parse_events(&ws.input("events.csv"))?;
    let schedule = parse_schedule(&ws.input("schedule.csv"), &registry)?;
    let shortcuts = parse_shortcuts(&ws.input("shortcuts.csv"), &registry)?;

    let build = build_tables(&events, route, &schedule, threshold)?;
    let on_route: Vec<ShortcutEdge> = shortcuts
        .into_iter()
        .filter(|s| s.direction == direction)
        .collect();
    let validation =
        busroute_core::ingest::validate_shortcuts(&on_route, build.tables.trip_times(), route);

    let mut by_hour: BTreeMap<(usize, u8), Vec<f64>> = BTreeMap::new();
    for r in &build.lateness.records {
        let pos = route
            .position_of(&r.stop_id)
            .expect("lateness only for route stops");
        by_hour
            .entry((pos, timestamp_hour(r.actual_departure)))
            .or_default()
            .push(r.lateness_minutes);
    }
    let lateness_by_hour = by_hour
        .into_iter()
        .map(|((pos, hour), v)| LatenessHour {
            stop_id: route.stop_id(pos).clone(),
            hour,
            median_lateness_minutes: median(&v).expect("nonempty"),
            departures: v.len(),
        })
        .collect();

    let doc = MetricsDoc {
        tool_version: TOOL_VERSION.to_string(),
        dataset_hash: dataset_hash.clone(),
        direction,
        threshold_minutes: threshold,
        events: event_report,
        link_report: build.link_report.clone(),
        trips: build.trips.len(),
        visits_off_route: build.visits_off_route,
        lateness_matched: build.lateness.records.len(),
        lateness_unmatched: build.lateness.report.rejected,
        lateness_by_hour,
        shortcuts_flagged: validation.flagged.clone(),
        shortcuts: validation.accepted.clone(),
        tables: build.tables.clone(),
    };
    run.write(
        "tables/idle_time.csv",
        &to_csv(&build.tables.idle().rows())?,
    )?;
    run.write(
        "tables/trip_time.csv",
        &to_csv(&build.tables.trip_times().rows())?,
    )?;
    run.write(
        "tables/stop_probability.csv",
        &to_csv(&build.tables.probabilities().rows())?,
    )?;
    run.write("tables/lateness.csv", &to_csv(&build.lateness.records)?)?;
    run.write(METRICS, &to_json(&doc)?)?;
    run.manifest.built_at = Some(now());
    println!(
        "built tables for {direction}: {} linked visits, {} trips, {} shortcut(s) accepted, {} flagged",
        doc.link_report.linked,
        doc.trips,
        doc.shortcuts.len(),
        doc.shortcuts_flagged.len()
    );
    run.finish(json!({ "direction": direction, "threshold_minutes": threshold }))
}

/// Loaded tables plus boarding averages, checked against the inputs.
pub struct Loaded {
    pub doc: MetricsDoc,
    pub boardings: BoardingAverages,
}

impl Loaded {
    pub fn planner(&self) -> Planner<'_> {
        Planner::new(
            RoutingContext::new(&self.doc.tables, &self.doc.shortcuts),
            &self.boardings,
        )
    }
}

pub fn load(ws: &Workspace) -> Result<Loaded> {
    ws.manifest()?;
    if !ws.has_tables() {
        bail!("tables not built: run `busroute metrics` first");
    }
    let text = std::fs::read_to_string(ws.path(METRICS)).context("reading metrics")?;
    let doc: MetricsDoc = serde_json::from_str(&text).context("parsing metrics")?;
    let (_, current) = ws.hash_inputs()?;
    if current != doc.dataset_hash {
        bail!("tables are stale: inputs changed since they were built; re-run `busroute metrics`");
    }
    let boardings = parse_boardings(&ws.input("boardings.csv"))?;
    Ok(Loaded { doc, boardings })
}

pub fn propose(ws: &Workspace, depart: ClockTime, args: PlanArgs) -> Result<()> {
    let loaded = load(ws)?;
    let mut run = Run::new(ws, "propose")?;
    let r = args.resolve(depart);
    let planned = loaded.planner().plan(&r.request)?;
    let doc = json!({
        "parameters": params_json(&r),
        "dataset_hash": loaded.doc.dataset_hash,
        "proposal": planned.proposal,
        "pickup": planned.aggregate,
    });
    let bytes = to_json(&doc)?;
    run.write(&format!("reports/propose_{}.json", stamp(depart)), &bytes)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    run.finish(params_json(&r))
}

fn pickup_rows(a: &PickupAggregate) -> Vec<serde_json::Value> {
    a.stops
        .iter()
        .zip(&a.fractions)
        .zip(&a.counts)
        .map(|((s, f), c)| json!({ "stop_id": s, "fraction": f, "passengers": c }))
        .collect()
}

fn pickup_csv(a: &PickupAggregate) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stop_id", "fraction", "passengers"])?;
    for ((s, f), c) in a.stops.iter().zip(&a.fractions).zip(&a.counts) {
        w.write_record([s.to_string(), f.to_string(), c.to_string()])?;
    }
    w.into_inner().map_err(|e| anyhow!("{e}"))
}

pub fn simulate(
    ws: &Workspace,
    depart: ClockTime,
    n_simulations: usize,
    seed: Option<u64>,
) -> Result<()> {
    let loaded = load(ws)?;
    let mut run = Run::new(ws, "simulate")?;
    let r = PlanArgs {
        t_p: 0.0,
        pa_min: 0.0,
        n_simulations,
        seed,
    }
    .resolve(depart);
    let agg = loaded
        .planner()
        .aggregate(depart, n_simulations, r.request.seed)?;
    let params = json!({
        "departure_time": depart.to_string(),
        "n_simulations": n_simulations,
        "seed": r.request.seed,
        "seed_generated": r.seed_generated,
    });
    let doc = json!({
        "parameters": params,
        "dataset_hash": loaded.doc.dataset_hash,
        "aggregate": agg,
        "stations": pickup_rows(&agg),
    });
    let bytes = to_json(&doc)?;
    run.write(&format!("reports/simulate_{}.json", stamp(depart)), &bytes)?;
    run.write(
        &format!("reports/pickup_{}.csv", stamp(depart)),
        &pickup_csv(&agg)?,
    )?;
    print!("{}", String::from_utf8_lossy(&bytes));
    run.finish(params)
}

pub fn dry_run_cmd(
    ws: &Workspace,
    depart: ClockTime,
    args: PlanArgs,
    capacity: Option<u32>,
) -> Result<()> {
    let loaded = load(ws)?;
    let mut run = Run::new(ws, "dry-run")?;
    let r = args.resolve(depart);
    let report = dry_run(&loaded.planner(), &r.request, capacity)?;
    let mut params = params_json(&r);
    params["capacity"] = json!(capacity);
    let doc = json!({
        "parameters": params,
        "dataset_hash": loaded.doc.dataset_hash,
        "rows": [
            { "system": "static", "pickup_fraction_mean": report.static_system.pickup_fraction_mean, "num_stops": report.static_system.num_stops },
            { "system": "semi_dynamic", "pickup_fraction_mean": report.semi_dynamic.pickup_fraction_mean, "num_stops": report.semi_dynamic.num_stops },
        ],
        "report": report,
    });
    let bytes = to_json(&doc)?;
    run.write(&format!("reports/dry_run_{}.json", stamp(depart)), &bytes)?;
    println!(
        "static: pickup {:.3}, {} stops; semi-dynamic: pickup {:.3}, {} stops",
        report.static_system.pickup_fraction_mean,
        report.static_system.num_stops,
        report.semi_dynamic.pickup_fraction_mean,
        report.semi_dynamic.num_stops
    );
    run.finish(params)
}

pub fn allocate(
    ws: &Workspace,
    trip_a: ClockTime,
    max_wait: f64,
    worst_case: bool,
    search_cap: Option<u32>,
    args: PlanArgs,
) -> Result<()> {
    let loaded = load(ws)?;
    let mut run = Run::new(ws, "allocate")?;
    let r = args.resolve(trip_a);
    let planner = loaded.planner();
    let a = planner.plan(&r.request)?;
    let model = if worst_case {
        WaitModel::WorstCase
    } else {
        WaitModel::Median
    };
    let cap = search_cap.unwrap_or(DEFAULT_SEARCH_CAP_MINUTES);
    let result = optimal_second_departure(&a.proposal, max_wait, model, &planner, &r.request, cap)?;
    let mut params = params_json(&r);
    params["max_wait"] = json!(max_wait);
    params["wait_model"] = json!(model);
    params["search_cap"] = json!(cap);
    let row = result.row();
    let doc = json!({
        "parameters": params,
        "dataset_hash": loaded.doc.dataset_hash,
        "row": row,
        "trip_a": a.proposal,
        "result": result,
    });
    let s = stamp(trip_a);
    run.write(&format!("reports/allocate_{s}.json"), &to_json(&doc)?)?;
    run.write(
        &format!("reports/allocate_{s}.csv"),
        &to_csv(&[row.clone()])?,
    )?;
    let note = if result.infeasible {
        " (infeasible: the first candidate already violates)"
    } else if result.capped {
        " (search cap reached without violation)"
    } else {
        ""
    };
    println!(
        "trip A {} -> trip B {}, max wait {}{note}",
        row.trip_a_start, row.trip_b_start, row.max_wait
    );
    run.finish(params)
}

pub fn sweep(
    ws: &Workspace,
    depart: ClockTime,
    t_ps: &[f64],
    pa_mins: &[f64],
    n_simulations: usize,
    seed: Option<u64>,
) -> Result<()> {
    let loaded = load(ws)?;
    let mut run = Run::new(ws, "sweep")?;
    let r = PlanArgs {
        t_p: 0.0,
        pa_min: 0.0,
        n_simulations,
        seed,
    }
    .resolve(depart);
    let report = parameter_sweep(
        &loaded.planner(),
        depart,
        t_ps,
        pa_mins,
        n_simulations,
        r.request.seed,
    )?;
    let params = json!({
        "departure_time": depart.to_string(),
        "t_p_values": t_ps,
        "pa_min_values": pa_mins,
        "n_simulations": n_simulations,
        "seed": r.request.seed,
        "seed_generated": r.seed_generated,
    });
    let s = stamp(depart);
    run.write(
        &format!("reports/sweep_{s}.json"),
        &to_json(&json!({ "parameters": params, "dataset_hash": loaded.doc.dataset_hash, "report": report }))?,
    )?;
    write_sweep_matrices(&mut run, &report, &format!("reports/sweep_{s}"))?;
    println!(
        "swept {} x {} grid at {}",
        t_ps.len(),
        pa_mins.len(),
        depart
    );
    run.finish(params)
}

fn write_sweep_matrices(run: &mut Run<'_>, report: &SweepReport, prefix: &str) -> Result<()> {
    for (metric, name) in [
        (SweepMetric::NumStops, "num_stops"),
        (SweepMetric::TotalMinutes, "total_minutes"),
    ] {
        let mut out = Vec::new();
        report.write_matrix(metric, &mut out)?;
        run.write(&format!("{prefix}_{name}.csv"), &out)?;
    }
    Ok(())
}

fn sorted_reports(ws: &Workspace, prefix: &str) -> Result<Vec<PathBuf>> {
    let dir = ws.path("reports");
    let mut found: Vec<PathBuf> = match std::fs::read_dir(&dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|f| f.to_str())
                    .is_some_and(|f| f.starts_with(prefix) && f.ends_with(".json"))
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    found.sort();
    Ok(found)
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn report(ws: &Workspace) -> Result<()> {
    let loaded = load(ws)?;
    let mut run = Run::new(ws, "report")?;
    let t = &loaded.doc.tables;
    run.write(
        "reports/plots/lateness_by_hour.csv",
        &to_csv(&loaded.doc.lateness_by_hour)?,
    )?;
    run.write("reports/plots/idle_by_hour.csv", &to_csv(&t.idle().rows())?)?;
    run.write(
        "reports/plots/trip_time_by_hour.csv",
        &to_csv(&t.trip_times().rows())?,
    )?;
    run.write(
        "reports/plots/stop_probability_by_hour.csv",
        &to_csv(&t.probabilities().rows())?,
    )?;
    for path in sorted_reports(ws, "simulate_")? {
        let doc = read_json(&path)?;
        let agg: PickupAggregate = serde_json::from_value(doc["aggregate"].clone())?;
        run.write(
            &format!("reports/plots/pickup_{}.csv", stamp(agg.departure_time)),
            &pickup_csv(&agg)?,
        )?;
    }
    for path in sorted_reports(ws, "sweep_")? {
        let doc = read_json(&path)?;
        let sweep: SweepReport = serde_json::from_value(doc["report"].clone())?;
        write_sweep_matrices(
            &mut run,
            &sweep,
            &format!("reports/plots/sweep_{}", stamp(sweep.departure_time)),
        )?;
    }
    println!("wrote {} plot files under reports/plots", run.written.len());
    run.finish(json!({}))
}

pub fn default_threshold() -> f64 {
    DEFAULT_LINK_THRESHOLD_MINUTES
}
