//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Oracles here are written independently of the library code.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use busroute_core::allocation::{optimal_second_departure, station_waits, WaitModel};
use busroute_core::evaluation::dry_run;
use busroute_core::ingest::{
    BoardingAverages, Direction, EventType, RawEvent, Route, Schedule, ShortcutEdge, Station,
    StopId, TripId,
};
use busroute_core::passenger::aggregate_pickup;
use busroute_core::probability::{build_probability_table, StopProbabilityTable};
use busroute_core::routing::{propose_route, RoutingContext};
use busroute_core::tables::build_tables;
use busroute_core::wrangle::{group_trips, link_events, IdleTimeTable, TripTimeMatrix};
use busroute_core::{ClockTime, HourlyTables, PlanRequest, Planner, ScheduleTime};
use chrono::{NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------- shared fixture helpers ----------

fn stop(p: usize) -> StopId {
    StopId::new(format!("S{p}"))
}

fn route(densities: &[f64]) -> Route {
    let n = densities.len();
    let stations = densities
        .iter()
        .enumerate()
        .map(|(p, &d)| Station {
            stop_id: stop(p),
            name: String::new(),
            route_position: p,
            population_density: d,
            is_origin: p == 0,
            is_terminus: p + 1 == n,
            direction: Direction::Outgoing,
        })
        .collect();
    Route::new(Direction::Outgoing, stations).unwrap()
}

fn event(date: NaiveDate, secs: i64, kind: EventType, p: usize, trip: &str) -> RawEvent {
    RawEvent {
        service_date: date,
        timestamp: date.and_hms_opt(0, 0, 0).unwrap() + chrono::Duration::seconds(secs),
        direction: Direction::Outgoing,
        event_type: kind,
        stop_id: stop(p),
        trip_id: TripId::from(trip),
    }
}

/// Ground truth of one synthetic trip: arrival second for each stopped position.
struct TruthTrip {
    stops: BTreeMap<usize, i64>,
}

/// Random trips on a route of `n` stations; returns events and the truth.
fn synthetic_trips(
    n: usize,
    trips: usize,
    seed: u64,
    zero_dwell_every: usize,
) -> (Vec<RawEvent>, Vec<TruthTrip>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut truth = Vec::new();
    let mut zero_pairs = 0;
    for t in 0..trips {
        let date = NaiveDate::from_ymd_opt(2019, 10, 7 + (t % 5) as u32).unwrap();
        let name = format!("T{t}");
        let (first, last) = if rng.random_bool(0.2) {
            let a = rng.random_range(0..n - 1);
            (a, rng.random_range(a + 1..n))
        } else {
            (0, n - 1)
        };
        let mut clock: i64 = rng.random_range(5 * 3600..22 * 3600);
        let mut stops = BTreeMap::new();
        for p in first..=last {
            let stopped = p == first || p == last || rng.random_bool(0.55);
            if stopped {
                let dwell = if zero_dwell_every > 0 && (t * n + p) % zero_dwell_every == 0 {
                    zero_pairs += 1;
                    0
                } else {
                    rng.random_range(20..240)
                };
                events.push(event(date, clock, EventType::Arriving, p, &name));
                events.push(event(date, clock + dwell, EventType::Departing, p, &name));
                if dwell > 0 {
                    stops.insert(p, clock);
                }
                clock += dwell;
            }
            clock += rng.random_range(90..600);
        }
        truth.push(TruthTrip { stops });
    }
    (events, truth, zero_pairs)
}

// ---------- criterion 1 ----------

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let r = route(&[1.0; 5]);
    let (events, truth, _) = synthetic_trips(5, 20, 101, 0);
    let linked = link_events(&events, 30.0).map_err(|e| e.to_string())?;
    let (trips, _) = group_trips(&linked.visits, &r);
    let table = build_probability_table(&trips, &r);

    let mut expect = [[(0u32, 0u32); 24]; 5];
    for t in &truth {
        let (Some((&first, _)), Some((&last, _))) =
            (t.stops.iter().next(), t.stops.iter().next_back())
        else {
            continue;
        };
        for p in first..=last {
            let (secs, stopped) = match t.stops.get(&p) {
                Some(&s) => (s, true),
                None => {
                    let before = t.stops.range(..p).map(|(_, &s)| s).max();
                    let after = t.stops.range(p + 1..).map(|(_, &s)| s).min();
                    (before.or(after).unwrap(), false)
                }
            };
            let cell = &mut expect[p][(secs / 3600 % 24) as usize];
            cell.1 += 1;
            cell.0 += u32::from(stopped);
        }
    }
    for (p, row) in expect.iter().enumerate() {
        for (h, &(stopped, passed)) in row.iter().enumerate() {
            let c = table.cell(p, h as u8);
            ensure!(
                (c.stopped, c.passed) == (stopped, passed),
                "cell ({p},{h}): got {}/{}, recount {stopped}/{passed}",
                c.stopped,
                c.passed
            );
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("120 cells match recount in {elapsed:.2?}"))
}

// ---------- criterion 2 ----------

struct RawTables {
    idle: Vec<[f64; 24]>,
    trip: Vec<[f64; 24]>,
    prob: Vec<[(u32, u32); 24]>,
    shortcut: (usize, usize, BTreeMap<u8, f64>),
}

fn routing_fixture() -> (RawTables, HourlyTables, Vec<ShortcutEdge>) {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let n = 5;
    let idle: Vec<[f64; 24]> = (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.2..3.0)))
        .collect();
    let trip: Vec<[f64; 24]> = (0..n - 1)
        .map(|_| std::array::from_fn(|_| rng.random_range(1.5..9.0)))
        .collect();
    let prob: Vec<[(u32, u32); 24]> = (0..n)
        .map(|_| {
            std::array::from_fn(|_| {
                let passed = rng.random_range(1..12);
                (rng.random_range(0..=passed), passed)
            })
        })
        .collect();
    let estimates: BTreeMap<u8, f64> = (0..24).map(|h| (h, rng.random_range(4.0..14.0))).collect();

    let r = route(&[1.0; 5]);
    let mut it = IdleTimeTable::constant(&r, &[0.0; 5]);
    let mut tt = TripTimeMatrix::constant(&r, &[1.0; 4]);
    let mut pt = StopProbabilityTable::constant(&r, &[(0, 0); 5]);
    for h in 0..24u8 {
        for p in 0..n {
            it = it.with_cell(p, h, idle[p][h as usize]);
            let (s, pa) = prob[p][h as usize];
            pt = pt.with_cell(p, h, s, pa);
        }
        for p in 0..n - 1 {
            tt = tt.with_cell(p, h, trip[p][h as usize]);
        }
    }
    let tables = HourlyTables::new(r, it, tt, pt).unwrap();
    let edge = ShortcutEdge {
        direction: Direction::Outgoing,
        from_stop: stop(0),
        to_stop: stop(3),
        bypassed_stops: vec![stop(1), stop(2)],
        estimated_minutes_per_hour: estimates.clone(),
    };
    (
        RawTables {
            idle,
            trip,
            prob,
            shortcut: (0, 3, estimates),
        },
        tables,
        vec![edge],
    )
}

fn hour(m: f64) -> usize {
    (m / 60.0).floor().rem_euclid(24.0) as usize
}

fn oracle_percentile(mut v: Vec<f64>, pct: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let rank = pct / 100.0 * (v.len() - 1) as f64;
    let (lo, hi) = (rank.floor() as usize, rank.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (rank - lo as f64)
}

/// Whether `pattern` (stop flags) is what the threshold rule produces when
/// the clock is advanced under that same pattern.
fn consistent(raw: &RawTables, dep: f64, t_p: f64, pattern: &[bool]) -> bool {
    let n = pattern.len();
    let mut clock = dep;
    for s in 0..n {
        if s > 0 {
            clock += raw.trip[s - 1][hour(clock)];
        }
        let h = hour(clock);
        let probs: Vec<f64> = (0..n)
            .map(|q| f64::from(raw.prob[q][h].0) / f64::from(raw.prob[q][h].1))
            .collect();
        let rule = s == 0 || s == n - 1 || probs[s] >= oracle_percentile(probs.clone(), t_p);
        if rule != pattern[s] {
            return false;
        }
        if pattern[s] && s != 0 && s != n - 1 {
            clock += raw.idle[s][h];
        }
    }
    true
}

/// Straight-line chronology for a fixed stop pattern.
fn interpret(raw: &RawTables, dep: f64, pattern: &[bool]) -> f64 {
    let n = pattern.len();
    let stopped: Vec<usize> = (0..n).filter(|&s| pattern[s]).collect();
    let mut clock = dep;
    for w in stopped.windows(2) {
        let (i, j) = (w[0], w[1]);
        let mut direct = 0.0;
        for p in i..j {
            direct += raw.trip[p][hour(clock + direct)];
        }
        let mut seg = direct;
        if j > i + 1 && (i, j) == (raw.shortcut.0, raw.shortcut.1) {
            if let Some(&est) = raw.shortcut.2.get(&(hour(clock) as u8)) {
                if est < direct {
                    seg = est;
                }
            }
        }
        clock += seg;
        if j != n - 1 {
            clock += raw.idle[j][hour(clock)];
        }
    }
    clock - dep
}

fn criterion_2() -> Outcome {
    let (raw, tables, shortcuts) = routing_fixture();
    let ctx = RoutingContext::new(&tables, &shortcuts);
    let departures = [
        7 * 60 + 50,
        8 * 60 + 57,
        12 * 60,
        16 * 60 + 58,
        23 * 60 + 50,
    ];
    let mut shortcut_used = 0;
    let mut checked = 0;
    for &d in &departures {
        let dep = f64::from(d);
        for t_p in [0.0, 25.0, 50.0, 75.0, 100.0] {
            let proposal = propose_route(ClockTime::from_minutes(dep), t_p, &ctx)
                .map_err(|e| e.to_string())?;
            let patterns: Vec<Vec<bool>> = (0..8u32)
                .map(|bits| {
                    let mut p = vec![true; 5];
                    for k in 0..3 {
                        p[k + 1] = bits & (1 << k) != 0;
                    }
                    p
                })
                .filter(|p| consistent(&raw, dep, t_p, p))
                .collect();
            ensure!(
                patterns.len() == 1,
                "dep {d} t_p {t_p}: {} consistent patterns",
                patterns.len()
            );
            let pattern = &patterns[0];
            let got: Vec<bool> = (0..5).map(|s| proposal.is_stopped(s)).collect();
            ensure!(
                &got == pattern,
                "dep {d} t_p {t_p}: stops {got:?}, oracle {pattern:?}"
            );
            let expect = interpret(&raw, dep, pattern);
            ensure!(
                (proposal.total_minutes - expect).abs() <= 1e-9,
                "dep {d} t_p {t_p}: total {} vs oracle {expect}",
                proposal.total_minutes
            );
            shortcut_used += proposal
                .segments
                .iter()
                .filter(|s| s.kind == busroute_core::routing::SegmentKind::Shortcut)
                .count();
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} proposals match the oracle ({shortcut_used} used the shortcut)"
    ))
}

// ---------- criteria 3, 5, 6: flat fixtures ----------

fn flat(densities: &[f64], idle: &[f64], trips: &[f64], probs: &[(u32, u32)]) -> HourlyTables {
    let r = route(densities);
    HourlyTables::new(
        r.clone(),
        IdleTimeTable::constant(&r, idle),
        TripTimeMatrix::constant(&r, trips),
        StopProbabilityTable::constant(&r, probs),
    )
    .unwrap()
}

fn flat_fixture() -> HourlyTables {
    flat(
        &[90.0, 300.0, 40.0, 220.0, 75.0, 160.0, 410.0, 30.0, 100.0],
        &[0.0, 1.0, 0.5, 1.5, 0.75, 1.0, 2.0, 0.5, 1.0],
        &[3.0, 2.5, 4.0, 3.5, 2.0, 3.0, 4.5, 2.5],
        &[
            (10, 10),
            (8, 10),
            (2, 10),
            (7, 10),
            (3, 10),
            (5, 10),
            (9, 10),
            (1, 10),
            (6, 10),
        ],
    )
}

fn flat_shortcuts() -> Vec<ShortcutEdge> {
    vec![ShortcutEdge {
        direction: Direction::Outgoing,
        from_stop: stop(3),
        to_stop: stop(5),
        bypassed_stops: vec![stop(4)],
        estimated_minutes_per_hour: (0..24).map(|h| (h, 4.0)).collect(),
    }]
}

fn averages(per_departure: f64) -> BoardingAverages {
    BoardingAverages::new(
        (6..22)
            .map(|h| (ScheduleTime::from_minutes(h * 60).unwrap(), per_departure))
            .collect(),
    )
}

fn criterion_3() -> Outcome {
    let t = flat_fixture();
    let sc = flat_shortcuts();
    let b = averages(40.0);
    let planner = Planner::new(RoutingContext::new(&t, &sc), &b);
    let tps: Vec<f64> = (0..=20).map(|i| f64::from(i) * 5.0).collect();
    let pas: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    for dep in [ClockTime::from_hm(7, 15), ClockTime::from_hm(13, 40)] {
        let mut prev = usize::MAX;
        for &t_p in &tps {
            let n = propose_route(dep, t_p, &planner.ctx)
                .map_err(|e| e.to_string())?
                .num_stops();
            ensure!(n <= prev, "(a) num_stops rose to {n} at t_p {t_p}");
            prev = n;
        }
        for t_p in [10.0, 40.0, 70.0, 100.0] {
            let (mut stops, mut minutes) = (0usize, f64::NEG_INFINITY);
            for &pa in &pas {
                let req = PlanRequest {
                    departure: dep,
                    t_p,
                    pa_min: pa,
                    n_simulations: 50,
                    seed: 5,
                };
                let p = planner.plan(&req).map_err(|e| e.to_string())?.proposal;
                ensure!(
                    p.num_stops() >= stops,
                    "(b) num_stops fell at t_p {t_p} pa {pa}"
                );
                ensure!(
                    p.total_minutes >= minutes,
                    "(b) total_minutes fell at t_p {t_p} pa {pa}"
                );
                stops = p.num_stops();
                minutes = p.total_minutes;
            }
        }
    }
    let req = PlanRequest {
        departure: ClockTime::from_hm(9, 30),
        t_p: 40.0,
        pa_min: 0.6,
        n_simulations: 50,
        seed: 5,
    };
    let a = planner.plan(&req).map_err(|e| e.to_string())?.proposal;
    let mut prev = f64::NEG_INFINITY;
    for limit in 1..=25 {
        let r =
            optimal_second_departure(&a, f64::from(limit), WaitModel::Median, &planner, &req, 120)
                .map_err(|e| e.to_string())?;
        let s = r.trip_b_start.minutes();
        ensure!(s >= prev, "(c) trip_b_start fell at limit {limit}");
        prev = s;
    }
    Ok("(a) t_p, (b) PA_min, (c) max wait all monotone".into())
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let r = route(&[100.0, 300.0, 50.0]);
    let probs = [0.5, 0.5, 0.2];
    let dep = ClockTime::from_hm(8, 0);
    let a = aggregate_pickup(&r, dep, 10_000, &probs, 100, 42).map_err(|e| e.to_string())?;
    let again = aggregate_pickup(&r, dep, 10_000, &probs, 100, 42).map_err(|e| e.to_string())?;
    ensure!(a == again, "rerun differs");
    // stage one picks by probability; the tied pair then splits by density
    let total_p: f64 = probs.iter().sum();
    let tied = (probs[0] + probs[1]) / total_p;
    let expect = [
        tied * 100.0 / 400.0,
        tied * 300.0 / 400.0,
        probs[2] / total_p,
    ];
    let n = 100.0 * 10_000.0;
    for (i, (&got, &e)) in a.fractions.iter().zip(&expect).enumerate() {
        let sigma = (e * (1.0 - e) / n).sqrt();
        ensure!(
            (got - e).abs() <= 3.0 * sigma,
            "station {i}: {got} vs {e} (3 sigma {})",
            3.0 * sigma
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "fractions {:.4}/{:.4}/{:.4} vs {:.4}/{:.4}/{:.4}, deterministic, {elapsed:.2?}",
        a.fractions[0], a.fractions[1], a.fractions[2], expect[0], expect[1], expect[2]
    ))
}

fn criterion_5() -> Outcome {
    let t = flat_fixture();
    let sc = flat_shortcuts();
    let b = averages(40.0);
    let planner = Planner::new(RoutingContext::new(&t, &sc), &b);
    for dep in [ClockTime::from_hm(7, 30), ClockTime::from_hm(17, 5)] {
        for t_p in [25.0, 50.0, 90.0] {
            let req = PlanRequest {
                departure: dep,
                t_p,
                pa_min: 1.0,
                n_simulations: 100,
                seed: 9,
            };
            let r = dry_run(&planner, &req, None).map_err(|e| e.to_string())?;
            ensure!(
                r.semi_dynamic.pickup_fraction_mean == r.static_system.pickup_fraction_mean,
                "PA_min 1.0: {} vs {}",
                r.semi_dynamic.pickup_fraction_mean,
                r.static_system.pickup_fraction_mean
            );
            ensure!(
                r.static_system.pickup_fraction_mean == 1.0,
                "static pickup below 1"
            );
        }
        let req = PlanRequest {
            departure: dep,
            t_p: 0.0,
            pa_min: 0.0,
            n_simulations: 100,
            seed: 9,
        };
        let r = dry_run(&planner, &req, None).map_err(|e| e.to_string())?;
        ensure!(
            r.semi_dynamic.route.stopped_positions() == r.static_system.route.stopped_positions(),
            "t_p 0 should stop everywhere"
        );
        ensure!(
            r.semi_dynamic.pickup_fractions == r.static_system.pickup_fractions
                && r.semi_dynamic.num_stops == r.static_system.num_stops,
            "identical stop sets scored differently"
        );
    }
    Ok("PA_min=1 equals static exactly; identical stop sets give identical reports".into())
}

fn criterion_6() -> Outcome {
    let t = flat(
        &[1.0; 6],
        &[0.0, 1.0, 0.5, 2.0, 1.5, 1.0],
        &[3.0, 4.0, 2.0, 5.0, 3.0],
        &[(1, 1); 6],
    );
    let b = averages(30.0);
    let planner = Planner::new(RoutingContext::new(&t, &[]), &b);
    let req = PlanRequest {
        departure: ClockTime::from_hm(9, 30),
        t_p: 50.0,
        pa_min: 0.0,
        n_simulations: 20,
        seed: 3,
    };
    let a = planner.plan(&req).map_err(|e| e.to_string())?.proposal;
    let limit = 10.0;
    let r = optimal_second_departure(&a, limit, WaitModel::Median, &planner, &req, 120)
        .map_err(|e| e.to_string())?;
    // with hour-independent tables B is A shifted by k; the origin gap k binds
    ensure!(
        r.offset_minutes() == 2.0 * limit,
        "offset {} vs closed form {}",
        r.offset_minutes(),
        2.0 * limit
    );
    ensure!(
        r.waits.iter().all(|w| w.minutes <= limit),
        "proxy above limit at returned start"
    );
    let after = planner
        .plan(&req.at(r.trip_b_start + 1.0))
        .map_err(|e| e.to_string())?
        .proposal;
    let w_after = station_waits(&a, &after, WaitModel::Median);
    ensure!(
        w_after.iter().any(|w| w.minutes > limit),
        "start + 1 does not violate"
    );
    let b_trip = r.trip_b.as_ref().ok_or("no trip B")?;
    let med = station_waits(&a, b_trip, WaitModel::Median);
    let worst = station_waits(&a, b_trip, WaitModel::WorstCase);
    ensure!(
        med.iter()
            .zip(&worst)
            .all(|(m, w)| w.minutes == 2.0 * m.minutes),
        "worst case is not twice the median proxy"
    );
    Ok(format!(
        "trip B at +{} min; start+1 violates; worst = 2 x median at {} stations",
        r.offset_minutes(),
        med.len()
    ))
}

fn criterion_7() -> Outcome {
    let threshold = 30.0;
    let r = route(&[1.0; 6]);
    let (mut events, _, zero_pairs) = synthetic_trips(6, 120, 707, 17);
    // a breakdown: departure far beyond the threshold
    let date = NaiveDate::from_ymd_opt(2019, 10, 9).unwrap();
    events.push(event(date, 10 * 3600, EventType::Arriving, 2, "BRK"));
    events.push(event(
        date,
        10 * 3600 + 45 * 60,
        EventType::Departing,
        2,
        "BRK",
    ));

    let base = link_events(&events, threshold).map_err(|e| e.to_string())?;
    for v in &base.visits {
        ensure!(
            v.idle_minutes > 0.0 && v.idle_minutes < threshold,
            "idle {} out of range",
            v.idle_minutes
        );
        let diff = (v.departure - v.arrival).num_milliseconds() as f64 / 60_000.0;
        ensure!(
            (diff - v.idle_minutes).abs() < 1e-9,
            "idle does not match timestamps"
        );
    }
    let zero_in_input = count_zero_pairs(&events);
    ensure!(
        zero_in_input == zero_pairs && zero_pairs > 0,
        "fixture has {zero_in_input} zero pairs"
    );
    ensure!(
        base.report.same_instant == zero_pairs,
        "zero-difference pairs not all discarded"
    );
    ensure!(
        base.visits.iter().all(|v| v.trip_id.0 != "BRK"),
        "breakdown linked"
    );

    let build =
        build_tables(&events, &r, &Schedule::default(), threshold).map_err(|e| e.to_string())?;
    let t = &build.tables;
    for h in 0..24u8 {
        for p in 0..r.len() {
            let idle = t.idle().minutes(p, h);
            ensure!(idle.is_finite() && idle > 0.0, "idle ({p},{h}) = {idle}");
            let prob = t.probabilities().effective(p, h);
            ensure!(
                (0.0..=1.0).contains(&prob),
                "probability ({p},{h}) = {prob}"
            );
        }
        for p in 0..r.len() - 1 {
            let m = t.trip_times().minutes(p, h);
            ensure!(m.is_finite() && m > 0.0, "trip ({p},{h}) = {m}");
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..10 {
        let mut shuffled = events.clone();
        shuffled.shuffle(&mut rng);
        let again = link_events(&shuffled, threshold).map_err(|e| e.to_string())?;
        ensure!(again == base, "shuffle {i} changed the linking");
    }
    Ok(format!(
        "{} visits in (0, {threshold}), {zero_pairs} zero pairs dropped, tables total, 10 shuffles stable",
        base.visits.len()
    ))
}

fn count_zero_pairs(events: &[RawEvent]) -> usize {
    let key = |e: &RawEvent| {
        (
            e.service_date,
            e.trip_id.clone(),
            e.stop_id.clone(),
            e.timestamp,
        )
    };
    let arrivals: std::collections::BTreeSet<(NaiveDate, TripId, StopId, NaiveDateTime)> = events
        .iter()
        .filter(|e| e.event_type == EventType::Arriving)
        .map(key)
        .collect();
    events
        .iter()
        .filter(|e| e.event_type == EventType::Departing && arrivals.contains(&key(e)))
        .count()
}

// ---------- criterion 8 ----------

fn sample_inputs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/sample/inputs")
}

fn run_pipeline(ws: &Path) -> Result<(), String> {
    let inputs = sample_inputs();
    let steps: [&[&str]; 9] = [
        &["ingest", "--from", inputs.to_str().unwrap()],
        &["metrics"],
        &[
            "propose", "--depart", "07:30", "--tp", "25", "--pa-min", "0.8", "--sims", "100",
            "--seed", "7",
        ],
        &[
            "simulate", "--depart", "07:30", "--sims", "100", "--seed", "7",
        ],
        &[
            "dry-run",
            "--depart",
            "07:30",
            "--tp",
            "50",
            "--pa-min",
            "0.6",
            "--seed",
            "7",
            "--capacity",
        ],
        &[
            "allocate",
            "--trip-a",
            "09:30",
            "--max-wait",
            "10",
            "--tp",
            "50",
            "--seed",
            "7",
        ],
        &["sweep", "--depart", "08:00", "--sims", "50", "--seed", "7"],
        &["report"],
        &["metrics"],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_busroute"))
            .arg("--workspace")
            .arg(ws)
            .args(args)
            .env("SOURCE_DATE_EPOCH", "1571011200")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "{args:?} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    Ok(())
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    files
}

fn criterion_8() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_pipeline(a.path())?;
    run_pipeline(b.path())?;
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    ensure!(ta.keys().eq(tb.keys()), "artifact sets differ");
    for (path, bytes) in &ta {
        ensure!(tb[path] == *bytes, "{} differs", path.display());
    }
    ensure!(ta.len() > 20, "only {} artifacts", ta.len());
    Ok(format!("{} files byte-identical across two runs", ta.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("probability table equals brute-force recount", criterion_1),
        ("routing equals straight-line oracle", criterion_2),
        ("monotonicity suite", criterion_3),
        ("passenger sampler statistics", criterion_4),
        ("dry-run degenerate equalities", criterion_5),
        ("allocation constraint", criterion_6),
        ("wrangling invariants", criterion_7),
        ("pipeline determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
