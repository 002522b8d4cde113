//! Writes a synthetic input set (events, stations, schedule, shortcuts,
//! boardings) for one outgoing route into the given directory.
//!
//! ```text
//! cargo run -p busroute-core --example generate_fixture -- fixtures/sample/inputs
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20191007;
const STATIONS: usize = 10;
const DEPARTURES: usize = 30;
const FIRST_DEPARTURE_MIN: i64 = 6 * 60;
const HEADWAY_MIN: i64 = 30;

fn stop(p: usize) -> String {
    format!("S{p:02}")
}

fn base_trip_minutes(p: usize) -> f64 {
    [2.5, 3.0, 2.0, 3.5, 2.5, 3.0, 4.0, 2.0, 3.0][p]
}

fn congestion(hour: i64) -> f64 {
    match hour {
        7..=9 => 1.35,
        16..=18 => 1.25,
        _ => 1.0,
    }
}

fn stop_probability(p: usize, hour: i64) -> f64 {
    let base = [1.0, 0.85, 0.35, 0.7, 0.25, 0.55, 0.9, 0.3, 0.65, 1.0][p];
    if (7..=9).contains(&hour) || (16..=18).contains(&hour) {
        (base + 0.15_f64).min(1.0)
    } else {
        base
    }
}

fn ts(t: NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M:%S").to_string()
}

fn main() {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "fixtures/sample/inputs".into()),
    );
    fs::create_dir_all(&dir).expect("create output directory");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let densities = [
        120.0, 340.0, 80.0, 260.0, 60.0, 180.0, 410.0, 90.0, 150.0, 200.0,
    ];
    let mut stations = String::from(
        "stop_id,name,route_position,population_density,is_origin,is_terminus,direction_id\n",
    );
    for p in 0..STATIONS {
        writeln!(
            stations,
            "{},Station {},{},{},{},{},outgoing",
            stop(p),
            p,
            p,
            densities[p],
            p == 0,
            p + 1 == STATIONS
        )
        .unwrap();
    }

    // schedule: cumulative base trip time plus one minute per intermediate stop
    let mut schedule = String::from("stop_id,scheduled_departure,day_kind\n");
    let mut boardings = String::from("scheduled_departure,average_boardings\n");
    for d in 0..DEPARTURES {
        let start = FIRST_DEPARTURE_MIN + d as i64 * HEADWAY_MIN;
        let mut offset: f64 = 0.0;
        for p in 0..STATIONS {
            let m = start + offset.round() as i64;
            writeln!(schedule, "{},{:02}:{:02},weekday", stop(p), m / 60, m % 60).unwrap();
            if p + 1 < STATIONS {
                offset += base_trip_minutes(p) + 1.0;
            }
        }
        let peak = congestion(start / 60) > 1.0;
        let avg = if peak {
            rng.random_range(30.0..45.0)
        } else {
            rng.random_range(12.0..28.0)
        };
        writeln!(boardings, "{:02}:{:02},{:.1}", start / 60, start % 60, avg).unwrap();
    }

    let days: Vec<NaiveDate> = (0..14)
        .map(|i| NaiveDate::from_ymd_opt(2019, 10, 7).unwrap() + Duration::days(i))
        .filter(|d| chrono::Datelike::weekday(d).number_from_monday() <= 5)
        .collect();

    let mut events =
        String::from("service_date,timestamp,direction_id,event_type,stop_id,trip_id\n");
    let mut rows = 0usize;
    for day in &days {
        let midnight = day.and_hms_opt(0, 0, 0).unwrap();
        for d in 0..DEPARTURES {
            let trip = format!("T{:03}", d);
            let start =
                (FIRST_DEPARTURE_MIN + d as i64 * HEADWAY_MIN) * 60 + rng.random_range(-30..90);
            let mut clock = midnight + Duration::seconds(start);
            // occasional breakdown: the trip stops reporting part way
            let last = if rng.random_bool(0.04) {
                rng.random_range(3..STATIONS - 1)
            } else {
                STATIONS - 1
            };
            for p in 0..=last {
                let hour = (clock - midnight).num_hours();
                let stops =
                    p == 0 || p == STATIONS - 1 || rng.random_bool(stop_probability(p, hour));
                if stops {
                    let dwell = if p == 0 || p == STATIONS - 1 {
                        rng.random_range(20..90)
                    } else if rng.random_bool(0.02) {
                        0
                    } else {
                        rng.random_range(15..100)
                    };
                    writeln!(
                        events,
                        "{day},{},outgoing,arriving,{},{trip}",
                        ts(clock),
                        stop(p)
                    )
                    .unwrap();
                    clock += Duration::seconds(dwell);
                    writeln!(
                        events,
                        "{day},{},outgoing,departing,{},{trip}",
                        ts(clock),
                        stop(p)
                    )
                    .unwrap();
                    rows += 2;
                }
                if p < STATIONS - 1 {
                    let minutes =
                        base_trip_minutes(p) * congestion(hour) * rng.random_range(0.85..1.2);
                    clock += Duration::milliseconds((minutes * 60_000.0) as i64);
                    clock = clock
                        - Duration::nanoseconds(clock.and_utc().timestamp_subsec_nanos() as i64);
                }
            }
        }
    }
    // unparseable rows the ingest step must reject
    events.push_str("2019-10-08,2019-10-08T25:61:00,outgoing,arriving,S03,T005\n");
    events.push_str("2019-10-08,not-a-time,outgoing,departing,S03,T005\n");
    events.push_str("2019-10-09,2019-10-09T08:10:00,sideways,arriving,S02,T004\n");
    events.push_str("2019-10-09,2019-10-09T08:11:00,outgoing,hovering,S02,T004\n");
    events.push_str("2019-10-10,2019-10-10T09:00:00,outgoing,arriving\n");
    // departure with no matching arrival, and one long layover over the link threshold
    events.push_str("2019-10-10,2019-10-10T12:00:00,outgoing,departing,S04,X900\n");
    events.push_str("2019-10-10,2019-10-10T13:00:00,outgoing,arriving,S05,X901\n");
    events.push_str("2019-10-10,2019-10-10T13:45:00,outgoing,departing,S05,X901\n");
    rows += 8;

    // S03 -> S06 is too slow at hour 8; S06 -> S08 is always faster
    let mut shortcuts = String::from("from_stop,to_stop,bypassed_stops,hour,estimated_minutes\n");
    for hour in 6..=21 {
        let est = if hour == 8 { 30.0 } else { 4.0 };
        writeln!(shortcuts, "S03,S06,S04;S05,{hour},{est}").unwrap();
        writeln!(shortcuts, "S06,S08,S07,{hour},4.5").unwrap();
    }

    fs::write(dir.join("stations.csv"), stations).unwrap();
    fs::write(dir.join("schedule.csv"), schedule).unwrap();
    fs::write(dir.join("boardings.csv"), boardings).unwrap();
    fs::write(dir.join("events.csv"), events).unwrap();
    fs::write(dir.join("shortcuts.csv"), shortcuts).unwrap();
    eprintln!(
        "wrote {rows} event rows for {} service days to {}",
        days.len(),
        dir.display()
    );
}
