use super::{
    Action, RouteProposal, RoutingContext, RoutingError, Segment, SegmentKind, TimelineEntry,
};
use crate::time::ClockTime;

/// Minutes from `from` to `to` along the direct segments, leaving at `start`;
/// each segment's trip time is read at the clock hour when it begins.
pub fn direct_minutes(ctx: &RoutingContext<'_>, from: usize, to: usize, start: ClockTime) -> f64 {
    let trips = ctx.tables.trip_times();
    let mut elapsed = 0.0;
    for p in from..to {
        elapsed += trips.minutes(p, (start + elapsed).hour());
    }
    elapsed
}

/// Recomputes segment minutes, the per-station timeline and the total from
/// the proposal's decisions and segment kinds.
pub fn compute_timeline(
    route: RouteProposal,
    ctx: &RoutingContext<'_>,
) -> Result<RouteProposal, RoutingError> {
    let tables = ctx.tables;
    let r = tables.route();
    if route.decisions.len() != r.len() {
        return Err(RoutingError::Inconsistent(format!(
            "{} decisions for {} stations",
            route.decisions.len(),
            r.len()
        )));
    }
    let stopped = route.stopped_positions();
    if stopped.first() != Some(&0) || stopped.last() != Some(&r.terminus_position()) {
        return Err(RoutingError::Inconsistent(
            "origin and terminus must be stopped".into(),
        ));
    }
    if route.segments.len() + 1 != stopped.len()
        || route
            .segments
            .iter()
            .zip(stopped.windows(2))
            .any(|(s, w)| &s.from_stop != r.stop_id(w[0]) || &s.to_stop != r.stop_id(w[1]))
    {
        return Err(RoutingError::Inconsistent(
            "segments must join consecutive stopped stations".into(),
        ));
    }

    let depart = route.departure_time;
    let mut g = 0.0;
    let mut timeline = vec![entry(r.stop_id(0).clone(), depart, depart)];
    let mut segments = Vec::with_capacity(route.segments.len());
    for (seg, w) in route.segments.iter().zip(stopped.windows(2)) {
        let (from, to) = (w[0], w[1]);
        let clock = depart + g;
        let direct = direct_minutes(ctx, from, to, clock);
        let shortcut = match seg.kind {
            SegmentKind::Shortcut => ctx
                .shortcut(&seg.from_stop, &seg.to_stop)
                .and_then(|s| s.estimate(clock.hour()))
                .filter(|&est| est < direct),
            SegmentKind::Direct => None,
        };
        let (kind, minutes) = match shortcut {
            Some(est) => (SegmentKind::Shortcut, est),
            None => (SegmentKind::Direct, direct),
        };
        g += minutes;
        let arrival = depart + g;
        let dwell = tables.idle().minutes(to, arrival.hour());
        if to != r.terminus_position() {
            g += dwell;
        }
        timeline.push(entry(r.stop_id(to).clone(), arrival, arrival + dwell));
        segments.push(Segment {
            kind,
            minutes,
            ..seg.clone()
        });
    }
    debug_assert!(route
        .decisions
        .iter()
        .all(|d| d.action == Action::Stop || !d.mandatory));
    Ok(RouteProposal {
        segments,
        timeline,
        total_minutes: g,
        ..route
    })
}

fn entry(
    stop_id: crate::ingest::StopId,
    arrival: ClockTime,
    departure: ClockTime,
) -> TimelineEntry {
    TimelineEntry {
        stop_id,
        arrival_clock: arrival.to_string(),
        departure_clock: departure.to_string(),
        arrival,
        departure,
    }
}
