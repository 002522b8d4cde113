use super::{
    compute_timeline, Action, Decision, RouteParameters, RouteProposal, RoutingContext,
    RoutingError, Segment, SegmentKind,
};
use crate::probability::effective_threshold;
use crate::time::ClockTime;

/// Threshold-rule proposal at percentile `t_p`, with its timeline laid.
pub fn propose_route(
    departure: ClockTime,
    t_p: f64,
    ctx: &RoutingContext<'_>,
) -> Result<RouteProposal, RoutingError> {
    let tables = ctx.tables;
    let route = tables.route();
    let probs = tables.probabilities();
    let last = route.terminus_position();

    let mut decisions = Vec::with_capacity(route.len());
    let mut g = 0.0;
    for n in 0..route.len() {
        if n > 0 {
            g += tables.trip_times().minutes(n - 1, (departure + g).hour());
        }
        let hour = (departure + g).hour();
        let probability = probs.effective(n, hour);
        let threshold = effective_threshold(probs, hour, t_p)?.t;
        let mandatory = route.is_endpoint(n);
        let action = if mandatory || probability >= threshold {
            Action::Stop
        } else {
            Action::Skip
        };
        if action == Action::Stop && n != 0 && n != last {
            g += tables.idle().minutes(n, hour);
        }
        decisions.push(Decision {
            stop_id: route.stop_id(n).clone(),
            position: n,
            action,
            hour,
            probability,
            threshold,
            mandatory,
            added_for_pickup: false,
        });
    }

    let proposal = RouteProposal {
        departure_time: departure,
        parameters: RouteParameters {
            t_p,
            pa_min: None,
            n_simulations: None,
            seed: None,
        },
        segments: Vec::new(),
        timeline: Vec::new(),
        total_minutes: 0.0,
        decisions,
    };
    let segments = build_segments(&proposal, ctx, |_, _| true);
    compute_timeline(
        RouteProposal {
            segments,
            ..proposal
        },
        ctx,
    )
}

/// The fixed route that stops everywhere, under the same timeline rules.
pub fn full_stop_route(
    departure: ClockTime,
    ctx: &RoutingContext<'_>,
) -> Result<RouteProposal, RoutingError> {
    let route = ctx.tables.route();
    let probs = ctx.tables.probabilities();
    let mut g = 0.0;
    let mut decisions = Vec::with_capacity(route.len());
    for n in 0..route.len() {
        if n > 0 {
            g += ctx
                .tables
                .trip_times()
                .minutes(n - 1, (departure + g).hour());
        }
        let hour = (departure + g).hour();
        if n != 0 && n != route.terminus_position() {
            g += ctx.tables.idle().minutes(n, hour);
        }
        decisions.push(Decision {
            stop_id: route.stop_id(n).clone(),
            position: n,
            action: Action::Stop,
            hour,
            probability: probs.effective(n, hour),
            threshold: 0.0,
            mandatory: route.is_endpoint(n),
            added_for_pickup: false,
        });
    }
    let proposal = RouteProposal {
        departure_time: departure,
        parameters: RouteParameters {
            t_p: 0.0,
            pa_min: None,
            n_simulations: None,
            seed: None,
        },
        segments: Vec::new(),
        timeline: Vec::new(),
        total_minutes: 0.0,
        decisions,
    };
    let segments = build_segments(&proposal, ctx, |_, _| false);
    compute_timeline(
        RouteProposal {
            segments,
            ..proposal
        },
        ctx,
    )
}

/// One segment per pair of consecutive stopped stations. A shortcut is
/// offered for `(from, to)` when one exists and `allow(from, to)` holds.
pub(super) fn build_segments(
    proposal: &RouteProposal,
    ctx: &RoutingContext<'_>,
    allow: impl Fn(usize, usize) -> bool,
) -> Vec<Segment> {
    let route = ctx.tables.route();
    proposal
        .stopped_positions()
        .windows(2)
        .map(|w| {
            let (from, to) = (w[0], w[1]);
            let (from_stop, to_stop) = (route.stop_id(from).clone(), route.stop_id(to).clone());
            let kind =
                if to > from + 1 && allow(from, to) && ctx.shortcut(&from_stop, &to_stop).is_some()
                {
                    SegmentKind::Shortcut
                } else {
                    SegmentKind::Direct
                };
            Segment {
                passes: (from + 1..to).map(|p| route.stop_id(p).clone()).collect(),
                from_stop,
                to_stop,
                kind,
                minutes: 0.0,
            }
        })
        .collect()
}
