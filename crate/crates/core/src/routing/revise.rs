use super::propose::build_segments;
use super::{compute_timeline, Action, RouteProposal, RoutingContext, RoutingError};
use crate::passenger::PickupAggregate;

/// Slack on the coverage target so that a target of exactly 1.0 is met by
/// stopping at every station with a nonzero count.
pub const COVERAGE_TOLERANCE: f64 = 1e-12;

/// Adds skipped stations, largest pickup share first, until the stopped set
/// covers at least `pa_min` of the simulated passengers.
///
/// Stops are never removed. Segments that are split by an added stop become
/// direct; untouched segments keep their shortcut offer.
pub fn revise_for_pickup(
    proposal: RouteProposal,
    aggregate: &PickupAggregate,
    pa_min: f64,
    ctx: &RoutingContext<'_>,
) -> Result<RouteProposal, RoutingError> {
    if !(0.0..=1.0).contains(&pa_min) {
        return Err(RoutingError::InvalidPaMin(pa_min));
    }
    let route = ctx.tables.route();
    let expected = route.stop_ids();
    if aggregate.stops != expected || proposal.decisions.len() != expected.len() {
        return Err(RoutingError::AggregateMismatch {
            expected,
            found: aggregate.stops.clone(),
        });
    }

    let grand = aggregate.grand_total() as f64;
    let target = (pa_min - COVERAGE_TOLERANCE) * grand;
    let mut covered: u64 = (0..expected.len())
        .filter(|&p| proposal.is_stopped(p))
        .map(|p| aggregate.counts[p])
        .sum();

    let mut candidates: Vec<usize> = (0..expected.len())
        .filter(|&p| !proposal.is_stopped(p) && aggregate.counts[p] > 0)
        .collect();
    candidates.sort_by(|&a, &b| {
        aggregate.counts[b]
            .cmp(&aggregate.counts[a])
            .then(a.cmp(&b))
    });

    let mut revised = proposal;
    revised.parameters.pa_min = Some(pa_min);
    revised.parameters.n_simulations = Some(aggregate.n_simulations);
    revised.parameters.seed = Some(aggregate.rng_seed);

    let mut added = false;
    for p in candidates {
        if covered as f64 >= target {
            break;
        }
        let d = &mut revised.decisions[p];
        d.action = Action::Stop;
        d.added_for_pickup = true;
        covered += aggregate.counts[p];
        added = true;
    }
    if !added {
        return Ok(revised);
    }

    let original: Vec<(usize, usize)> = revised
        .segments
        .iter()
        .filter_map(|s| {
            Some((
                route.position_of(&s.from_stop)?,
                route.position_of(&s.to_stop)?,
            ))
        })
        .collect();
    let segments = build_segments(&revised, ctx, |from, to| original.contains(&(from, to)));
    compute_timeline(
        RouteProposal {
            segments,
            ..revised
        },
        ctx,
    )
}
