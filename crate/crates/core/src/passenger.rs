//! Artificial passenger boardings and their aggregation into pickup shares.
//!
//! Each passenger is placed independently: first a station is drawn with
//! weight equal to its stopping probability; if that probability value is
//! shared exactly by other stations, the passenger is re-drawn among that
//! tied group with weights proportional to population density.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`): simulation `i` of a run
//! with seed `s` uses `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`.
//! Outputs are therefore reproducible from the seed alone, independent of
//! thread count.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{BoardingAverages, Route, StopId};
use crate::par::Execution;
use crate::time::ClockTime;

pub const DEFAULT_SIMULATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PassengerError {
    #[error("degenerate probability vector: no station has a positive stopping probability")]
    DegenerateProbabilities,
    #[error("{probs} probabilities for {densities} densities")]
    LengthMismatch { probs: usize, densities: usize },
    #[error("invalid weight {value} at station {index}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("at least one simulation is required")]
    NoSimulations,
    #[error("pickup shares are undefined for zero boardings")]
    ZeroBoardings,
    #[error("boarding averages file is empty")]
    EmptyBoardings,
}

/// The RNG stream used by simulation `index` of a run seeded with `seed`.
pub fn simulation_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One simulated boarding assignment, counts in route order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassengerScenario {
    pub total_boardings: u32,
    pub counts: Vec<u32>,
}

/// Precomputed two-stage sampler for one probability/density vector.
#[derive(Debug, Clone)]
pub struct PassengerSampler {
    base: WeightedIndex<f64>,
    /// For stations whose probability is tied with others: the tied group
    /// and its density weights.
    ties: Vec<Option<(Vec<usize>, WeightedIndex<f64>)>>,
}

impl PassengerSampler {
    pub fn new(probs: &[f64], densities: &[f64]) -> Result<Self, PassengerError> {
        if probs.len() != densities.len() {
            return Err(PassengerError::LengthMismatch {
                probs: probs.len(),
                densities: densities.len(),
            });
        }
        for (index, &value) in probs.iter().chain(densities).enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(PassengerError::InvalidWeight {
                    index: index % probs.len().max(1),
                    value,
                });
            }
        }
        let base =
            WeightedIndex::new(probs).map_err(|_| PassengerError::DegenerateProbabilities)?;
        let ties = probs
            .iter()
            .map(|&p| {
                if p <= 0.0 {
                    return None;
                }
                let group: Vec<usize> = (0..probs.len()).filter(|&j| probs[j] == p).collect();
                if group.len() < 2 {
                    return None;
                }
                // an all-zero density group keeps the original draw
                let weights = WeightedIndex::new(group.iter().map(|&j| densities[j])).ok()?;
                Some((group, weights))
            })
            .collect();
        Ok(PassengerSampler { base, ties })
    }

    pub fn stations(&self) -> usize {
        self.ties.len()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let first = self.base.sample(rng);
        match &self.ties[first] {
            Some((group, weights)) => group[weights.sample(rng)],
            None => first,
        }
    }

    pub fn scenario<R: Rng + ?Sized>(&self, total: u32, rng: &mut R) -> PassengerScenario {
        let mut counts = vec![0u32; self.stations()];
        for _ in 0..total {
            counts[self.draw(rng)] += 1;
        }
        PassengerScenario {
            total_boardings: total,
            counts,
        }
    }

    /// Scenario `index` of a run seeded with `seed`.
    pub fn simulation(&self, total: u32, seed: u64, index: usize) -> PassengerScenario {
        self.scenario(total, &mut simulation_rng(seed, index as u64))
    }
}

pub fn generate_scenario<R: Rng + ?Sized>(
    total: u32,
    probs_at_hour: &[f64],
    densities: &[f64],
    rng: &mut R,
) -> Result<PassengerScenario, PassengerError> {
    Ok(PassengerSampler::new(probs_at_hour, densities)?.scenario(total, rng))
}

/// Mean per-station share of boardings over `n_simulations` scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickupAggregate {
    pub departure_time: ClockTime,
    pub total_boardings: u32,
    pub n_simulations: usize,
    pub rng_seed: u64,
    pub stops: Vec<StopId>,
    /// Passengers assigned to each station, summed over all simulations.
    pub counts: Vec<u64>,
    pub fractions: Vec<f64>,
}

impl PickupAggregate {
    /// Total passengers over all simulations.
    pub fn grand_total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn fraction_of(&self, stop: &StopId) -> Option<f64> {
        self.stops
            .iter()
            .position(|s| s == stop)
            .map(|i| self.fractions[i])
    }
}

pub fn aggregate_pickup(
    route: &Route,
    departure_time: ClockTime,
    total: u32,
    probs: &[f64],
    n_simulations: usize,
    seed: u64,
) -> Result<PickupAggregate, PassengerError> {
    aggregate_pickup_with(
        Execution::default(),
        route,
        departure_time,
        total,
        probs,
        n_simulations,
        seed,
    )
}

pub fn aggregate_pickup_with(
    execution: Execution,
    route: &Route,
    departure_time: ClockTime,
    total: u32,
    probs: &[f64],
    n_simulations: usize,
    seed: u64,
) -> Result<PickupAggregate, PassengerError> {
    if n_simulations == 0 {
        return Err(PassengerError::NoSimulations);
    }
    if total == 0 {
        return Err(PassengerError::ZeroBoardings);
    }
    let sampler = PassengerSampler::new(probs, &route.densities())?;
    let per_sim = execution.map_range(n_simulations, |i| sampler.simulation(total, seed, i).counts);
    let mut counts = vec![0u64; route.len()];
    for sim in &per_sim {
        for (acc, &c) in counts.iter_mut().zip(sim) {
            *acc += u64::from(c);
        }
    }
    // every scenario has the same total, so the mean share is count / (n * total)
    let grand = (n_simulations as u64 * u64::from(total)) as f64;
    let fractions = counts.iter().map(|&c| c as f64 / grand).collect();
    Ok(PickupAggregate {
        departure_time,
        total_boardings: total,
        n_simulations,
        rng_seed: seed,
        stops: route.stop_ids(),
        counts,
        fractions,
    })
}

/// Average boardings of the nearest scheduled departure, rounded half away
/// from zero. Equidistant entries resolve to the earlier one.
pub fn infer_total_boardings(
    departure_time: ClockTime,
    averages: &BoardingAverages,
) -> Result<u32, PassengerError> {
    averages
        .entries()
        .iter()
        .min_by(|a, b| {
            let da = (a.0.clock() - departure_time).abs();
            let db = (b.0.clock() - departure_time).abs();
            da.total_cmp(&db).then(a.0.cmp(&b.0))
        })
        .map(|&(_, avg)| avg.round() as u32)
        .ok_or(PassengerError::EmptyBoardings)
}
