//! Seeded vehicle placement on a bidirectional segment.
//!
//! Each direction is a stationary Poisson process of rate `lambda` along
//! `[0, L]`: the first vehicle sits an exponential distance past 0 and every
//! later one a fresh exponential gap further on. Speeds are uniform on
//! `[v_min, v_max]`. Streams come from ChaCha8 seeded with the trial seed;
//! the forward direction uses stream 0 and the backward direction stream 1.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::params::TrafficParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Travelling toward increasing position, with the packet.
    Forward,
    Backward,
}

impl Direction {
    fn stream(self) -> u64 {
        match self {
            Direction::Forward => 0,
            Direction::Backward => 1,
        }
    }

    /// Sign of the velocity along the segment axis.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: VehicleId,
    pub position: f64,
    pub speed: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSnapshot {
    pub params: TrafficParams,
    /// Sorted by position.
    pub forward: Vec<VehicleState>,
    /// Sorted by position.
    pub backward: Vec<VehicleState>,
    pub seed: u64,
}

impl SegmentSnapshot {
    /// Snapshot built from explicit positions; every vehicle gets speed `v_eff`.
    pub fn from_positions(params: TrafficParams, forward: &[f64], backward: &[f64]) -> Self {
        let v = params.v_eff();
        let mut next_id = 0u32;
        let mut build = |xs: &[f64], direction| {
            let mut out: Vec<VehicleState> = xs
                .iter()
                .map(|&position| {
                    let id = VehicleId(next_id);
                    next_id += 1;
                    VehicleState {
                        id,
                        position,
                        speed: v,
                        direction,
                    }
                })
                .collect();
            out.sort_by(|a, b| a.position.total_cmp(&b.position));
            out
        };
        let forward = build(forward, Direction::Forward);
        let backward = build(backward, Direction::Backward);
        Self {
            params,
            forward,
            backward,
            seed: 0,
        }
    }

    pub fn gaps(vehicles: &[VehicleState]) -> impl Iterator<Item = f64> + '_ {
        vehicles.windows(2).map(|w| w[1].position - w[0].position)
    }
}

fn stream_rng(seed: u64, direction: Direction) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(direction.stream());
    rng
}

fn sample_with<R: Rng>(
    params: &TrafficParams,
    lambda: f64,
    direction: Direction,
    first_id: u32,
    rng: &mut R,
) -> Result<Vec<VehicleState>> {
    let gap = Exp::new(lambda).map_err(|e| invalid("lambda", e.to_string()))?;
    let mut out = Vec::new();
    let mut position = 0.0;
    loop {
        position += gap.sample(rng);
        if position > params.segment_length {
            break;
        }
        let speed = if params.v_min < params.v_max {
            rng.gen_range(params.v_min..=params.v_max)
        } else {
            params.v_min
        };
        out.push(VehicleState {
            id: VehicleId(first_id + out.len() as u32),
            position,
            speed,
            direction,
        });
    }
    Ok(out)
}

/// Forward-direction vehicles for `seed`.
pub fn sample_direction(params: &TrafficParams, seed: u64) -> Result<Vec<VehicleState>> {
    params.validate()?;
    let mut rng = stream_rng(seed, Direction::Forward);
    sample_with(params, params.lambda, Direction::Forward, 0, &mut rng)
}

/// Both directions at the shared density `params.lambda`.
pub fn sample_segment(params: &TrafficParams, seed: u64) -> Result<SegmentSnapshot> {
    sample_segment_with(params, None, seed)
}

/// Both directions; `backward_lambda` overrides the oncoming density.
///
/// The forward list is identical to [`sample_direction`] for the same seed.
pub fn sample_segment_with(
    params: &TrafficParams,
    backward_lambda: Option<f64>,
    seed: u64,
) -> Result<SegmentSnapshot> {
    params.validate()?;
    let forward = sample_direction(params, seed)?;
    let lambda_b = backward_lambda.unwrap_or(params.lambda);
    if !(lambda_b.is_finite() && lambda_b > 0.0) {
        return Err(invalid(
            "backward_lambda",
            format!("must be > 0, got {lambda_b}"),
        ));
    }
    let mut rng = stream_rng(seed, Direction::Backward);
    let backward = sample_with(
        params,
        lambda_b,
        Direction::Backward,
        forward.len() as u32,
        &mut rng,
    )?;
    Ok(SegmentSnapshot {
        params: *params,
        forward,
        backward,
        seed,
    })
}
