//! Maximal connected runs of co-directional vehicles and greedy forwarding
//! inside them.

use serde::{Deserialize, Serialize};

use crate::error::{EfdError, Result};
use crate::traffic::{VehicleId, VehicleState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Ordered by position.
    pub member_ids: Vec<VehicleId>,
    pub member_positions: Vec<f64>,
    pub head_position: f64,
    pub tail_position: f64,
    pub span: f64,
    pub size: usize,
}

impl Cluster {
    fn from_members(members: &[VehicleState]) -> Self {
        let member_ids = members.iter().map(|v| v.id).collect();
        let member_positions: Vec<f64> = members.iter().map(|v| v.position).collect();
        let tail_position = member_positions[0];
        let head_position = member_positions[member_positions.len() - 1];
        Self {
            member_ids,
            size: member_positions.len(),
            member_positions,
            head_position,
            tail_position,
            span: head_position - tail_position,
        }
    }

    fn index_of(&self, id: VehicleId) -> Result<usize> {
        self.member_ids
            .iter()
            .position(|&m| m == id)
            .ok_or(EfdError::NotMember(id.0))
    }

    /// Distance from `point` to the nearest member.
    pub fn distance_to(&self, point: f64) -> f64 {
        let i = self.member_positions.partition_point(|&x| x < point);
        let mut best = f64::INFINITY;
        if i < self.size {
            best = best.min(self.member_positions[i] - point);
        }
        if i > 0 {
            best = best.min(point - self.member_positions[i - 1]);
        }
        best
    }
}

/// Splits a position-sorted vehicle list wherever a gap exceeds `range_r`.
/// A gap of exactly `range_r` stays connected.
pub fn find_clusters(vehicles: &[VehicleState], range_r: f64) -> Result<Vec<Cluster>> {
    if let Some(i) = vehicles
        .windows(2)
        .position(|w| w[1].position < w[0].position)
    {
        return Err(EfdError::Unsorted { index: i + 1 });
    }
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=vehicles.len() {
        if i == vehicles.len() || vehicles[i].position - vehicles[i - 1].position > range_r {
            if i > start {
                clusters.push(Cluster::from_members(&vehicles[start..i]));
            }
            start = i;
        }
    }
    Ok(clusters)
}

/// Sizes and spans of the clusters in a sorted position list, without
/// building member lists.
pub fn cluster_sizes_and_spans(positions: &[f64], range_r: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=positions.len() {
        if i == positions.len() || positions[i] - positions[i - 1] > range_r {
            if i > start {
                out.push((i - start, positions[i - 1] - positions[start]));
            }
            start = i;
        }
    }
    out
}

/// Hops taken by greedy farthest-in-range forwarding from `from` to `to`.
pub fn greedy_hop_chain(
    cluster: &Cluster,
    from: VehicleId,
    to: VehicleId,
    range_r: f64,
) -> Result<u32> {
    let src = cluster.index_of(from)?;
    let dst = cluster.index_of(to)?;
    let xs = &cluster.member_positions;
    let mut hops = 0;
    let mut cur = src;
    if dst >= src {
        while cur < dst {
            let mut next = cur + 1;
            while next < dst && xs[next + 1] - xs[cur] <= range_r {
                next += 1;
            }
            cur = next;
            hops += 1;
        }
    } else {
        while cur > dst {
            let mut next = cur - 1;
            while next > dst && xs[cur] - xs[next - 1] <= range_r {
                next -= 1;
            }
            cur = next;
            hops += 1;
        }
    }
    Ok(hops)
}
