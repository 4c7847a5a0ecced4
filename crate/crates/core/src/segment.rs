//! Monte Carlo traversal of one segment by a single packet.
//!
//! The packet starts at position 0 on a virtual carrier moving at the mean
//! speed. Inside a cluster it hops greedily to the farthest vehicle in range.
//! At a disconnection (next vehicle more than `R` ahead) the gap is either
//! bridged through an oncoming cluster lying in the gap, or carried. The
//! cheaper of the two is taken, so bridging never costs more than carrying.
//! The packet is delivered once it is held at or past the segment end.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{find_clusters, greedy_hop_chain, Cluster};
use crate::error::{EfdError, Result};
use crate::params::TrafficParams;
use crate::traffic::{sample_segment_with, SegmentSnapshot, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BridgeCase {
    /// An oncoming cluster is in range of both sides of the gap.
    Both,
    /// In range of the far side only; it drifts toward the near side.
    FarOnly,
    /// In range of the near side only; it takes the packet and returns it.
    NearOnly,
    None,
}

impl BridgeCase {
    pub const ALL: [BridgeCase; 4] = [
        BridgeCase::Both,
        BridgeCase::FarOnly,
        BridgeCase::NearOnly,
        BridgeCase::None,
    ];

    pub fn index(self) -> usize {
        match self {
            BridgeCase::Both => 0,
            BridgeCase::FarOnly => 1,
            BridgeCase::NearOnly => 2,
            BridgeCase::None => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BridgeCase::Both => "case1",
            BridgeCase::FarOnly => "case2",
            BridgeCase::NearOnly => "case3",
            BridgeCase::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapClass {
    pub case: BridgeCase,
    /// Carry length in meters, already halved for the closing motion where
    /// the packet rides an oncoming cluster.
    pub carry_distance: f64,
    /// Index of the bridging cluster in the slice passed in.
    pub bridge: Option<usize>,
    /// Radio hops through the bridge: onto it, across it, off it.
    pub relay_hops: u32,
}

/// Classifies the disconnection between a cluster head at `gap_tail` and the
/// next cluster tail at `gap_head` against the oncoming clusters.
///
/// Only oncoming clusters with a member strictly inside the gap are
/// considered. Among usable ones the smallest carry wins; ties go to the
/// cluster nearer the destination.
pub fn classify_gap(
    gap_tail: f64,
    gap_head: f64,
    opposite_clusters: &[Cluster],
    range_r: f64,
) -> Result<GapClass> {
    let width = gap_head - gap_tail;
    if !(width > range_r) {
        return Err(EfdError::Geometry {
            tail: gap_tail,
            head: gap_head,
            range_r,
        });
    }
    let first = opposite_clusters.partition_point(|c| c.head_position <= gap_tail);
    let mut best: Option<GapClass> = None;
    for (idx, c) in opposite_clusters.iter().enumerate().skip(first) {
        if c.tail_position >= gap_head {
            break;
        }
        let inside = c
            .member_positions
            .iter()
            .any(|&x| x > gap_tail && x < gap_head);
        if !inside {
            continue;
        }
        let near = c.distance_to(gap_tail);
        let far = c.distance_to(gap_head);
        let (case, carry) = match (near <= range_r, far <= range_r) {
            (true, true) => (BridgeCase::Both, 0.0),
            (false, true) => (BridgeCase::FarOnly, 0.5 * (range_r - far)),
            (true, false) => (BridgeCase::NearOnly, 0.5 * near),
            (false, false) => continue,
        };
        let better = match &best {
            None => true,
            Some(b) => carry <= b.carry_distance,
        };
        if better {
            best = Some(GapClass {
                case,
                carry_distance: carry,
                bridge: Some(idx),
                relay_hops: relay_hops(c, gap_tail, gap_head, range_r),
            });
        }
    }
    Ok(best.unwrap_or(GapClass {
        case: BridgeCase::None,
        carry_distance: width - range_r,
        bridge: None,
        relay_hops: 0,
    }))
}

fn nearest_member(c: &Cluster, point: f64) -> usize {
    let mut best = 0;
    for (i, &x) in c.member_positions.iter().enumerate() {
        if (x - point).abs() < (c.member_positions[best] - point).abs() {
            best = i;
        }
    }
    best
}

fn relay_hops(c: &Cluster, tail: f64, head: f64, range_r: f64) -> u32 {
    let entry = c.member_ids[nearest_member(c, tail)];
    let exit = c.member_ids[nearest_member(c, head)];
    // entry and exit are members by construction
    2 + greedy_hop_chain(c, entry, exit, range_r).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimMode {
    Bidirectional,
    /// Oncoming traffic is ignored; every disconnection is carried.
    OneDirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kinematics {
    /// Positions stay fixed for the whole traversal.
    Frozen,
    /// Vehicles advance with elapsed packet time; clusters are rebuilt at
    /// every event. Exploratory only.
    Moving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: TrafficParams,
    pub mode: SimMode,
    pub trials: usize,
    pub base_seed: u64,
    pub kinematics: Kinematics,
    /// Oncoming density; `None` shares `params.lambda`.
    pub backward_lambda: Option<f64>,
}

impl SimConfig {
    pub fn new(params: TrafficParams, trials: usize, base_seed: u64) -> Self {
        Self {
            params,
            mode: SimMode::Bidirectional,
            trials,
            base_seed,
            kinematics: Kinematics::Frozen,
            backward_lambda: None,
        }
    }

    pub fn with_mode(self, mode: SimMode) -> Self {
        Self { mode, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trials == 0 {
            return Err(EfdError::InvalidConfig("trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Sampling window: the segment plus one radio range of downstream road,
    /// so clusters that continue past the end are visible.
    pub fn window(&self) -> TrafficParams {
        self.params
            .with_segment_length(self.params.segment_length + self.params.range_r)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub total: f64,
    pub multihop_time: f64,
    pub carry_time: f64,
    /// Disconnections by geometric class, indexed by [`BridgeCase::index`].
    pub bridge_counts: [u64; 4],
    /// Disconnections actually crossed through an oncoming cluster.
    pub bridges_used: u64,
    pub hops_total: u64,
    pub carry_distance: f64,
    pub distance_covered: f64,
}

impl DelayBreakdown {
    pub fn gaps(&self) -> u64 {
        self.bridge_counts.iter().sum()
    }
}

fn positions_at(vehicles: &[VehicleState], t: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = vehicles
        .iter()
        .map(|v| v.position + v.direction.sign() * v.speed * t)
        .collect();
    xs.sort_by(f64::total_cmp);
    xs
}

fn clusters_at(vehicles: &[VehicleState], t: f64, range_r: f64) -> Vec<Cluster> {
    if t == 0.0 {
        return find_clusters(vehicles, range_r).expect("snapshot lists are sorted");
    }
    let mut moved: Vec<VehicleState> = vehicles
        .iter()
        .map(|v| VehicleState {
            position: v.position + v.direction.sign() * v.speed * t,
            ..*v
        })
        .collect();
    moved.sort_by(|a, b| a.position.total_cmp(&b.position));
    find_clusters(&moved, range_r).expect("sorted above")
}

/// Walks one packet from 0 to `config.params.segment_length`.
///
/// Vehicles in `snapshot` may extend past the segment end; they serve as
/// receivers beyond the destination.
pub fn simulate_traversal(
    snapshot: &SegmentSnapshot,
    config: &SimConfig,
) -> Result<DelayBreakdown> {
    config.params.validate()?;
    let p = &config.params;
    let end = p.segment_length;
    let r = p.range_r;
    let v = p.v_eff();
    let moving = config.kinematics == Kinematics::Moving;
    let bidirectional = config.mode == SimMode::Bidirectional;
    let ceiling = 10 * (snapshot.forward.len() + snapshot.backward.len() + 2);

    let mut out = DelayBreakdown::default();
    let mut forward = positions_at(&snapshot.forward, 0.0);
    let mut opposite = if bidirectional {
        clusters_at(&snapshot.backward, 0.0, r)
    } else {
        Vec::new()
    };
    // Moving mode follows the holder by index into the time-shifted list;
    // the virtual carrier is `None`.
    let mut holder: Option<usize> = None;
    let mut pos = 0.0;
    let mut clock = 0.0;
    let mut events = 0usize;

    while pos < end {
        events += 1;
        if events > ceiling {
            return Err(EfdError::EventCeiling(ceiling));
        }
        if moving && clock > 0.0 {
            let holder_id = holder.map(|i| snapshot_id_at(&snapshot.forward, clock, i));
            forward = positions_at(&snapshot.forward, clock);
            holder = holder_id.map(|id| index_of_id(&snapshot.forward, clock, id));
            pos = match holder {
                Some(i) => forward[i],
                None => v * clock,
            };
            if bidirectional {
                opposite = clusters_at(&snapshot.backward, clock, r);
            }
            if pos >= end {
                break;
            }
        }

        let reach = forward.partition_point(|&x| x <= pos + r);
        if reach > 0 && forward[reach - 1] > pos {
            out.hops_total += 1;
            holder = Some(reach - 1);
            pos = forward[reach - 1];
            clock += p.hop_delay;
            continue;
        }

        let next = forward.get(reach).copied();
        let to_end = end - pos;
        let (pure_carry, pure_hops, pure_target) = match next {
            Some(g) if g - pos - r < to_end => (g - pos - r, 1u32, Some(reach)),
            _ => (to_end, 0, None),
        };
        let pure_time = pure_carry / v + f64::from(pure_hops) * p.hop_delay;

        let mut chosen: Option<GapClass> = None;
        if let Some(g) = next {
            let class = if bidirectional {
                classify_gap(pos, g, &opposite, r)?
            } else {
                GapClass {
                    case: BridgeCase::None,
                    carry_distance: g - pos - r,
                    bridge: None,
                    relay_hops: 0,
                }
            };
            out.bridge_counts[class.case.index()] += 1;
            let bridge_time = class.carry_distance / v + f64::from(class.relay_hops) * p.hop_delay;
            if class.bridge.is_some() && bridge_time < pure_time {
                chosen = Some(class);
            }
        }

        match chosen {
            Some(class) => {
                out.bridges_used += 1;
                out.carry_time += class.carry_distance / v;
                out.carry_distance += class.carry_distance;
                out.hops_total += u64::from(class.relay_hops);
                clock += class.carry_distance / v + f64::from(class.relay_hops) * p.hop_delay;
                holder = Some(reach);
                pos = forward[reach];
            }
            None => {
                out.carry_time += pure_carry / v;
                out.carry_distance += pure_carry;
                out.hops_total += u64::from(pure_hops);
                clock += pure_time;
                match pure_target {
                    Some(i) => {
                        holder = Some(i);
                        pos = forward[i];
                    }
                    None => {
                        pos = end;
                    }
                }
            }
        }
    }

    out.multihop_time = out.hops_total as f64 * p.hop_delay;
    out.total = out.multihop_time + out.carry_time;
    out.distance_covered = pos.max(end);
    Ok(out)
}

// Moving-mode bookkeeping: the sorted order changes as vehicles overtake,
// so the holder is tracked by identity.
fn snapshot_id_at(vehicles: &[VehicleState], t: f64, sorted_index: usize) -> u32 {
    let mut order: Vec<(f64, u32)> = vehicles
        .iter()
        .map(|v| (v.position + v.direction.sign() * v.speed * t, v.id.0))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    order[sorted_index.min(order.len() - 1)].1
}

fn index_of_id(vehicles: &[VehicleState], t: f64, id: u32) -> usize {
    let mut order: Vec<(f64, u32)> = vehicles
        .iter()
        .map(|v| (v.position + v.direction.sign() * v.speed * t, v.id.0))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    order.iter().position(|o| o.1 == id).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub breakdown: DelayBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub mean_carry_time: f64,
    pub mean_multihop_time: f64,
    pub mean_hops: f64,
    pub case_tallies: [u64; 4],
    pub bridges_used: u64,
}

/// Seed of one trial. Mixing rather than adding keeps runs with nearby base
/// seeds from sharing trials.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(base_seed) ^ trial as u64)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs every trial; records come back ordered by trial index whatever the
/// thread count.
pub fn simulate_trials(config: &SimConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let window = config.window();
    (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(config.base_seed, trial);
            let snapshot = sample_segment_with(&window, config.backward_lambda, seed)?;
            let breakdown = simulate_traversal(&snapshot, config)?;
            Ok(TrialRecord {
                trial,
                seed,
                breakdown,
            })
        })
        .collect()
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(records: &[TrialRecord]) -> TrialSummary {
    let n = records.len();
    let nf = n as f64;
    let totals: Vec<f64> = records.iter().map(|r| r.breakdown.total).collect();
    let mean = totals.iter().sum::<f64>() / nf;
    let variance = if n > 1 {
        totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let mut sorted = totals.clone();
    sorted.sort_by(f64::total_cmp);
    let mut case_tallies = [0u64; 4];
    let mut bridges_used = 0;
    for r in records {
        for (t, c) in case_tallies.iter_mut().zip(r.breakdown.bridge_counts) {
            *t += c;
        }
        bridges_used += r.breakdown.bridges_used;
    }
    TrialSummary {
        trials: n,
        mean,
        variance,
        p10: quantile(&sorted, 0.1),
        p50: quantile(&sorted, 0.5),
        p90: quantile(&sorted, 0.9),
        mean_carry_time: records.iter().map(|r| r.breakdown.carry_time).sum::<f64>() / nf,
        mean_multihop_time: records
            .iter()
            .map(|r| r.breakdown.multihop_time)
            .sum::<f64>()
            / nf,
        mean_hops: records
            .iter()
            .map(|r| r.breakdown.hops_total as f64)
            .sum::<f64>()
            / nf,
        case_tallies,
        bridges_used,
    }
}

pub fn run_trials(config: &SimConfig) -> Result<TrialSummary> {
    Ok(summarize(&simulate_trials(config)?))
}

/// Gap statistics gathered by classifying every interior disconnection of
/// independently sampled roads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCensus {
    pub gaps: u64,
    pub counts: [u64; 4],
    pub mean_carry: f64,
}

/// Samples roads until `target_gaps` disconnections have been classified.
///
/// A gap is kept when the vehicle behind it lies in `[R, L]`; the road is
/// sampled far enough past `L` that the gap and the oncoming traffic around
/// its far end are always visible. Choosing gaps by where they start, not by
/// whether they fit, keeps long gaps at their natural frequency.
pub fn gap_census(params: &TrafficParams, target_gaps: u64, base_seed: u64) -> Result<GapCensus> {
    params.validate()?;
    let r = params.range_r;
    // P(gap > 30/lambda) = e^-30
    let window = params.with_segment_length(params.segment_length + r + 30.0 / params.lambda);
    let mut counts = [0u64; 4];
    let mut carry_sum = 0.0;
    let mut gaps = 0u64;
    let mut trial = 0usize;
    const BATCH: usize = 256;
    while gaps < target_gaps {
        let batch: Vec<Vec<GapClass>> = (trial..trial + BATCH)
            .into_par_iter()
            .map(|t| -> Result<Vec<GapClass>> {
                let s = sample_segment_with(&window, None, trial_seed(base_seed, t))?;
                let opposite = find_clusters(&s.backward, r)?;
                let xs: Vec<f64> = s.forward.iter().map(|v| v.position).collect();
                let mut out = Vec::new();
                for w in xs.windows(2) {
                    let starts_on_road = w[0] >= r && w[0] <= params.segment_length;
                    if starts_on_road && w[1] - w[0] > r && w[1] <= window.segment_length - r {
                        out.push(classify_gap(w[0], w[1], &opposite, r)?);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        trial += BATCH;
        for class in batch.into_iter().flatten() {
            if gaps == target_gaps {
                break;
            }
            counts[class.case.index()] += 1;
            carry_sum += class.carry_distance;
            gaps += 1;
        }
    }
    Ok(GapCensus {
        gaps,
        counts,
        mean_carry: carry_sum / gaps as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::MPS_PER_MPH;

    fn clusters(xs: &[f64]) -> Vec<Cluster> {
        let s = SegmentSnapshot::from_positions(TrafficParams::default(), &[], xs);
        find_clusters(&s.backward, 250.0).unwrap()
    }

    #[test]
    fn nearby_base_seeds_share_no_trials() {
        let a: std::collections::HashSet<u64> = (0..1000).map(|i| trial_seed(1, i)).collect();
        assert_eq!(a.len(), 1000);
        assert!((0..1000).all(|i| !a.contains(&trial_seed(2, i))));
    }

    #[test]
    fn centered_cluster_bridges_without_carry() {
        let c = clusters(&[225.0]);
        let g = classify_gap(0.0, 450.0, &c, 250.0).unwrap();
        assert_eq!(g.case, BridgeCase::Both);
        assert_eq!(g.carry_distance, 0.0);
        assert_eq!(g.relay_hops, 2);
    }

    #[test]
    fn far_side_cluster_carries_half_the_slack() {
        // 100 m from the far end, 500 m from the near end
        let c = clusters(&[500.0]);
        let g = classify_gap(0.0, 600.0, &c, 250.0).unwrap();
        assert_eq!(g.case, BridgeCase::FarOnly);
        assert_eq!(g.carry_distance, 75.0);
    }

    #[test]
    fn near_side_cluster_carries_half_its_distance() {
        let c = clusters(&[100.0]);
        let g = classify_gap(0.0, 800.0, &c, 250.0).unwrap();
        assert_eq!(g.case, BridgeCase::NearOnly);
        assert_eq!(g.carry_distance, 50.0);
    }

    #[test]
    fn unreachable_cluster_means_pure_carry() {
        let c = clusters(&[400.0, 1500.0]);
        let g = classify_gap(0.0, 800.0, &c, 250.0).unwrap();
        assert_eq!(g.case, BridgeCase::None);
        assert_eq!(g.carry_distance, 550.0);
        assert_eq!(g.bridge, None);
    }

    #[test]
    fn smallest_carry_wins() {
        let c = clusters(&[100.0, 700.0]);
        // near-only carry 50, far-only carry (250 - 100) / 2 = 75
        let g = classify_gap(0.0, 800.0, &c, 250.0).unwrap();
        assert_eq!(g.case, BridgeCase::NearOnly);
        assert_eq!(g.bridge, Some(0));
    }

    #[test]
    fn gap_narrower_than_range_rejected() {
        assert!(matches!(
            classify_gap(0.0, 200.0, &[], 250.0),
            Err(EfdError::Geometry { .. })
        ));
    }

    #[test]
    fn empty_mile_at_forty_mph() {
        let v = 40.0 * MPS_PER_MPH;
        let params = TrafficParams {
            v_min: v,
            v_max: v,
            segment_length: 1609.34,
            ..Default::default()
        };
        let s = SegmentSnapshot::from_positions(params, &[], &[]);
        let cfg = SimConfig::new(params, 1, 0);
        let b = simulate_traversal(&s, &cfg).unwrap();
        assert!((b.total - 90.0).abs() < 0.1, "{}", b.total);
        assert_eq!(b.hops_total, 0);
    }

    #[test]
    fn fully_connected_segment_has_no_carry() {
        let params = TrafficParams {
            segment_length: 1000.0,
            ..Default::default()
        };
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 100.0).collect();
        let s = SegmentSnapshot::from_positions(params, &xs, &[]);
        let b = simulate_traversal(&s, &SimConfig::new(params, 1, 0)).unwrap();
        assert_eq!(b.carry_time, 0.0);
        // 0 -> 200 -> 400 -> 600 -> 800 -> 1000
        assert_eq!(b.hops_total, 5);
        assert!((b.total - 5.0 * params.hop_delay).abs() < 1e-12);
    }

    #[test]
    fn one_directional_ignores_oncoming_bridge() {
        let params = TrafficParams {
            segment_length: 1000.0,
            ..Default::default()
        };
        let s = SegmentSnapshot::from_positions(params, &[100.0, 1100.0], &[350.0, 600.0, 850.0]);
        let bi = simulate_traversal(&s, &SimConfig::new(params, 1, 0)).unwrap();
        let one = simulate_traversal(
            &s,
            &SimConfig::new(params, 1, 0).with_mode(SimMode::OneDirectional),
        )
        .unwrap();
        assert_eq!(bi.carry_time, 0.0);
        assert_eq!(bi.bridges_used, 1);
        // 1000 m gap minus one radio range
        assert!((one.carry_distance - 750.0).abs() < 1e-9);
        assert!(bi.total < one.total);
    }

    #[test]
    fn accounting_identity_and_determinism() {
        let params = TrafficParams::default().with_lambda(0.004);
        let cfg = SimConfig::new(params, 200, 42);
        let a = simulate_trials(&cfg).unwrap();
        let b = simulate_trials(&cfg).unwrap();
        assert_eq!(a, b);
        for r in &a {
            let d = r.breakdown;
            assert!((d.total - d.multihop_time - d.carry_time).abs() < 1e-9);
            assert!((d.multihop_time - d.hops_total as f64 * params.hop_delay).abs() < 1e-12);
            assert!(d.total >= 0.0 && d.carry_time >= 0.0);
        }
    }

    #[test]
    fn single_trial_summary_is_that_trial() {
        let cfg = SimConfig::new(TrafficParams::default(), 1, 9);
        let rec = simulate_trials(&cfg).unwrap();
        let s = summarize(&rec);
        let t = rec[0].breakdown.total;
        assert_eq!((s.mean, s.p10, s.p50, s.p90, s.variance), (t, t, t, t, 0.0));
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = SimConfig::new(TrafficParams::default(), 0, 0);
        assert!(run_trials(&cfg).is_err());
    }

    #[test]
    fn moving_mode_terminates_and_balances() {
        let mut cfg = SimConfig::new(TrafficParams::default().with_lambda(0.003), 100, 1);
        cfg.kinematics = Kinematics::Moving;
        for r in simulate_trials(&cfg).unwrap() {
            let d = r.breakdown;
            assert!((d.total - d.multihop_time - d.carry_time).abs() < 1e-9);
        }
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [0.0, 10.0];
        assert_eq!(quantile(&xs, 0.5), 5.0);
        assert_eq!(quantile(&[3.0], 0.9), 3.0);
    }
}
