//! Packet delivery over a moving grid city.
//!
//! Vehicles move by random waypoint in 1 s steps. Sources emit packets to
//! uniformly random destination vehicles. A packet is routed intersection by
//! intersection, re-planning at every node with the configured metric; each
//! segment leg is forwarded by the segment simulator on the vehicles present
//! when the leg starts.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::mobility::{MobileVehicle, Mobility};
use super::network::{build_grid, NetPosition, RoadNetwork, DEFAULT_HEIGHT, DEFAULT_WIDTH};
use super::routing::{geometric_next_hops, route_with_table, MetricKind, MetricTable};
use crate::error::{invalid, EfdError, Result};
use crate::params::TrafficParams;
use crate::segment::{quantile, simulate_traversal, SimConfig, SimMode};
use crate::traffic::{SegmentSnapshot, VehicleId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityConfig {
    pub rows: usize,
    pub cols: usize,
    pub width: f64,
    pub height: f64,
    pub n_vehicles: usize,
    pub sources: usize,
    pub packets: usize,
    /// Mean time between packets of one source, seconds.
    pub mean_interarrival: f64,
    /// `None` never expires.
    pub ttl: Option<f64>,
    pub seed: u64,
    pub metric: MetricKind,
    /// Radio range, speed bounds and hop delay; density is measured.
    pub params: TrafficParams,
    pub dt: f64,
    pub density_refresh: f64,
    pub lambda_floor: f64,
    /// Simulated time after which undelivered packets are dropped.
    pub max_time: f64,
}

impl Default for CityConfig {
    fn default() -> Self {
        Self {
            rows: 5,
            cols: 5,
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            n_vehicles: 100,
            sources: 15,
            packets: 5000,
            mean_interarrival: 4.0,
            ttl: None,
            seed: 1,
            metric: MetricKind::Efd,
            params: TrafficParams::default(),
            dt: 1.0,
            density_refresh: 5.0,
            lambda_floor: 1e-4,
            max_time: 1e6,
        }
    }
}

impl CityConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_vehicles < 2 {
            return Err(invalid("n_vehicles", "need at least 2 vehicles"));
        }
        if self.sources == 0 {
            return Err(invalid("sources", "need at least one source"));
        }
        if self.packets == 0 {
            return Err(invalid("packets", "must be positive"));
        }
        for (field, v) in [
            ("mean_interarrival", self.mean_interarrival),
            ("dt", self.dt),
            ("density_refresh", self.density_refresh),
            ("lambda_floor", self.lambda_floor),
            ("max_time", self.max_time),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(
                    field,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if let Some(t) = self.ttl {
            if !(t > 0.0) {
                return Err(invalid("ttl", format!("must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub id: usize,
    pub generated_at: f64,
    pub delivered_at: Option<f64>,
    pub source: VehicleId,
    pub destination: VehicleId,
    /// Segments traversed, in order.
    pub path: Vec<usize>,
    pub delay: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitySummary {
    pub metric: MetricKind,
    pub n_vehicles: usize,
    pub seed: u64,
    pub packets: usize,
    pub delivered: usize,
    pub delivery_ratio: f64,
    /// Over delivered packets; NaN when none arrived.
    pub mean_delay: f64,
    /// Delay at 10%, 20%, ..., 90%.
    pub deciles: [f64; 9],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityRun {
    pub summary: CitySummary,
    pub packets: Vec<PacketRecord>,
}

#[derive(Debug, Clone, Copy)]
enum Holder {
    Source,
    Node(usize),
}

struct InFlight {
    record: usize,
    src: usize,
    dst: usize,
    at: Holder,
    ready: f64,
}

// Leg coordinate of an offset on a segment, measured from `from_node`.
fn leg_coord(network: &RoadNetwork, segment: usize, from_node: usize, offset: f64) -> f64 {
    let seg = &network.segments[segment];
    if seg.direction_from(from_node) == 0 {
        offset
    } else {
        seg.length - offset
    }
}

struct Leg {
    segment: usize,
    from_node: usize,
    start: f64,
    end: f64,
    /// Destination vehicle position on the final leg.
    receiver: Option<f64>,
    /// Node reached at `end`, whose other roads extend the lookahead.
    end_node: Option<usize>,
}

fn leg_delay(
    network: &RoadNetwork,
    fleet: &[MobileVehicle],
    on_segment: &[Vec<usize>],
    leg: &Leg,
    config: &CityConfig,
) -> Result<f64> {
    let length = leg.end - leg.start;
    if length <= 0.0 {
        return Ok(0.0);
    }
    let r = config.params.range_r;
    let dir = network.segments[leg.segment].direction_from(leg.from_node);
    let mut forward = Vec::new();
    let mut backward = Vec::new();
    for &i in &on_segment[leg.segment] {
        let v = &fleet[i];
        let x = leg_coord(network, leg.segment, leg.from_node, v.offset) - leg.start;
        if v.direction(network) == dir {
            if x >= 0.0 {
                forward.push(x);
            }
        } else if x >= -r && x <= length + r {
            backward.push(x);
        }
    }
    if let Some(u) = leg.receiver {
        forward.push(u - leg.start);
    }
    if let Some(m) = leg.end_node {
        for &s in &network.adjacency[m] {
            if s == leg.segment {
                continue;
            }
            for &i in &on_segment[s] {
                let d = leg_coord(network, s, m, fleet[i].offset);
                if d <= r {
                    forward.push(length + d);
                }
            }
        }
    }
    let params = network.traffic[leg.segment][dir].with_segment_length(length);
    let snapshot = SegmentSnapshot::from_positions(params, &forward, &backward);
    let mode = match config.metric {
        MetricKind::Efd => SimMode::Bidirectional,
        MetricKind::VaddDensity => SimMode::OneDirectional,
    };
    let sim = SimConfig::new(params, 1, config.seed).with_mode(mode);
    Ok(simulate_traversal(&snapshot, &sim)?.total)
}

fn node_position(network: &RoadNetwork, node: usize) -> NetPosition {
    let s = network.adjacency[node][0];
    let seg = &network.segments[s];
    NetPosition {
        segment: s,
        offset: if seg.a == node { 0.0 } else { seg.length },
    }
}

fn refresh_density(network: &mut RoadNetwork, fleet: &[MobileVehicle], floor: f64) {
    let mut counts = vec![[0usize; 2]; network.segments.len()];
    for v in fleet {
        counts[v.segment][v.direction(network)] += 1;
    }
    for (s, c) in counts.iter().enumerate() {
        let len = network.segments[s].length;
        for d in 0..2 {
            network.traffic[s][d].lambda = (c[d] as f64 / len).max(floor);
        }
    }
}

/// Runs one city experiment to completion.
pub fn run_city_experiment(config: &CityConfig) -> Result<CityRun> {
    config.validate()?;
    let mut network = build_grid(config.rows, config.cols, config.width, config.height)?;
    network.set_base_params(config.params);
    let hops = geometric_next_hops(&network);
    let frozen_net = network.clone();
    let mobility = Mobility::new(&frozen_net, &hops, config.params.v_min, config.params.v_max);

    // mobility and traffic draw from separate streams, so runs that differ
    // only in metric see the same vehicles and packets
    let mut move_rng = ChaCha8Rng::seed_from_u64(config.seed);
    move_rng.set_stream(0);
    let mut pkt_rng = ChaCha8Rng::seed_from_u64(config.seed);
    pkt_rng.set_stream(1);

    let n = config.n_vehicles;
    let mut fleet: Vec<MobileVehicle> = (0..n)
        .map(|i| mobility.place(VehicleId(i as u32), &mut move_rng))
        .collect();
    let sources: Vec<usize> = sample(&mut pkt_rng, n, config.sources.min(n)).into_vec();
    let gap = Exp::new(1.0 / config.mean_interarrival)
        .map_err(|e| EfdError::InvalidConfig(format!("mean_interarrival: {e}")))?;
    let mut next_gen: Vec<f64> = sources.iter().map(|_| gap.sample(&mut pkt_rng)).collect();

    let mut records: Vec<PacketRecord> = Vec::with_capacity(config.packets);
    let mut active: Vec<InFlight> = Vec::new();
    let mut table = MetricTable::new(&network, config.metric)?;
    let mut next_refresh = 0.0;
    let mut t = 0.0;

    loop {
        if t >= next_refresh {
            refresh_density(&mut network, &fleet, config.lambda_floor);
            table = MetricTable::new(&network, config.metric)?;
            next_refresh += config.density_refresh;
        }
        let mut on_segment = vec![Vec::new(); network.segments.len()];
        for (i, v) in fleet.iter().enumerate() {
            on_segment[v.segment].push(i);
        }

        // emissions due by now, in time order
        let mut fresh: Vec<(f64, usize)> = Vec::new();
        for (k, &s) in sources.iter().enumerate() {
            while next_gen[k] <= t {
                fresh.push((next_gen[k], s));
                next_gen[k] += gap.sample(&mut pkt_rng);
            }
        }
        fresh.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (at, src) in fresh {
            if records.len() >= config.packets {
                break;
            }
            let mut dst = pkt_rng.gen_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            active.push(InFlight {
                record: records.len(),
                src,
                dst,
                at: Holder::Source,
                ready: at,
            });
            records.push(PacketRecord {
                id: records.len(),
                generated_at: at,
                delivered_at: None,
                source: VehicleId(src as u32),
                destination: VehicleId(dst as u32),
                path: Vec::new(),
                delay: None,
            });
        }

        let mut still = Vec::with_capacity(active.len());
        for mut p in active.drain(..) {
            let done = advance(
                &mut p,
                &mut records,
                &network,
                &table,
                &fleet,
                &on_segment,
                t,
                config,
            )?;
            if !done {
                still.push(p);
            }
        }
        active = still;

        if records.len() >= config.packets && active.is_empty() {
            break;
        }
        if t >= config.max_time {
            break;
        }
        for v in fleet.iter_mut() {
            mobility.step(v, config.dt, &mut move_rng);
        }
        t += config.dt;
    }

    let summary = summarize(config, &records);
    Ok(CityRun {
        summary,
        packets: records,
    })
}

// Moves one packet through every leg that can start by time `t`. Returns
// true once the packet is delivered or expired.
#[allow(clippy::too_many_arguments)]
fn advance(
    p: &mut InFlight,
    records: &mut [PacketRecord],
    network: &RoadNetwork,
    table: &MetricTable,
    fleet: &[MobileVehicle],
    on_segment: &[Vec<usize>],
    t: f64,
    config: &CityConfig,
) -> Result<bool> {
    let generated = records[p.record].generated_at;
    while p.ready <= t {
        if let Some(ttl) = config.ttl {
            if p.ready - generated > ttl {
                return Ok(true);
            }
        }
        let dest = fleet[p.dst].position();
        let dest_seg = &network.segments[dest.segment];
        let (leg, next_holder, last) = match p.at {
            Holder::Source => {
                let here = fleet[p.src].position();
                if here.segment == dest.segment {
                    let from = if dest.offset >= here.offset {
                        dest_seg.a
                    } else {
                        dest_seg.b
                    };
                    let start = leg_coord(network, dest.segment, from, here.offset);
                    let end = leg_coord(network, dest.segment, from, dest.offset);
                    let leg = Leg {
                        segment: dest.segment,
                        from_node: from,
                        start,
                        end,
                        receiver: Some(end),
                        end_node: None,
                    };
                    (leg, p.at, true)
                } else {
                    let route = route_with_table(network, table, here, dest)?;
                    let exit = route.nodes[0];
                    let seg = &network.segments[here.segment];
                    let from = seg.other_end(exit);
                    let leg = Leg {
                        segment: here.segment,
                        from_node: from,
                        start: leg_coord(network, here.segment, from, here.offset),
                        end: seg.length,
                        receiver: None,
                        end_node: Some(exit),
                    };
                    (leg, Holder::Node(exit), false)
                }
            }
            Holder::Node(node) => {
                if dest_seg.has_end(node) {
                    let end = leg_coord(network, dest.segment, node, dest.offset);
                    let leg = Leg {
                        segment: dest.segment,
                        from_node: node,
                        start: 0.0,
                        end,
                        receiver: Some(end),
                        end_node: None,
                    };
                    (leg, p.at, true)
                } else {
                    let route =
                        route_with_table(network, table, node_position(network, node), dest)?;
                    let next = if route.nodes[0] == node {
                        route.nodes[1]
                    } else {
                        route.nodes[0]
                    };
                    let s = network
                        .segment_between(node, next)
                        .ok_or(EfdError::Unreachable {
                            from: node,
                            to: next,
                        })?;
                    let leg = Leg {
                        segment: s,
                        from_node: node,
                        start: 0.0,
                        end: network.segments[s].length,
                        receiver: None,
                        end_node: Some(next),
                    };
                    (leg, Holder::Node(next), false)
                }
            }
        };
        let delay = leg_delay(network, fleet, on_segment, &leg, config)?;
        let rec = &mut records[p.record];
        rec.path.push(leg.segment);
        p.ready += delay;
        p.at = next_holder;
        if last {
            if let Some(ttl) = config.ttl {
                if p.ready - generated > ttl {
                    return Ok(true);
                }
            }
            rec.delivered_at = Some(p.ready);
            rec.delay = Some(p.ready - generated);
            return Ok(true);
        }
    }
    Ok(false)
}

fn summarize(config: &CityConfig, records: &[PacketRecord]) -> CitySummary {
    let mut delays: Vec<f64> = records.iter().filter_map(|r| r.delay).collect();
    delays.sort_by(f64::total_cmp);
    let delivered = delays.len();
    let mean_delay = if delivered == 0 {
        f64::NAN
    } else {
        delays.iter().sum::<f64>() / delivered as f64
    };
    let mut deciles = [f64::NAN; 9];
    if delivered > 0 {
        for (k, d) in deciles.iter_mut().enumerate() {
            *d = quantile(&delays, (k + 1) as f64 / 10.0);
        }
    }
    CitySummary {
        metric: config.metric,
        n_vehicles: config.n_vehicles,
        seed: config.seed,
        packets: records.len(),
        delivered,
        delivery_ratio: if records.is_empty() {
            0.0
        } else {
            delivered as f64 / records.len() as f64
        },
        mean_delay,
        deciles,
    }
}
