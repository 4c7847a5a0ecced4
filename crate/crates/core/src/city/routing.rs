//! Per-segment delay metrics and minimum-cost intersection paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::network::{NetPosition, RoadNetwork};
use crate::analytics::{one_directional_segment_delay, segment_delay, SegmentModel};
use crate::error::{EfdError, Result};
use crate::params::TrafficParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    /// Bidirectional expected forwarding delay.
    Efd,
    /// One-directional carry model driven by density alone.
    VaddDensity,
}

impl MetricKind {
    pub fn label(self) -> &'static str {
        match self {
            MetricKind::Efd => "efd",
            MetricKind::VaddDensity => "vadd",
        }
    }
}

/// Expected delay (seconds) to cross a segment described by `params`.
pub fn segment_metric(params: &TrafficParams, kind: MetricKind) -> Result<f64> {
    match kind {
        MetricKind::Efd => segment_delay(params),
        MetricKind::VaddDensity => one_directional_segment_delay(params),
    }
}

/// Cached per-direction segment models and full-length costs under one
/// metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub kind: MetricKind,
    pub models: Vec<[SegmentModel; 2]>,
    /// `costs[segment][direction]`, seconds.
    pub costs: Vec<[f64; 2]>,
}

impl MetricTable {
    pub fn new(network: &RoadNetwork, kind: MetricKind) -> Result<Self> {
        let models = network
            .traffic
            .iter()
            .map(|t| Ok([SegmentModel::new(&t[0])?, SegmentModel::new(&t[1])?]))
            .collect::<Result<Vec<_>>>()?;
        let mut table = Self {
            kind,
            models,
            costs: Vec::new(),
        };
        table.costs = network
            .segments
            .iter()
            .map(|s| {
                [
                    table.partial(s.id, 0, s.length),
                    table.partial(s.id, 1, s.length),
                ]
            })
            .collect();
        Ok(table)
    }

    /// Cost of `length` meters of `segment` travelled in `direction`.
    pub fn partial(&self, segment: usize, direction: usize, length: f64) -> f64 {
        if length <= 0.0 {
            return 0.0;
        }
        let m = &self.models[segment][direction];
        match self.kind {
            MetricKind::Efd => m.delay(length),
            MetricKind::VaddDensity => m.one_directional_delay(length),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    /// Intersections visited in order; empty when source and destination
    /// share a segment.
    pub nodes: Vec<usize>,
    pub cost: f64,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra. `reverse` follows edges against their direction,
/// giving distances *to* the seeds.
fn dijkstra(
    network: &RoadNetwork,
    costs: &[[f64; 2]],
    seeds: &[(usize, f64)],
    reverse: bool,
) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; network.node_count()];
    let mut heap = BinaryHeap::new();
    for &(n, d) in seeds {
        if d < dist[n] {
            dist[n] = d;
            heap.push(Entry(d, n));
        }
    }
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &s in &network.adjacency[u] {
            let seg = &network.segments[s];
            let v = seg.other_end(u);
            let w = if reverse {
                costs[s][seg.direction_from(v)]
            } else {
                costs[s][seg.direction_from(u)]
            };
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry(nd, v));
            }
        }
    }
    dist
}

fn on_optimal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Minimum-cost path between two network positions under `table`.
///
/// Among equal-cost paths the lexicographically smallest intersection
/// sequence wins.
pub fn route_with_table(
    network: &RoadNetwork,
    table: &MetricTable,
    source: NetPosition,
    destination: NetPosition,
) -> Result<Route> {
    let costs = &table.costs;
    let src_seg = &network.segments[source.segment];
    let dst_seg = &network.segments[destination.segment];
    if source.segment == destination.segment {
        let dir = usize::from(destination.offset < source.offset);
        let len = (destination.offset - source.offset).abs();
        return Ok(Route {
            nodes: Vec::new(),
            cost: table.partial(source.segment, dir, len),
        });
    }
    // leave the source segment through either end
    let exits = [
        (src_seg.a, table.partial(src_seg.id, 1, source.offset)),
        (
            src_seg.b,
            table.partial(src_seg.id, 0, src_seg.length - source.offset),
        ),
    ];
    // enter the destination segment through either end
    let entries = [
        (dst_seg.a, table.partial(dst_seg.id, 0, destination.offset)),
        (
            dst_seg.b,
            table.partial(dst_seg.id, 1, dst_seg.length - destination.offset),
        ),
    ];
    let from_src = dijkstra(network, costs, &exits, false);
    let to_dst = dijkstra(network, costs, &entries, true);
    let total = entries
        .iter()
        .map(|&(n, c)| from_src[n] + c)
        .fold(f64::INFINITY, f64::min);
    if !total.is_finite() {
        return Err(EfdError::Unreachable {
            from: src_seg.a,
            to: dst_seg.a,
        });
    }

    let mut starts: Vec<usize> = exits
        .iter()
        .filter(|&&(n, c)| on_optimal(c + to_dst[n], total))
        .map(|&(n, _)| n)
        .collect();
    starts.sort_unstable();
    let mut cur = starts[0];
    let mut nodes = vec![cur];
    loop {
        let done = entries
            .iter()
            .any(|&(n, c)| n == cur && on_optimal(from_src[n] + c, total));
        if done {
            break;
        }
        let mut next = None;
        for &s in &network.adjacency[cur] {
            let seg = &network.segments[s];
            let v = seg.other_end(cur);
            let w = costs[s][seg.direction_from(cur)];
            if on_optimal(from_src[cur] + w + to_dst[v], total)
                && from_src[v] > from_src[cur] - 1e-12
            {
                next = Some(v);
                break;
            }
        }
        match next {
            Some(v) if !nodes.contains(&v) => {
                nodes.push(v);
                cur = v;
            }
            _ => break,
        }
    }
    Ok(Route { nodes, cost: total })
}

/// Minimum-cost path using the network's current statistics.
pub fn route_select(
    network: &RoadNetwork,
    source: NetPosition,
    destination: NetPosition,
    kind: MetricKind,
) -> Result<Route> {
    let table = MetricTable::new(network, kind)?;
    route_with_table(network, &table, source, destination)
}

/// Next-hop table for geometric shortest paths, `table[from][to]`.
pub fn geometric_next_hops(network: &RoadNetwork) -> Vec<Vec<usize>> {
    let lengths: Vec<[f64; 2]> = network
        .segments
        .iter()
        .map(|s| [s.length, s.length])
        .collect();
    let n = network.node_count();
    let mut table = vec![vec![usize::MAX; n]; n];
    for to in 0..n {
        let dist = dijkstra(network, &lengths, &[(to, 0.0)], true);
        for (from, row) in table.iter_mut().enumerate() {
            if from == to {
                row[to] = to;
                continue;
            }
            // adjacency is ordered by neighbor id, so ties go to the lowest
            for &s in &network.adjacency[from] {
                let seg = &network.segments[s];
                let v = seg.other_end(from);
                if on_optimal(seg.length + dist[v], dist[from]) {
                    row[to] = v;
                    break;
                }
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::city::network::build_grid;

    fn grid() -> RoadNetwork {
        build_grid(3, 3, 2000.0, 2000.0).unwrap()
    }

    fn at_node(net: &RoadNetwork, node: usize) -> NetPosition {
        let s = net.adjacency[node][0];
        let seg = &net.segments[s];
        NetPosition {
            segment: s,
            offset: if seg.a == node { 0.0 } else { seg.length },
        }
    }

    #[test]
    fn uniform_costs_follow_geometry() {
        let net = grid();
        let r = route_select(&net, at_node(&net, 0), at_node(&net, 8), MetricKind::Efd).unwrap();
        // the destination lies at the far end of segment 5-8, entered at 5;
        // lexicographically smallest of the six shortest paths
        assert_eq!(r.nodes, vec![0, 1, 2, 5]);
        let one = segment_metric(&net.traffic[0][0], MetricKind::Efd).unwrap();
        assert!((r.cost - 4.0 * one).abs() < 1e-9);
    }

    #[test]
    fn same_segment_gives_empty_path() {
        let net = grid();
        let a = NetPosition {
            segment: 0,
            offset: 100.0,
        };
        let b = NetPosition {
            segment: 0,
            offset: 900.0,
        };
        let r = route_select(&net, a, b, MetricKind::Efd).unwrap();
        assert!(r.nodes.is_empty());
        assert!(r.cost > 0.0);
    }

    #[test]
    fn expensive_edge_is_avoided() {
        let mut net = grid();
        let s01 = net.segment_between(0, 1).unwrap();
        net.traffic[s01][0].lambda = 1e-4;
        let s12 = net.segment_between(1, 2).unwrap();
        net.traffic[s12][0].lambda = 1e-4;
        for t in net.traffic.iter_mut() {
            for d in t.iter_mut() {
                if d.lambda > 1e-4 {
                    d.lambda = 0.02;
                }
            }
        }
        let r = route_select(&net, at_node(&net, 0), at_node(&net, 2), MetricKind::Efd).unwrap();
        assert_eq!(r.nodes.first(), Some(&0));
        assert_eq!(r.nodes.last(), Some(&2));
        assert!(!r.nodes.contains(&1), "{:?}", r.nodes);
    }

    #[test]
    fn next_hops_walk_shortest_paths() {
        let net = grid();
        let t = geometric_next_hops(&net);
        let mut cur = 0;
        let mut path = vec![0];
        while cur != 8 {
            cur = t[cur][8];
            path.push(cur);
        }
        assert_eq!(path, vec![0, 1, 2, 5, 8]);
    }

    #[test]
    fn metric_limits() {
        let base = TrafficParams::default().with_segment_length(1500.0);
        let dense = base.with_lambda(0.2);
        let a = segment_metric(&dense, MetricKind::Efd).unwrap();
        let b = segment_metric(&dense, MetricKind::VaddDensity).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
        let empty = base.with_lambda(1e-12);
        let a = segment_metric(&empty, MetricKind::Efd).unwrap();
        let b = segment_metric(&empty, MetricKind::VaddDensity).unwrap();
        assert!((a - 1500.0 / base.v_eff()).abs() < 1e-6);
        assert!((a - b).abs() < 1e-6);
    }
}
