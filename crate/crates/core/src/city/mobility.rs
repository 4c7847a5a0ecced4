//! Random waypoint movement on the grid: pick a uniformly random
//! intersection, drive the geometric shortest path to it at a speed drawn
//! once per trip, then immediately pick the next one.

use std::collections::VecDeque;

use rand::Rng;

use super::network::{NetPosition, RoadNetwork};
use crate::traffic::VehicleId;

#[derive(Debug, Clone, PartialEq)]
pub struct MobileVehicle {
    pub id: VehicleId,
    pub segment: usize,
    /// Meters from the segment's `a` end.
    pub offset: f64,
    /// Intersection currently driven toward.
    pub toward: usize,
    pub speed: f64,
    /// Intersections left on the current trip after `toward`.
    pub plan: VecDeque<usize>,
}

impl MobileVehicle {
    pub fn position(&self) -> NetPosition {
        NetPosition {
            segment: self.segment,
            offset: self.offset,
        }
    }

    /// 0 when moving a -> b, 1 when moving b -> a.
    pub fn direction(&self, network: &RoadNetwork) -> usize {
        usize::from(network.segments[self.segment].a == self.toward)
    }
}

pub struct Mobility<'a> {
    network: &'a RoadNetwork,
    next_hop: &'a [Vec<usize>],
    v_min: f64,
    v_max: f64,
}

impl<'a> Mobility<'a> {
    pub fn new(
        network: &'a RoadNetwork,
        next_hop: &'a [Vec<usize>],
        v_min: f64,
        v_max: f64,
    ) -> Self {
        Self {
            network,
            next_hop,
            v_min,
            v_max,
        }
    }

    fn draw_speed<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.v_min < self.v_max {
            rng.gen_range(self.v_min..=self.v_max)
        } else {
            self.v_min
        }
    }

    /// Uniform over road length, random heading.
    pub fn place<R: Rng>(&self, id: VehicleId, rng: &mut R) -> MobileVehicle {
        let total: f64 = self.network.segments.iter().map(|s| s.length).sum();
        let mut pick = rng.gen_range(0.0..total);
        let mut segment = self.network.segments.len() - 1;
        for s in &self.network.segments {
            if pick < s.length {
                segment = s.id;
                break;
            }
            pick -= s.length;
        }
        let seg = &self.network.segments[segment];
        let offset = rng.gen_range(0.0..seg.length);
        let toward = if rng.gen_bool(0.5) { seg.a } else { seg.b };
        MobileVehicle {
            id,
            segment,
            offset,
            toward,
            speed: self.draw_speed(rng),
            plan: VecDeque::new(),
        }
    }

    fn new_trip<R: Rng>(&self, vehicle: &mut MobileVehicle, rng: &mut R) {
        let here = vehicle.toward;
        let n = self.network.node_count();
        let mut target = rng.gen_range(0..n - 1);
        if target >= here {
            target += 1;
        }
        vehicle.speed = self.draw_speed(rng);
        vehicle.plan.clear();
        let mut cur = here;
        while cur != target {
            cur = self.next_hop[cur][target];
            vehicle.plan.push_back(cur);
        }
    }

    /// Advances one vehicle by `dt` seconds.
    pub fn step<R: Rng>(&self, vehicle: &mut MobileVehicle, dt: f64, rng: &mut R) {
        let mut time_left = dt;
        loop {
            let seg = &self.network.segments[vehicle.segment];
            let to_node = if vehicle.toward == seg.b {
                seg.length - vehicle.offset
            } else {
                vehicle.offset
            };
            let reach = vehicle.speed * time_left;
            if reach < to_node {
                if vehicle.toward == seg.b {
                    vehicle.offset += reach;
                } else {
                    vehicle.offset -= reach;
                }
                return;
            }
            time_left -= to_node / vehicle.speed;
            let node = vehicle.toward;
            if vehicle.plan.is_empty() {
                self.new_trip(vehicle, rng);
            }
            let next = vehicle.plan.pop_front().expect("trip has at least one hop");
            let s = self
                .network
                .segment_between(node, next)
                .expect("next hop is adjacent");
            let seg = &self.network.segments[s];
            vehicle.segment = s;
            vehicle.offset = if seg.a == node { 0.0 } else { seg.length };
            vehicle.toward = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::city::network::build_grid;
    use crate::city::routing::geometric_next_hops;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vehicles_stay_on_the_road_and_keep_moving() {
        let net = build_grid(5, 5, 6000.0, 5000.0).unwrap();
        let hops = geometric_next_hops(&net);
        let m = Mobility::new(&net, &hops, 8.9, 22.4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut fleet: Vec<MobileVehicle> =
            (0..50).map(|i| m.place(VehicleId(i), &mut rng)).collect();
        let start: Vec<NetPosition> = fleet.iter().map(|v| v.position()).collect();
        for _ in 0..2000 {
            for v in fleet.iter_mut() {
                m.step(v, 1.0, &mut rng);
                let seg = &net.segments[v.segment];
                assert!(v.offset >= 0.0 && v.offset <= seg.length);
                assert!(seg.has_end(v.toward));
                assert!(v.speed >= 8.9 && v.speed <= 22.4);
            }
        }
        let moved = fleet
            .iter()
            .zip(&start)
            .filter(|(v, s)| v.position() != **s)
            .count();
        assert_eq!(moved, 50);
    }

    #[test]
    fn one_step_covers_speed_times_dt_on_a_segment() {
        let net = build_grid(2, 2, 1000.0, 1000.0).unwrap();
        let hops = geometric_next_hops(&net);
        let m = Mobility::new(&net, &hops, 10.0, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut v = MobileVehicle {
            id: VehicleId(0),
            segment: 0,
            offset: 100.0,
            toward: net.segments[0].b,
            speed: 10.0,
            plan: VecDeque::new(),
        };
        m.step(&mut v, 5.0, &mut rng);
        assert_eq!(v.offset, 150.0);
    }
}
