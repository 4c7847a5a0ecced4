use efd_core::city::{build_grid, route_select, segment_metric, MetricTable, NetPosition};
use efd_core::{
    bridge_model, prob_connected, segment_delay, simulate_traversal, MetricKind, SegmentSnapshot,
    SimConfig, SimMode, TrafficParams,
};
use proptest::prelude::*;

fn params(lambda_r: f64, length: f64) -> TrafficParams {
    let base = TrafficParams::default();
    TrafficParams {
        lambda: lambda_r / base.range_r,
        segment_length: length,
        ..base
    }
}

proptest! {
    #[test]
    fn connection_probability_is_a_probability_and_grows(x in 0.01f64..20.0, dx in 0.01f64..5.0) {
        let a = prob_connected(&params(x, 2000.0)).unwrap();
        let b = prob_connected(&params(x + dx, 2000.0)).unwrap();
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert!(b > a);
    }

    #[test]
    fn case_probabilities_partition_unity(x in 0.001f64..50.0) {
        let m = bridge_model(&params(x, 2000.0)).unwrap();
        let sum: f64 = m.probabilities().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(m.probabilities().iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn bidirectional_metric_never_exceeds_one_directional(x in 0.01f64..10.0, len in 100.0f64..8000.0) {
        let p = params(x, len);
        let efd = segment_metric(&p, MetricKind::Efd).unwrap();
        let vadd = segment_metric(&p, MetricKind::VaddDensity).unwrap();
        prop_assert!(efd.is_finite() && efd > 0.0);
        prop_assert!(efd <= vadd * (1.0 + 1e-12));
    }

    // Outside this band the delay flattens: very sparse roads are one long
    // carry, and on very dense ones the per-vehicle hop term takes over.
    #[test]
    fn denser_roads_are_faster(x in 0.25f64..4.0, y in 0.25f64..4.0) {
        prop_assume!(y > 1.01 * x);
        let a = segment_delay(&params(x, 2000.0)).unwrap();
        let b = segment_delay(&params(y, 2000.0)).unwrap();
        prop_assert!(b < a, "{} -> {}", a, b);
    }

    #[test]
    fn traversal_accounting_and_dominance(
        fwd in prop::collection::vec(0.0f64..2250.0, 0..30),
        bwd in prop::collection::vec(-250.0f64..2250.0, 0..30),
    ) {
        let p = params(1.0, 2000.0);
        let snap = SegmentSnapshot::from_positions(p, &fwd, &bwd);
        let both = simulate_traversal(&snap, &SimConfig::new(p, 1, 0)).unwrap();
        let one = simulate_traversal(&snap, &SimConfig::new(p, 1, 0).with_mode(SimMode::OneDirectional)).unwrap();
        for d in [&both, &one] {
            prop_assert!((d.total - d.multihop_time - d.carry_time).abs() < 1e-9);
            prop_assert!(d.total >= 0.0);
            prop_assert!(d.carry_time <= p.segment_length / p.v_eff() + 1e-9);
            prop_assert!(d.bridges_used <= d.gaps());
        }
        prop_assert!(both.total <= one.total + 1e-9);
        prop_assert_eq!(one.bridges_used, 0);
    }

    #[test]
    fn routes_are_walks_with_matching_cost(
        lambdas in prop::collection::vec(1e-4f64..0.03, 80),
        src in (0usize..40, 0.0f64..1.0),
        dst in (0usize..40, 0.0f64..1.0),
    ) {
        let mut net = build_grid(5, 5, 6759.0, 5955.0).unwrap();
        for (s, t) in net.traffic.iter_mut().enumerate() {
            t[0].lambda = lambdas[2 * s];
            t[1].lambda = lambdas[2 * s + 1];
        }
        let at = |(s, f): (usize, f64)| NetPosition { segment: s, offset: f * net.segments[s].length };
        let (a, b) = (at(src), at(dst));
        let route = route_select(&net, a, b, MetricKind::Efd).unwrap();
        let table = MetricTable::new(&net, MetricKind::Efd).unwrap();
        if src.0 == dst.0 {
            prop_assert!(route.nodes.is_empty());
        } else {
            let first = route.nodes[0];
            let last = *route.nodes.last().unwrap();
            prop_assert!(net.segments[a.segment].has_end(first));
            prop_assert!(net.segments[b.segment].has_end(last));
            let mut cost = 0.0;
            let sa = &net.segments[a.segment];
            cost += if first == sa.a {
                table.partial(sa.id, 1, a.offset)
            } else {
                table.partial(sa.id, 0, sa.length - a.offset)
            };
            for w in route.nodes.windows(2) {
                let s = net.segment_between(w[0], w[1]);
                prop_assert!(s.is_some(), "{:?} not adjacent", w);
                let s = s.unwrap();
                cost += table.costs[s][net.segments[s].direction_from(w[0])];
            }
            let sb = &net.segments[b.segment];
            cost += if last == sb.a {
                table.partial(sb.id, 0, b.offset)
            } else {
                table.partial(sb.id, 1, sb.length - b.offset)
            };
            prop_assert!((cost - route.cost).abs() <= 1e-9 * cost.max(1.0), "{} vs {}", cost, route.cost);
        }
    }
}
