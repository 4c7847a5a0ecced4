//! Closed-form expected forwarding delay (EFD) model for one road segment.
//!
//! Inter-vehicle gaps are exponential with spatial rate `lambda`. A gap no
//! longer than the radio range `R` keeps two vehicles in the same cluster, so
//! cluster sizes are geometric and within-cluster gaps are truncated
//! exponentials on `(0, R]`. A gap wider than `R` is a disconnection which an
//! oncoming (opposite-direction) cluster may bridge.

pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{EfdError, Result};
use crate::params::TrafficParams;
use quadrature::{adaptive_simpson, ABS_TOL};

/// Largest `lambda * range_r` accepted before `exp` overflows matter.
pub const MAX_LAMBDA_R: f64 = 700.0;

/// Expectations describing one cluster of co-directional vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterExpectations {
    /// `Pr{X <= R}`.
    pub p_connect: f64,
    /// Mean within-cluster gap, meters.
    pub e_gap: f64,
    /// Mean number of vehicles per cluster.
    pub e_vehicles: f64,
    /// Mean cluster span, meters.
    pub e_length: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub e_hops: f64,
    /// Mean multi-hop delay across one cluster, seconds.
    pub e_cluster_delay: f64,
}

/// Opposite-direction bridging at a disconnection.
///
/// `p1`: an oncoming cluster reaches both sides, no carry.
/// `p2`: it reaches only the far side; carry `(R - X)/2`.
/// `p3`: it reaches only the near side; carry `X/2`.
/// `p_none`: neither side is reachable; carry the excess gap `W - R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeModel {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p_none: f64,
    pub e_carry_case2: f64,
    pub e_carry_case3: f64,
    pub e_carry_none: f64,
    /// Expected carry length per disconnection, meters.
    pub e_carry: f64,
}

impl BridgeModel {
    pub fn probabilities(&self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p_none]
    }
}

fn checked(params: &TrafficParams) -> Result<f64> {
    params.validate()?;
    let x = params.lambda_r();
    if x > MAX_LAMBDA_R {
        return Err(EfdError::Saturated {
            product: x,
            limit: MAX_LAMBDA_R,
        });
    }
    Ok(x)
}

/// `Pr{X <= R} = 1 - exp(-lambda R)`.
pub fn prob_connected(params: &TrafficParams) -> Result<f64> {
    let x = checked(params)?;
    Ok(-(-x).exp_m1())
}

// 1 - e^{-x}(1 + x), stable for small x.
fn truncated_mean_numerator(x: f64) -> f64 {
    if x < 0.05 {
        numerator_series(x)
    } else {
        1.0 - (-x).exp() * (1.0 + x)
    }
}

// sum_{k>=2} (-1)^k (k-1) x^k / k!
fn numerator_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = 0.0;
    for k in 2..30u32 {
        term *= x / f64::from(k);
        let signed = if k % 2 == 0 { term } else { -term };
        sum += signed * f64::from(k - 1);
    }
    sum
}

/// Mean of the gap distribution truncated to `(0, R]`.
pub fn expected_gap(params: &TrafficParams) -> Result<f64> {
    let x = checked(params)?;
    let p = -(-x).exp_m1();
    Ok(truncated_mean_numerator(x) / (params.lambda * p))
}

fn truncated_density(params: &TrafficParams) -> impl Fn(f64) -> f64 {
    let lambda = params.lambda;
    let norm = -(-params.lambda_r()).exp_m1();
    move |x: f64| lambda * (-lambda * x).exp() / norm
}

/// `E[g(X) | X <= R]` by adaptive quadrature.
pub fn truncated_expectation<G: Fn(f64) -> f64>(params: &TrafficParams, g: G) -> Result<f64> {
    checked(params)?;
    let density = truncated_density(params);
    Ok(adaptive_simpson(
        |x| g(x) * density(x),
        0.0,
        params.range_r,
        ABS_TOL,
    ))
}

/// Same quantity as [`expected_gap`], integrated numerically.
pub fn expected_gap_quadrature(params: &TrafficParams) -> Result<f64> {
    truncated_expectation(params, |x| x)
}

pub fn cluster_expectations(params: &TrafficParams) -> Result<ClusterExpectations> {
    let x = checked(params)?;
    let p_connect = -(-x).exp_m1();
    let e_gap = expected_gap(params)?;
    let e_vehicles = x.exp();
    // (e^{x} - 1) E[X], Wald over the V - 1 gaps inside a cluster
    let e_length = x.exp_m1() * e_gap;
    let h_min = e_length / params.range_r;
    let h_max = e_length / e_gap;
    let e_hops = 0.5 * (h_min + h_max);
    Ok(ClusterExpectations {
        p_connect,
        e_gap,
        e_vehicles,
        e_length,
        h_min,
        h_max,
        e_hops,
        e_cluster_delay: e_hops * params.hop_delay,
    })
}

/// Geometric probability that a cluster holds exactly `v` vehicles.
pub fn geometric_cluster_pmf(params: &TrafficParams, v: u64) -> Result<f64> {
    if v < 1 {
        return Err(EfdError::Domain(v));
    }
    let p = prob_connected(params)?;
    let exponent = i32::try_from(v - 1).unwrap_or(i32::MAX);
    Ok((1.0 - p) * p.powi(exponent))
}

pub fn bridge_model(params: &TrafficParams) -> Result<BridgeModel> {
    let p = prob_connected(params)?;
    let q = 1.0 - p;
    let r = params.range_r;
    let e_carry_case2 = truncated_expectation(params, |x| 0.5 * (r - x))?;
    let e_carry_case3 = 0.5 * expected_gap(params)?;
    // memoryless excess of a gap beyond R
    let e_carry_none = 1.0 / params.lambda;
    let p1 = p * p;
    let p2 = q * p;
    let p3 = p * q;
    let p_none = q * q;
    Ok(BridgeModel {
        p1,
        p2,
        p3,
        p_none,
        e_carry_case2,
        e_carry_case3,
        e_carry_none,
        e_carry: p2 * e_carry_case2 + p3 * e_carry_case3 + p_none * e_carry_none,
    })
}

/// Unrolls the connection/disconnection recursion along `segment_length`.
///
/// Every cycle charges one cluster delay plus the carry, and consumes the
/// cluster length, the carried length and one radio range. The carry is
/// capped by the road still ahead when the cycle starts. When the expected
/// cluster runs past the end, the cycle is charged in proportion to the
/// part of it on the road, so a road shorter than one cluster costs a share
/// of the hops and almost no carry.
fn accumulate_cycles(
    segment_length: f64,
    cluster_length: f64,
    cluster_delay: f64,
    carry: f64,
    range_r: f64,
    speed: f64,
) -> f64 {
    let mut remaining = segment_length;
    let mut total = 0.0;
    while remaining > 0.0 {
        let carried = carry.min(remaining);
        let share = if cluster_length > remaining {
            remaining / cluster_length
        } else {
            1.0
        };
        total += share * (cluster_delay + carried / speed);
        remaining -= cluster_length + carried + range_r;
    }
    total
}

/// Density-dependent expectations of one segment direction, reusable for
/// any length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentModel {
    pub params: TrafficParams,
    pub cluster: ClusterExpectations,
    pub bridge: BridgeModel,
}

impl SegmentModel {
    pub fn new(params: &TrafficParams) -> Result<Self> {
        Ok(Self {
            params: *params,
            cluster: cluster_expectations(params)?,
            bridge: bridge_model(params)?,
        })
    }

    /// Bidirectional expected delay over `length` meters.
    pub fn delay(&self, length: f64) -> f64 {
        accumulate_cycles(
            length,
            self.cluster.e_length,
            self.cluster.e_cluster_delay,
            self.bridge.e_carry,
            self.params.range_r,
            self.params.v_eff(),
        )
    }

    /// Expected delay over `length` meters when every disconnection is
    /// carried across its full excess `1/lambda`.
    pub fn one_directional_delay(&self, length: f64) -> f64 {
        accumulate_cycles(
            length,
            self.cluster.e_length,
            self.cluster.e_cluster_delay,
            self.bridge.e_carry_none,
            self.params.range_r,
            self.params.v_eff(),
        )
    }
}

/// Expected forwarding delay over the whole segment, seconds.
pub fn segment_delay(params: &TrafficParams) -> Result<f64> {
    Ok(SegmentModel::new(params)?.delay(params.segment_length))
}

/// The same recursion without opposite-direction bridging.
pub fn one_directional_segment_delay(params: &TrafficParams) -> Result<f64> {
    Ok(SegmentModel::new(params)?.one_directional_delay(params.segment_length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn at(lambda_r: f64) -> TrafficParams {
        TrafficParams::default().with_lambda(lambda_r / 250.0)
    }

    #[test]
    fn prob_connected_at_unit_density() {
        let p = prob_connected(&at(1.0)).unwrap();
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((p - 0.63212).abs() < 1e-5);
    }

    #[test]
    fn prob_connected_vanishes_on_empty_road() {
        assert!(prob_connected(&at(1e-12)).unwrap() < 1e-11);
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(prob_connected(&at(0.0)).is_err());
        let p = TrafficParams {
            range_r: 0.0,
            ..Default::default()
        };
        assert!(expected_gap(&p).is_err());
    }

    #[test]
    fn saturates_beyond_limit() {
        assert!(matches!(
            cluster_expectations(&at(701.0)),
            Err(EfdError::Saturated { .. })
        ));
        assert!(cluster_expectations(&at(700.0)).is_ok());
    }

    #[test]
    fn expected_gap_limits() {
        let sparse = at(1e-3);
        let g = expected_gap(&sparse).unwrap();
        assert!((g / 125.0 - 1.0).abs() < 1e-3, "{g}");
        let tiny = at(1e-9);
        assert!((expected_gap(&tiny).unwrap() - 125.0).abs() < 1e-6);
        let dense = at(60.0);
        assert!((expected_gap(&dense).unwrap() * dense.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_and_direct_forms_agree_at_switch_point() {
        let x: f64 = 0.05;
        let direct = 1.0 - (-x).exp() * (1.0 + x);
        assert!((numerator_series(x) / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form_gap() {
        for lr in [0.01, 0.5, 1.0, 2.5, 10.0] {
            let p = at(lr);
            let a = expected_gap(&p).unwrap();
            let b = expected_gap_quadrature(&p).unwrap();
            assert!((a - b).abs() < 1e-6, "lambda_r={lr}: {a} vs {b}");
        }
    }

    #[test]
    fn cluster_vehicle_count_is_e_at_unit_density() {
        let c = cluster_expectations(&at(1.0)).unwrap();
        assert!((c.e_vehicles - E).abs() < 1e-12);
        assert!((c.e_vehicles - 1.0 / (1.0 - c.p_connect)).abs() < 1e-12);
    }

    #[test]
    fn isolated_vehicles_in_sparse_limit() {
        let c = cluster_expectations(&at(1e-10)).unwrap();
        assert!((c.e_vehicles - 1.0).abs() < 1e-9);
        assert!(c.e_length < 1e-6);
        assert!(c.e_cluster_delay < 1e-9);
    }

    #[test]
    fn cluster_expectations_at_reference_density() {
        let p = TrafficParams::default().with_lambda(0.01);
        let c = cluster_expectations(&p).unwrap();
        assert!((c.e_vehicles - 2.5f64.exp()).abs() < 1e-9);
        assert!((c.e_vehicles - 12.182).abs() < 1e-3);
        assert!(c.h_min <= c.e_hops && c.e_hops <= c.h_max);
    }

    #[test]
    fn pmf_head_term_and_normalization() {
        let head = geometric_cluster_pmf(&at(1.0), 1).unwrap();
        assert!((head - (-1.0f64).exp()).abs() < 1e-15);
        let p = at(2.0);
        let total: f64 = (1..=10_000)
            .map(|v| geometric_cluster_pmf(&p, v).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(geometric_cluster_pmf(&p, 0), Err(EfdError::Domain(0)));
    }

    #[test]
    fn bridge_probabilities_at_unit_density() {
        let b = bridge_model(&at(1.0)).unwrap();
        assert!((b.p1 - 0.39958).abs() < 1e-5);
        assert!((b.p2 - 0.23254).abs() < 1e-5);
        assert!((b.p3 - 0.23254).abs() < 1e-5);
        assert!((b.p_none - 0.13534).abs() < 1e-5);
        assert!((b.p1 + b.p2 + b.p3 + b.p_none - 1.0).abs() < 1e-12);
    }

    #[test]
    fn case2_quadrature_matches_linear_closed_form() {
        for lr in [0.1, 1.0, 3.0, 20.0] {
            let p = at(lr);
            let b = bridge_model(&p).unwrap();
            let closed = 0.5 * (p.range_r - expected_gap(&p).unwrap());
            assert!((b.e_carry_case2 - closed).abs() < 1e-6);
        }
    }

    #[test]
    fn dense_traffic_always_bridges() {
        let b = bridge_model(&at(40.0)).unwrap();
        assert!(b.p1 > 1.0 - 1e-15);
        assert!(b.e_carry < 1e-12);
    }

    #[test]
    fn empty_mile_at_forty_mph_takes_ninety_seconds() {
        let v = 40.0 * crate::params::MPS_PER_MPH;
        let p = TrafficParams {
            lambda: 1e-12,
            v_min: v,
            v_max: v,
            segment_length: 1609.34,
            ..Default::default()
        };
        let d = segment_delay(&p).unwrap();
        assert!((d - 90.0).abs() < 0.1, "{d}");
    }

    #[test]
    fn zero_length_segment_costs_nothing() {
        assert_eq!(accumulate_cycles(0.0, 100.0, 1.0, 10.0, 250.0, 10.0), 0.0);
        assert_eq!(accumulate_cycles(-5.0, 100.0, 1.0, 10.0, 250.0, 10.0), 0.0);
    }

    #[test]
    fn segment_delay_decreases_with_density() {
        let delays: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&lr| segment_delay(&at(lr)).unwrap())
            .collect();
        for w in delays.windows(2) {
            assert!(w[1] < w[0], "{delays:?}");
        }
    }

    #[test]
    fn bidirectional_never_costs_more_than_one_directional() {
        for lr in [0.05, 0.3, 1.0, 2.0, 6.0] {
            for len in [100.0, 900.0, 1689.8, 4000.0] {
                let p = at(lr).with_segment_length(len);
                assert!(segment_delay(&p).unwrap() <= one_directional_segment_delay(&p).unwrap());
            }
        }
    }
}
