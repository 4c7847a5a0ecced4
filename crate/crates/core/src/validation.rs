//! Analytical-versus-Monte-Carlo checks, grouped by the law they exercise.
//! Each check records what was observed, what the model predicts and the
//! rule used to compare them.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytics::{
    bridge_model, cluster_expectations, expected_gap_quadrature, geometric_cluster_pmf,
    segment_delay,
};
use crate::city::{run_city_experiment, CityConfig, CityRun, MetricKind};
use crate::cluster::cluster_sizes_and_spans;
use crate::error::{EfdError, Result};
use crate::params::{TrafficParams, METERS_PER_MILE, MPS_PER_MPH};
use crate::segment::{
    gap_census, quantile, simulate_traversal, simulate_trials, trial_seed, BridgeCase, SimConfig,
    SimMode,
};
use crate::traffic::{sample_direction, SegmentSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rule {
    /// `|observed - expected| <= tol * |expected|`
    Relative(f64),
    /// `|observed - expected| <= tol`
    Absolute(f64),
    /// `observed <= bound`
    AtMost(f64),
    /// `observed > 0`
    Positive,
    /// `observed < expected`
    Below,
    /// `observed <= expected`
    NotAbove,
}

impl Rule {
    pub fn holds(self, observed: f64, expected: f64) -> bool {
        match self {
            Rule::Relative(tol) => (observed - expected).abs() <= tol * expected.abs(),
            Rule::Absolute(tol) => (observed - expected).abs() <= tol,
            Rule::AtMost(bound) => observed <= bound,
            Rule::Positive => observed > 0.0,
            Rule::Below => observed < expected,
            Rule::NotAbove => observed <= expected,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Relative(t) => write!(f, "rel<={t}"),
            Rule::Absolute(t) => write!(f, "abs<={t}"),
            Rule::AtMost(b) => write!(f, "<={b}"),
            Rule::Positive => write!(f, ">0"),
            Rule::Below => write!(f, "<expected"),
            Rule::NotAbove => write!(f, "<=expected"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Acceptance criterion this check belongs to, 1-based.
    pub criterion: u8,
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub rule: Rule,
    pub passed: bool,
}

impl Check {
    pub fn new(
        criterion: u8,
        name: impl Into<String>,
        observed: f64,
        expected: f64,
        rule: Rule,
    ) -> Self {
        Self {
            criterion,
            name: name.into(),
            observed,
            expected,
            rule,
            passed: rule.holds(observed, expected),
        }
    }
}

/// Sample sizes for the suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPlan {
    pub roads: usize,
    pub gaps: u64,
    pub trials: usize,
    pub city_packets: usize,
    pub city_seeds: Vec<u64>,
    pub city_fleets: Vec<usize>,
    pub seed: u64,
}

impl ValidationPlan {
    pub fn full() -> Self {
        Self {
            roads: 100_000,
            gaps: 100_000,
            trials: 10_000,
            city_packets: 5000,
            city_seeds: (1..=5).collect(),
            city_fleets: vec![20, 40, 60, 80, 100],
            seed: 20_240_601,
        }
    }

    /// A smaller run for smoke checks; statistical rules keep their
    /// tolerances, so marginal checks may flip.
    pub fn quick() -> Self {
        Self {
            roads: 10_000,
            gaps: 10_000,
            trials: 1000,
            city_packets: 500,
            city_seeds: vec![1, 2],
            city_fleets: vec![20, 100],
            seed: 20_240_601,
        }
    }
}

fn at_lambda_r(x: f64) -> TrafficParams {
    let base = TrafficParams::default();
    base.with_lambda(x / base.range_r)
}

/// Everything measured about closed clusters on sampled roads.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterSample {
    pub sizes: Vec<usize>,
    pub spans: Vec<f64>,
    pub intra_gap_sum: f64,
    pub intra_gaps: u64,
}

impl ClusterSample {
    pub fn mean_size(&self) -> f64 {
        self.sizes.iter().sum::<usize>() as f64 / self.sizes.len() as f64
    }

    pub fn mean_span(&self) -> f64 {
        self.spans.iter().sum::<f64>() / self.spans.len() as f64
    }

    pub fn mean_intra_gap(&self) -> f64 {
        self.intra_gap_sum / self.intra_gaps as f64
    }
}

/// Clusters starting on `roads` sampled roads.
///
/// Each road is sampled with enough extra length that every cluster whose
/// tail lies on the road is seen to close; clusters that do not close in
/// the window are dropped (vanishingly rare).
pub fn sample_clusters(
    params: &TrafficParams,
    roads: usize,
    base_seed: u64,
) -> Result<ClusterSample> {
    let ce = cluster_expectations(params)?;
    let r = params.range_r;
    let margin = (40.0 * (ce.e_length + r)).max(10.0 * r);
    let window = params.with_segment_length(params.segment_length + margin);
    let per_road: Vec<(Vec<(usize, f64)>, f64, u64)> = (0..roads)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let xs: Vec<f64> = sample_direction(&window, trial_seed(base_seed, i))?
                .into_iter()
                .map(|v| v.position)
                .collect();
            let mut kept = Vec::new();
            let mut gap_sum = 0.0;
            let mut gaps = 0u64;
            let mut start = 0usize;
            for (size, span) in cluster_sizes_and_spans(&xs, r) {
                let tail = xs[start];
                let head = xs[start + size - 1];
                if tail <= params.segment_length && head + r < window.segment_length {
                    kept.push((size, span));
                    for w in xs[start..start + size].windows(2) {
                        gap_sum += w[1] - w[0];
                        gaps += 1;
                    }
                }
                start += size;
            }
            Ok((kept, gap_sum, gaps))
        })
        .collect::<Result<_>>()?;
    let mut out = ClusterSample::default();
    for (kept, gap_sum, gaps) in per_road {
        for (size, span) in kept {
            out.sizes.push(size);
            out.spans.push(span);
        }
        out.intra_gap_sum += gap_sum;
        out.intra_gaps += gaps;
    }
    if out.sizes.is_empty() {
        return Err(EfdError::InvalidConfig("no clusters sampled".into()));
    }
    Ok(out)
}

/// Pearson statistic of cluster sizes against the geometric law, with
/// sparse tail bins pooled. Returns (statistic, degrees of freedom).
pub fn geometric_chi_square(params: &TrafficParams, sizes: &[usize]) -> Result<(f64, usize)> {
    let n = sizes.len() as f64;
    let mut expected = Vec::new();
    let mut v = 1u64;
    let mut tail = 1.0;
    loop {
        let pv = geometric_cluster_pmf(params, v)?;
        if n * pv < 5.0 || n * (tail - pv) < 5.0 {
            break;
        }
        expected.push(n * pv);
        tail -= pv;
        v += 1;
    }
    expected.push(n * tail);
    let last = expected.len();
    let mut observed = vec![0.0; last];
    for &s in sizes {
        observed[(s - 1).min(last - 1)] += 1.0;
    }
    let stat = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    Ok((stat, last - 1))
}

fn chi_square_bound(df: usize, significance: f64) -> f64 {
    ChiSquared::new(df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - significance)
}

/// Cluster-size mean, span mean, conditional gap mean and size
/// distribution at each density point.
pub fn cluster_laws(plan: &ValidationPlan) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (k, x) in [0.5, 1.0, 2.5].into_iter().enumerate() {
        let params = at_lambda_r(x);
        let ce = cluster_expectations(&params)?;
        let sample = sample_clusters(&params, plan.roads, plan.seed + 1_000_000 * k as u64)?;
        out.push(Check::new(
            1,
            format!("mean cluster size, lambda*R={x}"),
            sample.mean_size(),
            ce.e_vehicles,
            Rule::Relative(0.02),
        ));
        out.push(Check::new(
            2,
            format!("mean cluster span, lambda*R={x}"),
            sample.mean_span(),
            ce.e_length,
            Rule::Relative(0.03),
        ));
        out.push(Check::new(
            2,
            format!("conditional gap mean, lambda*R={x}"),
            sample.mean_intra_gap(),
            expected_gap_quadrature(&params)?,
            Rule::Relative(0.005),
        ));
        let (stat, df) = geometric_chi_square(&params, &sample.sizes)?;
        out.push(Check::new(
            3,
            format!("cluster size chi-square (df={df}), lambda*R={x}"),
            stat,
            df as f64,
            Rule::AtMost(chi_square_bound(df, 0.01)),
        ));
    }
    Ok(out)
}

/// Case frequencies and mean carry over classified gaps.
pub fn bridge_laws(plan: &ValidationPlan) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (k, x) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let params = at_lambda_r(x);
        let model = bridge_model(&params)?;
        let probs = model.probabilities();
        out.push(Check::new(
            4,
            format!("case probabilities sum, lambda*R={x}"),
            probs.iter().sum(),
            1.0,
            Rule::Absolute(1e-12),
        ));
        let census = gap_census(
            &params,
            plan.gaps,
            plan.seed + 2_000_000 + 1_000_000 * k as u64,
        )?;
        let n = census.gaps as f64;
        for (case, &p) in BridgeCase::ALL.iter().zip(&probs) {
            let sigma = (p * (1.0 - p) / n).sqrt();
            out.push(Check::new(
                4,
                format!("{} frequency, lambda*R={x}", case.label()),
                census.counts[case.index()] as f64 / n,
                p,
                Rule::Absolute(3.0 * sigma),
            ));
        }
        out.push(Check::new(
            5,
            format!("mean carry per gap, lambda*R={x}"),
            census.mean_carry,
            model.e_carry,
            Rule::Relative(0.05),
        ));
    }
    Ok(out)
}

/// One empty mile at 40 MPH.
pub fn empty_mile_anchor() -> Result<Vec<Check>> {
    let v = 40.0 * MPS_PER_MPH;
    let params = TrafficParams {
        lambda: 1e-12,
        v_min: v,
        v_max: v,
        segment_length: METERS_PER_MILE,
        ..TrafficParams::default()
    };
    let analytic = segment_delay(&params)?;
    let empty = SegmentSnapshot::from_positions(params, &[], &[]);
    let simulated = simulate_traversal(&empty, &SimConfig::new(params, 1, 0))?.total;
    Ok(vec![
        Check::new(6, "empty mile, model", analytic, 90.0, Rule::Absolute(0.1)),
        Check::new(
            6,
            "empty mile, simulator",
            simulated,
            90.0,
            Rule::Absolute(0.1),
        ),
    ])
}

/// Model segment delay against the simulated mean.
pub fn recursion_agreement(plan: &ValidationPlan) -> Result<Vec<Check>> {
    let params = TrafficParams {
        lambda: 0.01,
        range_r: 250.0,
        segment_length: 2000.0,
        ..TrafficParams::default()
    };
    let records = simulate_trials(&SimConfig::new(params, plan.trials, plan.seed + 7))?;
    let mean = records.iter().map(|r| r.breakdown.total).sum::<f64>() / records.len() as f64;
    Ok(vec![Check::new(
        7,
        "segment delay vs simulated mean, lambda=0.01",
        segment_delay(&params)?,
        mean,
        Rule::Relative(0.15),
    )])
}

/// Paired bidirectional and one-directional traversals of the same roads.
pub fn bidirectional_dominance(plan: &ValidationPlan) -> Result<Vec<Check>> {
    let params = at_lambda_r(1.0);
    let config = SimConfig::new(params, plan.trials, plan.seed + 8);
    let both = simulate_trials(&config)?;
    let one = simulate_trials(&config.with_mode(SimMode::OneDirectional))?;
    let violations = both
        .iter()
        .zip(&one)
        .filter(|(b, o)| b.breakdown.total > o.breakdown.total)
        .count();
    let n = both.len() as f64;
    let mean_both = both.iter().map(|r| r.breakdown.total).sum::<f64>() / n;
    let mean_one = one.iter().map(|r| r.breakdown.total).sum::<f64>() / n;
    Ok(vec![
        Check::new(
            8,
            "trials where bidirectional is slower",
            violations as f64,
            0.0,
            Rule::AtMost(0.0),
        ),
        Check::new(
            8,
            "mean delay reduction, s",
            mean_one - mean_both,
            0.0,
            Rule::Positive,
        ),
    ])
}

/// City runs for every (fleet, seed, metric), in a fixed order.
pub fn city_runs(plan: &ValidationPlan) -> Result<Vec<CityRun>> {
    let jobs: Vec<CityConfig> = plan
        .city_fleets
        .iter()
        .flat_map(|&n| {
            plan.city_seeds.iter().flat_map(move |&seed| {
                [MetricKind::Efd, MetricKind::VaddDensity].map(|metric| CityConfig {
                    n_vehicles: n,
                    seed,
                    metric,
                    packets: plan.city_packets,
                    ..CityConfig::default()
                })
            })
        })
        .collect();
    jobs.par_iter().map(run_city_experiment).collect()
}

/// EFD against VADD routing on the grid city.
pub fn city_comparison(plan: &ValidationPlan) -> Result<Vec<Check>> {
    let runs = city_runs(plan)?;
    let mut out = Vec::new();
    for pair in runs.chunks(2) {
        let (efd, vadd) = (&pair[0].summary, &pair[1].summary);
        out.push(Check::new(
            9,
            format!(
                "mean delay efd<vadd, N={} seed={}",
                efd.n_vehicles, efd.seed
            ),
            efd.mean_delay,
            vadd.mean_delay,
            Rule::Below,
        ));
    }
    let densest = *plan
        .city_fleets
        .iter()
        .max()
        .expect("at least one fleet size");
    let pooled = |metric: MetricKind| -> Vec<f64> {
        let mut d: Vec<f64> = runs
            .iter()
            .filter(|r| r.summary.n_vehicles == densest && r.summary.metric == metric)
            .flat_map(|r| r.packets.iter().filter_map(|p| p.delay))
            .collect();
        d.sort_by(f64::total_cmp);
        d
    };
    let (efd, vadd) = (pooled(MetricKind::Efd), pooled(MetricKind::VaddDensity));
    for k in 1..=9 {
        let q = k as f64 / 10.0;
        out.push(Check::new(
            9,
            format!("delay quantile {q:.1} efd<=vadd, N={densest}"),
            quantile(&efd, q),
            quantile(&vadd, q),
            Rule::NotAbove,
        ));
    }
    Ok(out)
}

/// Every check in criterion order.
pub fn run_all(plan: &ValidationPlan) -> Result<Vec<Check>> {
    let mut out = cluster_laws(plan)?;
    out.extend(bridge_laws(plan)?);
    out.extend(empty_mile_anchor()?);
    out.extend(recursion_agreement(plan)?);
    out.extend(bidirectional_dominance(plan)?);
    out.extend(city_comparison(plan)?);
    out.sort_by_key(|c| c.criterion);
    Ok(out)
}
