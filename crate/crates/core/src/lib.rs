//! Expected forwarding delay (EFD) for bidirectional vehicular ad hoc
//! networks: the closed-form segment model, a seeded traffic sampler, cluster
//! detection, a Monte Carlo segment simulator, and a grid city experiment.

pub mod analytics;
pub mod city;
pub mod cluster;
pub mod error;
pub mod params;
pub mod segment;
pub mod traffic;
pub mod validation;

pub use analytics::{
    bridge_model, cluster_expectations, expected_gap, geometric_cluster_pmf,
    one_directional_segment_delay, prob_connected, segment_delay, BridgeModel, ClusterExpectations,
    SegmentModel,
};
pub use city::{run_city_experiment, CityConfig, CityRun, CitySummary, MetricKind, PacketRecord};
pub use cluster::{find_clusters, greedy_hop_chain, Cluster};
pub use error::{EfdError, Result};
pub use params::{TrafficParams, METERS_PER_MILE, MPS_PER_MPH};
pub use segment::{
    classify_gap, run_trials, simulate_traversal, BridgeCase, DelayBreakdown, GapClass, Kinematics,
    SimConfig, SimMode, TrialSummary,
};
pub use traffic::{
    sample_direction, sample_segment, Direction, SegmentSnapshot, VehicleId, VehicleState,
};
