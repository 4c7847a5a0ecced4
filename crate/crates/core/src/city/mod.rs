//! Grid city: road network, random waypoint mobility, metric routing and
//! the packet delivery experiment.

pub mod experiment;
pub mod mobility;
pub mod network;
pub mod routing;

pub use experiment::{run_city_experiment, CityConfig, CityRun, CitySummary, PacketRecord};
pub use mobility::{MobileVehicle, Mobility};
pub use network::{
    build_grid, Intersection, NetPosition, RoadNetwork, Segment, DEFAULT_HEIGHT, DEFAULT_WIDTH,
};
pub use routing::{route_select, route_with_table, segment_metric, MetricKind, MetricTable, Route};
