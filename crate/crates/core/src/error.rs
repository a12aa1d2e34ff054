use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("density {rho} outside [0, {rho_jam}]")]
    DensityOutOfRange { rho: f64, rho_jam: f64 },

    #[error("flow {flow} exceeds capacity {f_max}")]
    CapacityExceeded { flow: f64, f_max: f64 },

    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("vehicle count {beta} outside [0, {total}]")]
    CountOutOfRange { beta: f64, total: f64 },

    #[error("entry curve carries unbounded or non-finite mass")]
    UnboundedMass,

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    #[error("group {group} has no viable path from {origin} to {destination}")]
    NoViablePath {
        group: usize,
        origin: String,
        destination: String,
    },

    #[error("costs are not coercive within {limit} time units of the origin; widen the scan")]
    NotCoercive { limit: f64 },

    #[error("cost sum of group {group} is not monotone beyond t = {at}: oscillatory costs are not supported")]
    OscillatoryCost { group: usize, at: f64 },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("departure profile is not admissible: {0}")]
    Inadmissible(String),

    #[error("network did not drain by t = {horizon} ({remaining} vehicles still travelling)")]
    DrainFailure { horizon: f64, remaining: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}
