//! Simulator and optimization toolkit for uplink energy efficiency in a
//! UAV-aided IoT network with NOMA.
//!
//! The pipeline has three stages, iterated to a fixed point by the
//! [`orchestrator`]:
//!
//! 1. **Stop-point planning** ([`scenario`]): the UAV hover positions are the
//!    centers of a minimal disk covering of the target area, so every ground
//!    device has a line-of-sight link to at least one stop point.
//! 2. **Device scheduling and subchannel allocation** ([`matching`]): a
//!    many-to-one matching between devices and subchannel/stop-point (SS)
//!    units with peer effects, stabilized by swap operations and optionally
//!    improved by ε-exploration.
//! 3. **Power allocation** ([`power`]): per-unit transmit powers from
//!    Dinkelbach fractional programming, solved independently per SS unit.
//!
//! [`channel`] holds the link-level math shared by all stages: channel gains,
//! SIC decoding order, per-unit rate/power, and the network energy-efficiency
//! objective.

pub mod channel;
pub mod matching;
pub mod orchestrator;
pub mod power;
pub mod scenario;

use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// One or more configuration fields failed validation.
    #[error("invalid configuration:\n  {}", issues.join("\n  "))]
    InvalidConfig {
        /// One entry per offending field, `field: problem`.
        issues: Vec<String>,
    },

    /// Minimum elevation angle outside (0, pi/2) gives a degenerate LoS range.
    #[error("minimum elevation angle must lie in (0, pi/2) rad, got {0}")]
    InvalidElevation(f64),

    /// No covering-table entry has a small enough radius for the LoS range.
    #[error(
        "LoS radius {los_radius_m} m cannot cover an area of radius {area_radius_m} m \
         with any covering-table entry"
    )]
    UncoverableArea {
        los_radius_m: f64,
        area_radius_m: f64,
    },

    /// A covering table failed structural or coverage validation.
    #[error("invalid covering table: {0}")]
    InvalidCoveringTable(String),

    /// Operation requires a non-empty cluster.
    #[error("cluster is empty")]
    EmptyCluster,

    /// Assignment would exceed the per-unit quota.
    #[error("SS unit ({subchannel}, {stop_point}) is full (quota {quota})")]
    QuotaViolation {
        subchannel: usize,
        stop_point: usize,
        quota: usize,
    },

    /// The brute-force power oracle is restricted to small clusters.
    #[error("cluster of size {size} exceeds the oracle limit of {max}")]
    ClusterTooLarge { size: usize, max: usize },

    /// Dinkelbach's algorithm failed to terminate; signals numerical trouble.
    #[error("Dinkelbach iteration limit of {limit} reached")]
    IterationLimit { limit: usize },

    /// The alternating matching/power loop failed to reach a fixed point.
    #[error("outer loop failed to converge within {limit} iterations")]
    OuterIterationLimit { limit: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A config or table file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub use channel::{
    channel_gain, network_ee, sinr_profile, ss_unit_power, ss_unit_rate, ChannelGain, Cluster,
    Network, PowerAllocation, SsUnit,
};
pub use matching::{
    apply_swap, enumerate_swap_candidates, initialize_matching, is_swap_blocking, jdssa1, jdssa2,
    verify_exchange_stable, Matching, PreferenceList, SwapCandidate, SwapStats,
};
pub use orchestrator::{collect_metrics, juddsra, run_variant, Report, RunRecord, Solution, Variant};
pub use power::{
    brute_force_power_oracle, dabpa, dinkelbach_objective, inner_maximize, telescoped_rate,
    DabpaResult, DinkelbachState, FractionalProblem,
};
pub use scenario::{
    dbm_to_watts, generate_devices, los_radius, plan_deployment, plan_stop_points, CoveringEntry,
    CoveringTable, Deployment, Device, ScenarioConfig, StopPoint,
};
