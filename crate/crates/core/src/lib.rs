//! Cell-level simulator for D2D spectrum reuse underlaying a fully loaded
//! cellular uplink.
//!
//! The allocation pipeline runs per topology drop:
//!
//! 1. [`qos`] turns token-bucket traffic parameters and a latency budget into
//!    a minimum SINR for every link.
//! 2. [`channel`] drops CUs and D2D pairs in the cell and computes link gains.
//! 3. [`allocation`] decides which (CU, D2D) pairs can share a channel and
//!    picks the sum-rate-optimal transmit powers for each admissible pair.
//! 4. [`matching`] weights admissible pairs by their rate increment and
//!    solves the reuse assignment with the Hungarian algorithm.
//!
//! [`experiment`] wraps the pipeline in Monte Carlo sweeps over the number of
//! D2D pairs, and [`cli`] exposes it as the `d2dsim` command.

pub mod allocation;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod matching;
pub mod oracle;
pub mod qos;
pub mod units;

pub use allocation::{
    optimal_power, point_a, reuse_candidates, slope_condition, FeasiblePoint, PairGains,
    PowerLimits, PowerPair, ReuseCandidate, ReuseCandidates,
};
pub use channel::{
    compute_gains, generate_topology, CellLayout, GainTable, PathlossModel, Point, Topology,
    TopologyRequest,
};
pub use error::{Error, Result};
pub use experiment::{
    run_slicing_comparison, run_slicing_comparison_with, run_sweep, run_sweep_with, run_trial,
    with_workers, ExecMode, Scenario, ScenarioConfig, SweepPoint, SweepResult, TrialMetrics,
};
pub use matching::{brute_force_match, build_weights, hungarian_match, Assignment, WeightMatrix};
pub use qos::{sinr_threshold, QosSpec, TrafficSpec};
