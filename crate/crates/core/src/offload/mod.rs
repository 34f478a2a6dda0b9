//! Offloading engine: OffSN construction, IBP-driven requests and D2D or
//! cellular service, plus parameter sweeps.

mod config;
mod engine;
mod sweep;
mod synthetic;

pub use config::{PlacementConfig, SimConfig, SweepParam, SweepSpec, TraceSource};
pub use engine::{
    enb_utility, run_on_scenario, run_simulation, serve_request, serve_session, utility_from_prior, write_decisions,
    HolderMap, Provider, Route, RouteCounts, RunMetrics, RunOutput, Scenario, ServiceContext, ServiceDecision,
    DECISIONS_HEADER,
};
pub use sweep::{repetition_seed, sweep, write_results, RunRecord, SweepPoint, SweepTable, RESULTS_HEADER};
pub use synthetic::SyntheticTrace;
