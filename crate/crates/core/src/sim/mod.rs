//! Scenario assembly: per-aircraft engines over the discrete-event core.

mod world;

pub use world::{run_scenario, QuorumKind, QuorumRecord, SimConfig, SimOutcome};
