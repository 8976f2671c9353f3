//! Core airspace model: traffic snapshots, sector grids, flight plans.

mod grid;
mod io;
mod plan;
mod traffic;
mod types;

pub use grid::{sectors_crossed, CrossingList, SectorCrossing, SectorGrid, SectorId, LAYERS};
pub use io::{
    read_plan_file, read_snapshot_file, write_plan_file, write_snapshot_file, snapshot_from_plans,
};
pub use plan::{FlightPlan, Waypoint};
pub use traffic::{generate_synthetic_traffic, random_snapshot, TrafficProfile};
pub use types::{AircraftState, TrafficSnapshot};

use thiserror::Error;

/// Errors raised by the airspace model.
#[derive(Debug, Error)]
pub enum AirspaceError {
    #[error("point ({x}, {y}, {alt}) outside region (side {side} NM)")]
    OutOfBounds { x: f64, y: f64, alt: f64, side: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid flight plan: {0}")]
    InvalidPlan(String),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
