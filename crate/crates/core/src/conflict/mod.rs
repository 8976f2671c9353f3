//! Pairwise 4D conflict detection and admission-time conflict resolution.

mod cpa;
mod resolve;

pub use cpa::{
    conflict_in_sector, detect_conflict, min_separation, violation_in_windows, MinSeparation,
    Violation,
};
pub use resolve::{
    assign_holding, assign_holding_with, backtrack_speeds, backtrack_speeds_with, global_check,
    scan_nmacs, CheckBudget, ResolveError,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::SimTime;
use crate::{Scalar, FT_PER_NM};

/// Legal separation standard. A pair is in conflict when horizontal and
/// vertical separation are both below these limits at the same instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationMinima {
    pub horizontal_nm: Scalar,
    pub vertical_ft: Scalar,
}

impl Default for SeparationMinima {
    fn default() -> Self {
        SeparationMinima { horizontal_nm: 5.0, vertical_ft: 1000.0 }
    }
}

/// Near mid-air collision proximity: 500 ft horizontally, 100 ft vertically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmacThreshold {
    pub horizontal_nm: Scalar,
    pub vertical_ft: Scalar,
}

impl Default for NmacThreshold {
    fn default() -> Self {
        NmacThreshold { horizontal_nm: 500.0 / FT_PER_NM, vertical_ft: 100.0 }
    }
}

/// Separation standard plus NMAC proximity, validated together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationConfig {
    pub minima: SeparationMinima,
    pub nmac: NmacThreshold,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        SeparationConfig { minima: SeparationMinima::default(), nmac: NmacThreshold::default() }
    }
}

impl SeparationConfig {
    pub fn validate(&self) -> Result<(), ConflictError> {
        let ok = self.minima.horizontal_nm > 0.0
            && self.minima.vertical_ft > 0.0
            && self.nmac.horizontal_nm > 0.0
            && self.nmac.vertical_ft > 0.0
            && self.nmac.horizontal_nm < self.minima.horizontal_nm
            && self.nmac.vertical_ft < self.minima.vertical_ft;
        if ok {
            Ok(())
        } else {
            Err(ConflictError::InvalidThresholds)
        }
    }
}

#[derive(Debug, Error)]
pub enum ConflictError {
    #[error("NMAC thresholds must be positive and strictly below the separation minima")]
    InvalidThresholds,
}

/// Severity of a detected conflict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    LossOfSeparation,
    Nmac,
}

/// A pairwise conflict. `t_closest` and `min_horizontal_nm` describe the
/// horizontal minimum over the violating instants; `min_vertical_ft` is the
/// smallest vertical gap over the same set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub a: u32,
    pub b: u32,
    pub t_closest: SimTime,
    pub min_horizontal_nm: Scalar,
    pub min_vertical_ft: Scalar,
    pub severity: Severity,
}
