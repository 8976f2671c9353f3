//! Instantaneous traffic state types.

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// One aircraft at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub id: u32,
    /// East coordinate within the region, NM.
    pub x_nm: Scalar,
    /// North coordinate within the region, NM.
    pub y_nm: Scalar,
    pub alt_ft: Scalar,
    /// Heading in degrees clockwise from north, in `[0, 360)`.
    pub heading_deg: Scalar,
    pub speed_kt: Scalar,
    /// Remaining endurance in minutes.
    pub fuel_min: Scalar,
}

/// All aircraft over a square region at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSnapshot {
    pub region_side_nm: Scalar,
    /// Seconds since scenario start.
    pub timestamp_s: Scalar,
    /// 0 = Monday .. 6 = Sunday.
    pub day_of_week: u8,
    pub hour_of_day: u8,
    pub aircraft: Vec<AircraftState>,
}

impl TrafficSnapshot {
    pub fn new(region_side_nm: Scalar, timestamp_s: Scalar, day_of_week: u8, hour_of_day: u8) -> Self {
        TrafficSnapshot {
            region_side_nm,
            timestamp_s,
            day_of_week,
            hour_of_day,
            aircraft: Vec::new(),
        }
    }

    /// Checks id uniqueness and containment of every aircraft in the region.
    pub fn validate(&self) -> Result<(), super::AirspaceError> {
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.aircraft {
            if !seen.insert(a.id) {
                return Err(super::AirspaceError::Malformed(format!(
                    "duplicate aircraft id {}",
                    a.id
                )));
            }
            let inside = a.x_nm >= 0.0
                && a.x_nm <= self.region_side_nm
                && a.y_nm >= 0.0
                && a.y_nm <= self.region_side_nm
                && a.alt_ft >= 0.0;
            if !inside {
                return Err(super::AirspaceError::OutOfBounds {
                    x: a.x_nm,
                    y: a.y_nm,
                    alt: a.alt_ft,
                    side: self.region_side_nm,
                });
            }
        }
        Ok(())
    }
}
