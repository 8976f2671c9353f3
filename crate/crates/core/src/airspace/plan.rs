//! Timestamped piecewise-linear 4D flight plans.

use serde::{Deserialize, Serialize};

use super::AirspaceError;
use crate::time::SimTime;
use crate::{Scalar, NM_PER_S_PER_KT};

/// A 4D plan vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x_nm: Scalar,
    pub y_nm: Scalar,
    pub alt_ft: Scalar,
    pub time: SimTime,
}

/// A timestamped piecewise-linear trajectory with a nominal ground speed.
///
/// Plans built through [`FlightPlan::new`] move at the nominal speed on every
/// segment. Admission-time adjustments relax that: a hold inserts a
/// stationary segment at the boundary fix, and a speed change re-times the
/// suffix of the plan, so executed trajectories are general piecewise-linear
/// motions. Waypoint times are strictly increasing in every case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub owner: u32,
    /// Nominal cruise ground speed, knots.
    pub speed_kt: Scalar,
    pub waypoints: Vec<Waypoint>,
}

/// Relative tolerance for the per-segment ground-speed consistency check.
pub const SPEED_REL_TOL: Scalar = 1e-6;

impl FlightPlan {
    /// Builds a plan and verifies the uniform-speed contract: every segment
    /// covers horizontal distance at `speed_kt` within [`SPEED_REL_TOL`].
    pub fn new(owner: u32, speed_kt: Scalar, waypoints: Vec<Waypoint>) -> Result<Self, AirspaceError> {
        if speed_kt <= 0.0 {
            return Err(AirspaceError::InvalidPlan("ground speed must be positive".into()));
        }
        let plan = FlightPlan { owner, speed_kt, waypoints };
        plan.validate_times()?;
        plan.validate_uniform_speed()?;
        Ok(plan)
    }

    /// Builds a plan checking only time monotonicity. Used for executed
    /// trajectories that contain hold segments or re-timed suffixes.
    pub fn new_relaxed(
        owner: u32,
        speed_kt: Scalar,
        waypoints: Vec<Waypoint>,
    ) -> Result<Self, AirspaceError> {
        let plan = FlightPlan { owner, speed_kt, waypoints };
        plan.validate_times()?;
        Ok(plan)
    }

    fn validate_times(&self) -> Result<(), AirspaceError> {
        if self.waypoints.len() < 2 {
            return Err(AirspaceError::InvalidPlan("need at least two waypoints".into()));
        }
        for pair in self.waypoints.windows(2) {
            if pair[1].time <= pair[0].time {
                return Err(AirspaceError::InvalidPlan(
                    "waypoint times must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// Verifies that every moving segment matches the nominal ground speed.
    /// Stationary segments (hold fixes) are exempt.
    pub fn validate_uniform_speed(&self) -> Result<(), AirspaceError> {
        for pair in self.waypoints.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let dist = ((b.x_nm - a.x_nm).powi(2) + (b.y_nm - a.y_nm).powi(2)).sqrt();
            if dist == 0.0 {
                continue;
            }
            let dt_s = (b.time - a.time).as_secs_f64();
            let seg_speed = dist / (dt_s * NM_PER_S_PER_KT);
            if ((seg_speed - self.speed_kt) / self.speed_kt).abs() > SPEED_REL_TOL {
                return Err(AirspaceError::InvalidPlan(format!(
                    "segment speed {seg_speed:.6} kt deviates from nominal {} kt",
                    self.speed_kt
                )));
            }
        }
        Ok(())
    }

    pub fn start_time(&self) -> SimTime {
        self.waypoints.first().expect("plan has waypoints").time
    }

    pub fn end_time(&self) -> SimTime {
        self.waypoints.last().expect("plan has waypoints").time
    }

    /// Position at `t`, or `None` outside the plan's time span.
    pub fn position_at(&self, t: SimTime) -> Option<(Scalar, Scalar, Scalar)> {
        if t < self.start_time() || t > self.end_time() {
            return None;
        }
        let idx = match self.waypoints.binary_search_by(|w| w.time.cmp(&t)) {
            Ok(i) => return Some((self.waypoints[i].x_nm, self.waypoints[i].y_nm, self.waypoints[i].alt_ft)),
            Err(i) => i,
        };
        let a = &self.waypoints[idx - 1];
        let b = &self.waypoints[idx];
        let span = (b.time - a.time).as_secs_f64();
        let u = (t - a.time).as_secs_f64() / span;
        Some((
            a.x_nm + (b.x_nm - a.x_nm) * u,
            a.y_nm + (b.y_nm - a.y_nm) * u,
            a.alt_ft + (b.alt_ft - a.alt_ft) * u,
        ))
    }

    /// Shifts the entire plan later by `delay`.
    pub fn shifted(&self, delay: SimTime) -> FlightPlan {
        let mut plan = self.clone();
        for w in &mut plan.waypoints {
            w.time += delay;
        }
        plan
    }

    /// Re-times the whole plan by a uniform speed factor, anchored at the
    /// first waypoint: durations divide by `factor`, the nominal speed
    /// multiplies by it.
    pub fn with_speed_factor(&self, factor: Scalar) -> FlightPlan {
        self.with_speed_factor_from(self.start_time(), factor)
    }

    /// Re-times the part of the plan after `anchor` by a uniform speed
    /// factor. The trajectory at and before `anchor` is unchanged: a vertex
    /// is inserted at the anchor so re-timing a mid-segment suffix cannot
    /// disturb the already-flown prefix.
    pub fn with_speed_factor_from(&self, anchor: SimTime, factor: Scalar) -> FlightPlan {
        let mut plan = self.clone();
        plan.split_at(anchor);
        plan.speed_kt = self.speed_kt * factor;
        for w in &mut plan.waypoints {
            if w.time > anchor {
                let dt = (w.time - anchor).as_secs_f64() / factor;
                w.time = anchor + SimTime::from_secs_f64(dt);
            }
        }
        plan
    }

    /// Inserts a vertex at time `t` (interpolated position). No-op when `t`
    /// already coincides with a vertex or lies outside the span.
    pub fn split_at(&mut self, t: SimTime) {
        if t <= self.start_time() || t >= self.end_time() {
            return;
        }
        if let Err(idx) = self.waypoints.binary_search_by(|w| w.time.cmp(&t)) {
            let (x, y, alt) = self.position_at(t).expect("t inside span");
            self.waypoints.insert(idx, Waypoint { x_nm: x, y_nm: y, alt_ft: alt, time: t });
        }
    }

    /// Inserts a stationary hold of length `dur` at time `t`; everything
    /// after `t` shifts later by `dur`.
    pub fn with_hold_at(&self, t: SimTime, dur: SimTime) -> FlightPlan {
        if dur == SimTime::ZERO {
            return self.clone();
        }
        let mut plan = self.clone();
        let t = t.max(plan.start_time()).min(plan.end_time());
        plan.split_at(t);
        let idx = plan
            .waypoints
            .binary_search_by(|w| w.time.cmp(&t))
            .expect("vertex exists after split");
        let mut hold_end = plan.waypoints[idx];
        hold_end.time = t + dur;
        for w in &mut plan.waypoints[idx + 1..] {
            w.time += dur;
        }
        plan.waypoints.insert(idx + 1, hold_end);
        plan
    }

    /// Translates every waypoint perpendicular to the overall start-to-end
    /// direction by `offset_nm` (positive offsets to the right of track).
    /// Exact for straight-line plans.
    pub fn lateral_offset(&self, offset_nm: Scalar) -> FlightPlan {
        let first = self.waypoints.first().expect("plan has waypoints");
        let last = self.waypoints.last().expect("plan has waypoints");
        let (dx, dy) = (last.x_nm - first.x_nm, last.y_nm - first.y_nm);
        let len = (dx * dx + dy * dy).sqrt();
        if len == 0.0 {
            return self.clone();
        }
        // Right-of-track normal for a track vector (dx, dy).
        let (nx, ny) = (dy / len, -dx / len);
        let mut plan = self.clone();
        for w in &mut plan.waypoints {
            w.x_nm += nx * offset_nm;
            w.y_nm += ny * offset_nm;
        }
        plan
    }

    /// Cuts the plan at `t`, ending it at the interpolated position. Plans
    /// already ending before `t` are unchanged.
    pub fn truncated_at(&self, t: SimTime) -> FlightPlan {
        if t >= self.end_time() {
            return self.clone();
        }
        let mut plan = self.clone();
        if t <= plan.start_time() {
            // Degenerate: keep an arbitrarily short stub at the start point.
            let mut stub = plan.waypoints[0];
            stub.time = plan.waypoints[0].time + SimTime(1);
            plan.waypoints.truncate(1);
            plan.waypoints.push(stub);
            return plan;
        }
        plan.split_at(t);
        let idx = plan
            .waypoints
            .binary_search_by(|w| w.time.cmp(&t))
            .expect("vertex exists after split");
        plan.waypoints.truncate(idx + 1);
        plan
    }

    /// True when every waypoint lies inside the square region.
    pub fn within_region(&self, side_nm: Scalar) -> bool {
        self.waypoints.iter().all(|w| {
            w.x_nm >= 0.0 && w.x_nm <= side_nm && w.y_nm >= 0.0 && w.y_nm <= side_nm && w.alt_ft >= 0.0
        })
    }

    /// Heading of the segment active at `t`, degrees clockwise from north.
    pub fn heading_at(&self, t: SimTime) -> Option<Scalar> {
        if t < self.start_time() || t > self.end_time() {
            return None;
        }
        let idx = self
            .waypoints
            .windows(2)
            .position(|pair| t >= pair[0].time && t <= pair[1].time)?;
        let (a, b) = (&self.waypoints[idx], &self.waypoints[idx + 1]);
        let (dx, dy) = (b.x_nm - a.x_nm, b.y_nm - a.y_nm);
        if dx == 0.0 && dy == 0.0 {
            return Some(0.0);
        }
        let mut deg = dx.atan2(dy).to_degrees();
        if deg < 0.0 {
            deg += 360.0;
        }
        if deg >= 360.0 {
            deg = 0.0;
        }
        Some(deg)
    }
}
