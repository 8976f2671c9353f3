//! Seeded synthetic traffic generation.
//!
//! Two profiles cover the two traffic geometries the simulator is evaluated
//! on:
//!
//! * `Random`: boundary-to-boundary en-route crossing traffic. Altitudes are
//!   drawn from three discrete flight levels inside the top layer with a
//!   dominant middle level, the way real en-route flows concentrate on a few
//!   levels; this keeps horizontal interaction between flights frequent.
//! * `Converging`: approach-style traffic. Every path is aimed through a
//!   2 NM disk around a terminal fix offset from the region center (while
//!   still passing within 10 NM of the center), at low approach speeds and
//!   four low-altitude levels, which concentrates crossings near the fix.
//!
//! Generation is a pure function of `(seed, count, profile, region)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AircraftState, FlightPlan, SectorGrid, TrafficSnapshot, Waypoint};
use crate::time::SimTime;
use crate::Scalar;

/// Synthetic traffic shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TrafficProfile {
    Random,
    Converging,
}

impl std::str::FromStr for TrafficProfile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(TrafficProfile::Random),
            "converging" => Ok(TrafficProfile::Converging),
            other => Err(format!("unknown traffic profile '{other}'")),
        }
    }
}

/// Fractional position of the convergence fix along each axis. Offset from
/// the exact center so the terminal area sits inside a single cell for
/// coarse grids, while staying within 10 NM of the region center.
const FIX_FRACTION: Scalar = 0.55;

/// Radius of the aiming disk around the fix, NM.
const AIM_RADIUS_NM: Scalar = 2.0;

/// Generates `count` flight plans with staggered, non-decreasing entry
/// times. Deterministic for a fixed `(seed, count, profile)`.
pub fn generate_synthetic_traffic(
    seed: u64,
    count: u32,
    grid: &SectorGrid,
    profile: TrafficProfile,
) -> Vec<FlightPlan> {
    let side = grid.region_side_nm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(match profile {
        TrafficProfile::Random => 0x52414e44,
        TrafficProfile::Converging => 0x434f4e56,
    });

    let mut plans = Vec::with_capacity(count as usize);
    let mut entry_s: f64 = 0.0;
    for id in 0..count {
        let (gap_lo, gap_hi) = match profile {
            TrafficProfile::Random => (3.0, 9.0),
            TrafficProfile::Converging => (8.0, 20.0),
        };
        entry_s += rng.random_range(gap_lo..gap_hi);

        let (entry, exit, alt, speed) = match profile {
            TrafficProfile::Random => {
                // Entry and exit on different edges: paths cross the region
                // instead of hugging a boundary.
                let (entry_edge, entry) = perimeter_point(&mut rng, side);
                let exit = loop {
                    let (edge, p) = perimeter_point(&mut rng, side);
                    let d = ((p.0 - entry.0).powi(2) + (p.1 - entry.1).powi(2)).sqrt();
                    if edge != entry_edge && d >= 30.0 {
                        break p;
                    }
                };
                let alt = match rng.random_range(0.0..1.0) {
                    u if u < 0.2 => 31_000.0,
                    u if u < 0.8 => 33_000.0,
                    _ => 35_000.0,
                };
                (entry, exit, alt, rng.random_range(380.0..480.0))
            }
            TrafficProfile::Converging => {
                let (_, entry) = perimeter_point(&mut rng, side);
                let fix = (FIX_FRACTION * side, FIX_FRACTION * side);
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let r = AIM_RADIUS_NM * rng.random_range(0.0f64..1.0).sqrt();
                let aim = (fix.0 + r * theta.cos(), fix.1 + r * theta.sin());
                let exit = box_exit(entry, aim, side);
                let alt = [4000.0, 5000.0, 6000.0, 7000.0][rng.random_range(0..4usize)];
                (entry, exit, alt, rng.random_range(160.0..220.0))
            }
        };

        let dist = ((exit.0 - entry.0).powi(2) + (exit.1 - entry.1).powi(2)).sqrt();
        let duration_s = dist / speed * 3600.0;
        let t0 = SimTime::from_secs_f64(entry_s);
        let t1 = t0 + SimTime::from_secs_f64(duration_s);
        let plan = FlightPlan {
            owner: id,
            speed_kt: speed,
            waypoints: vec![
                Waypoint { x_nm: entry.0, y_nm: entry.1, alt_ft: alt, time: t0 },
                Waypoint { x_nm: exit.0, y_nm: exit.1, alt_ft: alt, time: t1 },
            ],
        };
        debug_assert!(plan.validate_uniform_speed().is_ok());
        plans.push(plan);
    }
    plans
}

/// A uniform point on the region perimeter, tagged with its edge index.
fn perimeter_point(rng: &mut ChaCha8Rng, side: Scalar) -> (u8, (Scalar, Scalar)) {
    let offset = rng.random_range(0.0..side);
    let edge = rng.random_range(0..4u8);
    let point = match edge {
        0 => (offset, 0.0),
        1 => (side, offset),
        2 => (side - offset, side),
        _ => (0.0, side - offset),
    };
    (edge, point)
}

/// Point where the ray from `origin` through `via` leaves the region box.
fn box_exit(origin: (Scalar, Scalar), via: (Scalar, Scalar), side: Scalar) -> (Scalar, Scalar) {
    let (dx, dy) = (via.0 - origin.0, via.1 - origin.1);
    let mut t_exit = Scalar::INFINITY;
    if dx > 0.0 {
        t_exit = t_exit.min((side - origin.0) / dx);
    } else if dx < 0.0 {
        t_exit = t_exit.min(-origin.0 / dx);
    }
    if dy > 0.0 {
        t_exit = t_exit.min((side - origin.1) / dy);
    } else if dy < 0.0 {
        t_exit = t_exit.min(-origin.1 / dy);
    }
    debug_assert!(t_exit.is_finite() && t_exit >= 1.0 - 1e-9);
    (
        (origin.0 + dx * t_exit).clamp(0.0, side),
        (origin.1 + dy * t_exit).clamp(0.0, side),
    )
}

/// A seeded random traffic snapshot with full altitude and heading spread.
/// Used by feature-extraction flows and tests; unrelated to the flight-plan
/// profiles above.
pub fn random_snapshot(seed: u64, count: u32, region_side_nm: Scalar) -> TrafficSnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x534e4150);
    let mut snap = TrafficSnapshot::new(
        region_side_nm,
        0.0,
        rng.random_range(0..7u8),
        rng.random_range(0..24u8),
    );
    for id in 0..count {
        snap.aircraft.push(AircraftState {
            id,
            x_nm: rng.random_range(0.0..region_side_nm),
            y_nm: rng.random_range(0.0..region_side_nm),
            alt_ft: rng.random_range(0.0..45_000.0),
            heading_deg: rng.random_range(0.0..360.0),
            speed_kt: rng.random_range(150.0..550.0),
            fuel_min: rng.random_range(60.0..300.0),
        });
    }
    snap
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SectorGrid {
        SectorGrid::new(2, 2, 100.0).unwrap()
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = generate_synthetic_traffic(7, 10, &grid(), TrafficProfile::Random);
        let b = generate_synthetic_traffic(7, 10, &grid(), TrafficProfile::Random);
        assert_eq!(a, b);
    }

    #[test]
    fn converging_passes_near_region_center() {
        let plans = generate_synthetic_traffic(7, 10, &grid(), TrafficProfile::Converging);
        for p in &plans {
            let (a, b) = (&p.waypoints[0], &p.waypoints[1]);
            // Distance from the region center to the path segment.
            let (cx, cy) = (50.0, 50.0);
            let (dx, dy) = (b.x_nm - a.x_nm, b.y_nm - a.y_nm);
            let len2 = dx * dx + dy * dy;
            let u = (((cx - a.x_nm) * dx + (cy - a.y_nm) * dy) / len2).clamp(0.0, 1.0);
            let (px, py) = (a.x_nm + u * dx, a.y_nm + u * dy);
            let dist = ((cx - px).powi(2) + (cy - py).powi(2)).sqrt();
            assert!(dist <= 10.0, "plan {} passes {dist:.2} NM from center", p.owner);
        }
    }

    #[test]
    fn ids_unique_and_entries_non_decreasing() {
        let plans = generate_synthetic_traffic(7, 160, &grid(), TrafficProfile::Random);
        assert_eq!(plans.len(), 160);
        let mut seen = std::collections::BTreeSet::new();
        let mut last = SimTime::ZERO;
        for p in &plans {
            assert!(seen.insert(p.owner));
            assert!(p.start_time() >= last);
            last = p.start_time();
            assert!(p.within_region(100.0));
            p.validate_uniform_speed().unwrap();
        }
    }

    #[test]
    fn random_snapshot_is_valid() {
        let snap = random_snapshot(11, 40, 100.0);
        snap.validate().unwrap();
        assert_eq!(snap.aircraft.len(), 40);
    }
}
