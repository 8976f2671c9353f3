//! Closest-point-of-approach algebra over piecewise-linear 4D trajectories.
//!
//! Everything is closed form: per segment pair, horizontal separation
//! squared is a quadratic in time and vertical separation is linear, so both
//! the global horizontal minimum and the set of instants where a pair
//! violates a (horizontal, vertical) threshold box reduce to interval
//! arithmetic on quadratic roots.

use crate::airspace::{sectors_crossed, FlightPlan, SectorGrid, SectorId};
use crate::real::Real;
use crate::time::SimTime;
use crate::Scalar;

use super::{ConflictReport, SeparationConfig, Severity};

/// Global horizontal minimum of a plan pair over their common time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSeparation {
    /// Instant of minimum horizontal distance.
    pub t_closest: SimTime,
    /// Horizontal distance at `t_closest`, NM.
    pub horizontal_nm: Scalar,
    /// Vertical gap at `t_closest`, ft.
    pub vertical_ft: Scalar,
}

/// Stats over the instants where a pair violates a threshold box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Instant of minimum horizontal distance among violating instants.
    pub t_closest: SimTime,
    /// That horizontal minimum, NM.
    pub min_horizontal_nm: Scalar,
    /// Minimum vertical gap among violating instants, ft.
    pub min_vertical_ft: Scalar,
}

// ---------------------------------------------------------------------------
// Generic quadratic helpers
// ---------------------------------------------------------------------------

/// Minimum of `a u^2 + b u + c` on `[u0, u1]`, returned as `(u, value)`.
fn quad_min_on<R: Real>(a: R, b: R, c: R, u0: R, u1: R) -> (R, R) {
    let eval = |u: R| (a * u + b) * u + c;
    let mut best = (u0, eval(u0));
    let end = (u1, eval(u1));
    if end.1 < best.1 {
        best = end;
    }
    if a > R::zero() {
        let vertex = -b / (a + a);
        if vertex > u0 && vertex < u1 {
            let v = eval(vertex);
            if v < best.1 {
                best = (vertex, v);
            }
        }
    }
    best
}

/// Open interval where `a u^2 + b u + c < 0`, intersected with `[u0, u1]`.
/// The coefficient `a` is nonnegative for squared-distance quadratics, so
/// the sub-level set is a single interval.
fn quad_below_zero_on<R: Real>(a: R, b: R, c: R, u0: R, u1: R) -> Option<(R, R)> {
    let (lo, hi) = if a <= R::zero() {
        // Degenerate: linear (or constant) in u.
        if b == R::zero() {
            if c < R::zero() {
                (u0, u1)
            } else {
                return None;
            }
        } else {
            let root = -c / b;
            if b > R::zero() {
                (R::neg_infinity(), root)
            } else {
                (root, R::infinity())
            }
        }
    } else {
        let disc = b * b - R::from_f64(4.0).unwrap() * a * c;
        if disc <= R::zero() {
            return None;
        }
        let sq = disc.sqrt();
        let two_a = a + a;
        ((-b - sq) / two_a, (-b + sq) / two_a)
    };
    let lo = lo.max(u0);
    let hi = hi.min(u1);
    if lo < hi {
        Some((lo, hi))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Segment-pair machinery
// ---------------------------------------------------------------------------

/// Relative horizontal motion of two linear segments over a shared window,
/// anchored at `t_ref`: position `(px + vx u, py + vy u)` NM with `u` in
/// seconds, plus vertical gap `dz + vz u` ft.
struct RelMotion {
    px: Scalar,
    py: Scalar,
    vx: Scalar,
    vy: Scalar,
    dz: Scalar,
    vz: Scalar,
}

impl RelMotion {
    /// Coefficients of squared horizontal distance in u.
    fn h2_coeffs(&self) -> (Scalar, Scalar, Scalar) {
        (
            self.vx * self.vx + self.vy * self.vy,
            2.0 * (self.px * self.vx + self.py * self.vy),
            self.px * self.px + self.py * self.py,
        )
    }
}

/// Yields `(t_lo, t_hi, rel)` for every overlapping pair of segments.
fn segment_pairs<'p>(
    a: &'p FlightPlan,
    b: &'p FlightPlan,
) -> impl Iterator<Item = (SimTime, SimTime, RelMotion)> + 'p {
    a.waypoints.windows(2).flat_map(move |sa| {
        b.waypoints.windows(2).filter_map(move |sb| {
            let t_lo = sa[0].time.max(sb[0].time);
            let t_hi = sa[1].time.min(sb[1].time);
            if t_hi <= t_lo {
                return None;
            }
            let pos_vel = |seg: &[crate::airspace::Waypoint], t: SimTime| {
                let span = (seg[1].time - seg[0].time).as_secs_f64();
                let u = (t - seg[0].time).as_secs_f64() / span;
                let vx = (seg[1].x_nm - seg[0].x_nm) / span;
                let vy = (seg[1].y_nm - seg[0].y_nm) / span;
                let vz = (seg[1].alt_ft - seg[0].alt_ft) / span;
                (
                    seg[0].x_nm + (seg[1].x_nm - seg[0].x_nm) * u,
                    seg[0].y_nm + (seg[1].y_nm - seg[0].y_nm) * u,
                    seg[0].alt_ft + (seg[1].alt_ft - seg[0].alt_ft) * u,
                    vx,
                    vy,
                    vz,
                )
            };
            let (ax, ay, az, avx, avy, avz) = pos_vel(sa, t_lo);
            let (bx, by, bz, bvx, bvy, bvz) = pos_vel(sb, t_lo);
            Some((
                t_lo,
                t_hi,
                RelMotion {
                    px: ax - bx,
                    py: ay - by,
                    vx: avx - bvx,
                    vy: avy - bvy,
                    dz: az - bz,
                    vz: avz - bvz,
                },
            ))
        })
    })
}

/// Exact global horizontal minimum over the common time window, or `None`
/// when the plans' time windows do not overlap.
pub fn min_separation(a: &FlightPlan, b: &FlightPlan) -> Option<MinSeparation> {
    let mut best: Option<MinSeparation> = None;
    for (t_lo, t_hi, rel) in segment_pairs(a, b) {
        let (qa, qb, qc) = rel.h2_coeffs();
        let span = (t_hi - t_lo).as_secs_f64();
        let (u, d2) = quad_min_on(qa, qb, qc, 0.0, span);
        let d = d2.max(0.0).sqrt();
        if best.map_or(true, |m| d < m.horizontal_nm) {
            let t = t_lo + SimTime::from_secs_f64(u);
            best = Some(MinSeparation {
                t_closest: t,
                horizontal_nm: d,
                vertical_ft: (rel.dz + rel.vz * u).abs(),
            });
        }
    }
    best
}

/// Violation statistics for a threshold box, optionally restricted to a set
/// of time windows (for example, the instants both aircraft are inside one
/// sector). `pair_count` reports how many segment-pair windows were
/// examined, which callers use as a deterministic work measure.
pub fn violation_in_windows(
    a: &FlightPlan,
    b: &FlightPlan,
    horizontal_nm: Scalar,
    vertical_ft: Scalar,
    windows: Option<&[(SimTime, SimTime)]>,
    pair_count: &mut u64,
) -> Option<Violation> {
    let mut best: Option<Violation> = None;
    for (t_lo, t_hi, rel) in segment_pairs(a, b) {
        *pair_count += 1;
        let clips: &[(SimTime, SimTime)] = match windows {
            Some(w) => w,
            None => &[(t_lo, t_hi)],
        };
        for &(w_lo, w_hi) in clips {
            let c_lo = t_lo.max(w_lo);
            let c_hi = t_hi.min(w_hi);
            if c_hi <= c_lo {
                continue;
            }
            // Offsets in seconds from t_lo (the RelMotion anchor).
            let u0 = (c_lo - t_lo).as_secs_f64();
            let u1 = (c_hi - t_lo).as_secs_f64();

            // Vertical band |dz + vz u| < vertical_ft, as a quadratic in u.
            let Some((v_lo, v_hi)) = quad_below_zero_on(
                rel.vz * rel.vz,
                2.0 * rel.dz * rel.vz,
                rel.dz * rel.dz - vertical_ft * vertical_ft,
                u0,
                u1,
            ) else {
                continue;
            };

            // Horizontal disc d_h(u) < horizontal_nm.
            let (qa, qb, qc) = rel.h2_coeffs();
            let Some((h_lo, h_hi)) =
                quad_below_zero_on(qa, qb, qc - horizontal_nm * horizontal_nm, v_lo, v_hi)
            else {
                continue;
            };

            // Joint violation on (h_lo, h_hi): take stats.
            let (u_min, d2) = quad_min_on(qa, qb, qc, h_lo, h_hi);
            let d_h = d2.max(0.0).sqrt();
            let dv_min = {
                let (_, dv2) = quad_min_on(
                    rel.vz * rel.vz,
                    2.0 * rel.dz * rel.vz,
                    rel.dz * rel.dz,
                    h_lo,
                    h_hi,
                );
                dv2.max(0.0).sqrt()
            };
            let candidate = Violation {
                t_closest: t_lo + SimTime::from_secs_f64(u_min),
                min_horizontal_nm: d_h,
                min_vertical_ft: dv_min,
            };
            best = Some(match best {
                None => candidate,
                Some(cur) => Violation {
                    t_closest: if d_h < cur.min_horizontal_nm { candidate.t_closest } else { cur.t_closest },
                    min_horizontal_nm: cur.min_horizontal_nm.min(d_h),
                    min_vertical_ft: cur.min_vertical_ft.min(dv_min),
                },
            });
        }
    }
    best
}

/// Conflict over the plans' whole common window: both thresholds violated
/// simultaneously at some instant. Severity is NMAC when the same holds for
/// the NMAC proximity box.
pub fn detect_conflict(a: &FlightPlan, b: &FlightPlan, cfg: &SeparationConfig) -> Option<ConflictReport> {
    let mut n = 0;
    let los = violation_in_windows(
        a,
        b,
        cfg.minima.horizontal_nm,
        cfg.minima.vertical_ft,
        None,
        &mut n,
    )?;
    let nmac = violation_in_windows(
        a,
        b,
        cfg.nmac.horizontal_nm,
        cfg.nmac.vertical_ft,
        None,
        &mut n,
    );
    Some(ConflictReport {
        a: a.owner,
        b: b.owner,
        t_closest: los.t_closest,
        min_horizontal_nm: los.min_horizontal_nm,
        min_vertical_ft: los.min_vertical_ft,
        severity: if nmac.is_some() { Severity::Nmac } else { Severity::LossOfSeparation },
    })
}

/// Merged windows where both plans are inside `sector`.
pub fn shared_sector_windows(
    a: &FlightPlan,
    b: &FlightPlan,
    grid: &SectorGrid,
    sector: SectorId,
) -> Vec<(SimTime, SimTime)> {
    let wa = sectors_crossed(grid, a).windows_in(sector);
    let wb = sectors_crossed(grid, b).windows_in(sector);
    let mut out = Vec::new();
    for &(a_lo, a_hi) in &wa {
        for &(b_lo, b_hi) in &wb {
            let lo = a_lo.max(b_lo);
            let hi = a_hi.min(b_hi);
            if lo < hi {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// True when the pair violates the separation minima at an instant where
/// both aircraft are inside `sector`. This is the admission-time conflict
/// test: each sector guarantees separation only within its own volume.
pub fn conflict_in_sector(
    a: &FlightPlan,
    b: &FlightPlan,
    cfg: &SeparationConfig,
    grid: &SectorGrid,
    sector: SectorId,
    pair_count: &mut u64,
) -> bool {
    let windows = shared_sector_windows(a, b, grid, sector);
    if windows.is_empty() {
        return false;
    }
    violation_in_windows(
        a,
        b,
        cfg.minima.horizontal_nm,
        cfg.minima.vertical_ft,
        Some(&windows),
        pair_count,
    )
    .is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airspace::Waypoint;

    fn wp(x: f64, y: f64, alt: f64, t_s: f64) -> Waypoint {
        Waypoint { x_nm: x, y_nm: y, alt_ft: alt, time: SimTime::from_secs_f64(t_s) }
    }

    fn line(owner: u32, from: (f64, f64), to: (f64, f64), alt: f64, speed: f64, t0: f64) -> FlightPlan {
        let dist = ((to.0 - from.0).powi(2) + (to.1 - from.1).powi(2)).sqrt();
        FlightPlan::new(
            owner,
            speed,
            vec![
                wp(from.0, from.1, alt, t0),
                wp(to.0, to.1, alt, t0 + dist / speed * 3600.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn head_on_closes_at_midpoint() {
        // 100 NM apart, 400 kt each: 800 kt closure, meet after 450 s.
        let a = line(1, (0.0, 50.0), (100.0, 50.0), 33000.0, 400.0, 0.0);
        let b = line(2, (100.0, 50.0), (0.0, 50.0), 33000.0, 400.0, 0.0);
        let m = min_separation(&a, &b).unwrap();
        assert!(m.horizontal_nm < 1e-9);
        assert!((m.t_closest.as_secs_f64() - 450.0).abs() < 1e-6);
        let report = detect_conflict(&a, &b, &SeparationConfig::default()).unwrap();
        assert_eq!(report.severity, Severity::Nmac);
    }

    #[test]
    fn parallel_offset_stays_constant() {
        let a = line(1, (0.0, 40.0), (100.0, 40.0), 33000.0, 400.0, 0.0);
        let b = line(2, (0.0, 50.0), (100.0, 50.0), 33000.0, 400.0, 0.0);
        let m = min_separation(&a, &b).unwrap();
        assert!((m.horizontal_nm - 10.0).abs() < 1e-9);
        assert!(detect_conflict(&a, &b, &SeparationConfig::default()).is_none());
    }

    #[test]
    fn disjoint_windows_return_none() {
        let a = line(1, (0.0, 50.0), (100.0, 50.0), 33000.0, 400.0, 0.0);
        let b = line(2, (0.0, 40.0), (100.0, 40.0), 33000.0, 400.0, 5000.0);
        assert!(min_separation(&a, &b).is_none());
    }

    #[test]
    fn vertical_gap_blocks_conflict() {
        let a = line(1, (0.0, 50.0), (100.0, 50.0), 33000.0, 400.0, 0.0);
        let b = line(2, (100.0, 50.0), (0.0, 50.0), 35000.0, 400.0, 0.0);
        assert!(detect_conflict(&a, &b, &SeparationConfig::default()).is_none());
    }

    #[test]
    fn crossing_with_offset_matches_dense_sampling() {
        let a = line(1, (0.0, 50.0), (100.0, 50.0), 33000.0, 420.0, 0.0);
        let b = line(2, (50.0, 0.0), (50.0, 100.0), 33000.0, 420.0, 60.0);
        let m = min_separation(&a, &b).unwrap();

        // Dense 0.1 s sampling oracle.
        let lo = a.start_time().max(b.start_time()).as_secs_f64();
        let hi = a.end_time().min(b.end_time()).as_secs_f64();
        let mut best = f64::INFINITY;
        let mut t = lo;
        while t <= hi {
            let st = SimTime::from_secs_f64(t);
            let (ax, ay, _) = a.position_at(st).unwrap();
            let (bx, by, _) = b.position_at(st).unwrap();
            best = best.min(((ax - bx).powi(2) + (ay - by).powi(2)).sqrt());
            t += 0.1;
        }
        assert!((m.horizontal_nm - best).abs() < 0.01);
    }

    #[test]
    fn sector_scoped_check_ignores_outside_conflicts() {
        let grid = SectorGrid::new(1, 2, 100.0).unwrap();
        // Head-on pair meeting at x=25: inside the west sector only.
        let a = line(1, (0.0, 25.0), (50.0, 25.0), 5000.0, 300.0, 0.0);
        let b = line(2, (50.0, 25.0), (0.0, 25.0), 5000.0, 300.0, 0.0);
        let west = SectorId { row: 0, col: 0, layer: 0 };
        let east = SectorId { row: 0, col: 1, layer: 0 };
        let cfg = SeparationConfig::default();
        let mut n = 0;
        assert!(conflict_in_sector(&a, &b, &cfg, &grid, west, &mut n));
        assert!(!conflict_in_sector(&a, &b, &cfg, &grid, east, &mut n));
    }
}
