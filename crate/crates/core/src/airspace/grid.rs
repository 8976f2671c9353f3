//! Uniform rectangular sector grids and plan/sector crossing enumeration.

use serde::{Deserialize, Serialize};

use super::{AirspaceError, FlightPlan};
use crate::time::SimTime;
use crate::Scalar;

/// Number of fixed altitude layers.
pub const LAYERS: u32 = 3;

/// Lower edges of the altitude bands, feet. Bands are half-open and the top
/// band is unbounded: `[0, 10000)`, `[10000, 18000)`, `[18000, inf)`.
pub const BAND_EDGES_FT: [Scalar; 2] = [10_000.0, 18_000.0];

/// One cell of the sector grid.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SectorId {
    pub row: u32,
    pub col: u32,
    pub layer: u32,
}

impl std::fmt::Display for SectorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "r{}c{}l{}", self.row, self.col, self.layer)
    }
}

/// An R x C horizontal partition of a square region with three fixed
/// altitude layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorGrid {
    rows: u32,
    cols: u32,
    region_side_nm: Scalar,
}

impl SectorGrid {
    pub fn new(rows: u32, cols: u32, region_side_nm: Scalar) -> Result<Self, AirspaceError> {
        if rows < 1 || cols < 1 {
            return Err(AirspaceError::InvalidGrid("rows and cols must be >= 1".into()));
        }
        if region_side_nm <= 0.0 {
            return Err(AirspaceError::InvalidGrid("region side must be positive".into()));
        }
        Ok(SectorGrid { rows, cols, region_side_nm })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn region_side_nm(&self) -> Scalar {
        self.region_side_nm
    }

    pub fn sector_count(&self) -> u32 {
        self.rows * self.cols * LAYERS
    }

    /// Altitude layer for `alt_ft >= 0`.
    pub fn layer_of(alt_ft: Scalar) -> u32 {
        if alt_ft < BAND_EDGES_FT[0] {
            0
        } else if alt_ft < BAND_EDGES_FT[1] {
            1
        } else {
            2
        }
    }

    /// Maps a 3D position to its sector.
    ///
    /// Coordinates exactly on an internal grid line resolve to the
    /// higher-index cell; the region's maximum edge clamps to the last cell,
    /// so assignment is total over the closed region.
    pub fn sector_of(&self, x_nm: Scalar, y_nm: Scalar, alt_ft: Scalar) -> Result<SectorId, AirspaceError> {
        let side = self.region_side_nm;
        if !(0.0..=side).contains(&x_nm) || !(0.0..=side).contains(&y_nm) || alt_ft < 0.0 {
            return Err(AirspaceError::OutOfBounds { x: x_nm, y: y_nm, alt: alt_ft, side });
        }
        let row = (((y_nm / (side / self.rows as Scalar)).floor() as i64).max(0) as u32).min(self.rows - 1);
        let col = (((x_nm / (side / self.cols as Scalar)).floor() as i64).max(0) as u32).min(self.cols - 1);
        Ok(SectorId { row, col, layer: Self::layer_of(alt_ft) })
    }

    /// Cell boundary coordinates strictly inside the region, along one axis.
    fn interior_lines(&self, cells: u32) -> impl Iterator<Item = Scalar> + '_ {
        let pitch = self.region_side_nm / cells as Scalar;
        (1..cells).map(move |i| pitch * i as Scalar)
    }
}

/// One sector visit: the plan occupies `sector` during `[entry, exit]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorCrossing {
    pub sector: SectorId,
    pub entry: SimTime,
    pub exit: SimTime,
}

/// Ordered sector visits of one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingList {
    pub crossings: Vec<SectorCrossing>,
    /// Set when the plan left the region and was truncated at the boundary.
    pub truncated: bool,
}

impl CrossingList {
    /// Total number of boundary handoffs (visits minus one).
    pub fn handoffs(&self) -> u64 {
        self.crossings.len().saturating_sub(1) as u64
    }

    /// Time windows spent inside `sector`.
    pub fn windows_in(&self, sector: SectorId) -> Vec<(SimTime, SimTime)> {
        self.crossings
            .iter()
            .filter(|c| c.sector == sector)
            .map(|c| (c.entry, c.exit))
            .collect()
    }
}

/// Enumerates the sectors a plan crosses, in order, as contiguous
/// non-overlapping time intervals covering the plan's span.
///
/// The interval boundaries are the exact instants the piecewise-linear path
/// crosses a cell line or an altitude band edge; each interval's sector is
/// evaluated at its midpoint. A plan that leaves the region is truncated at
/// the first departure and flagged.
pub fn sectors_crossed(grid: &SectorGrid, plan: &FlightPlan) -> CrossingList {
    let mut end = plan.end_time();
    let mut truncated = false;

    // Truncate at the first instant the path leaves the region.
    if let Some(t_exit) = first_region_exit(grid, plan) {
        end = t_exit;
        truncated = true;
    }

    let start = plan.start_time();
    if end <= start {
        // Wholly outside; give a degenerate single visit at the clamped start.
        let (x, y, alt) = plan.position_at(start).expect("start inside span");
        let sector = clamped_sector(grid, x, y, alt);
        return CrossingList {
            crossings: vec![SectorCrossing { sector, entry: start, exit: start }],
            truncated,
        };
    }

    // Gather boundary-crossing instants per segment.
    let mut cuts: Vec<SimTime> = Vec::new();
    for pair in plan.waypoints.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (t0, t1) = (a.time.max(start), b.time.min(end));
        if t1 <= t0 {
            continue;
        }
        let span_s = (b.time - a.time).as_secs_f64();
        let mut push_axis_cuts = |p0: Scalar, p1: Scalar, lines: &mut dyn Iterator<Item = Scalar>| {
            let dp = p1 - p0;
            if dp == 0.0 {
                return;
            }
            for line in lines {
                let u = (line - p0) / dp;
                if u > 0.0 && u < 1.0 {
                    let t = a.time + SimTime::from_secs_f64(u * span_s);
                    if t > t0 && t < t1 {
                        cuts.push(t);
                    }
                }
            }
        };
        push_axis_cuts(a.x_nm, b.x_nm, &mut grid.interior_lines(grid.cols));
        push_axis_cuts(a.y_nm, b.y_nm, &mut grid.interior_lines(grid.rows));
        push_axis_cuts(a.alt_ft, b.alt_ft, &mut BAND_EDGES_FT.iter().copied());
    }
    // Segment joints are also potential sector changes (vertices may sit on
    // grid lines).
    for w in &plan.waypoints {
        if w.time > start && w.time < end {
            cuts.push(w.time);
        }
    }
    cuts.sort_unstable();
    cuts.dedup();

    let mut crossings: Vec<SectorCrossing> = Vec::new();
    let mut t_prev = start;
    for t in cuts.into_iter().chain(std::iter::once(end)) {
        if t <= t_prev {
            continue;
        }
        let mid = SimTime((t_prev.as_ps() + t.as_ps()) / 2);
        let (x, y, alt) = plan.position_at(mid).expect("midpoint inside span");
        let sector = clamped_sector(grid, x, y, alt);
        match crossings.last_mut() {
            Some(last) if last.sector == sector => last.exit = t,
            _ => crossings.push(SectorCrossing { sector, entry: t_prev, exit: t }),
        }
        t_prev = t;
    }

    CrossingList { crossings, truncated }
}

/// `sector_of` with coordinates clamped into the region. Used for midpoint
/// evaluation, where float noise may land a hair outside.
fn clamped_sector(grid: &SectorGrid, x: Scalar, y: Scalar, alt: Scalar) -> SectorId {
    let side = grid.region_side_nm();
    grid.sector_of(x.clamp(0.0, side), y.clamp(0.0, side), alt.max(0.0))
        .expect("clamped point is inside")
}

/// First instant the path leaves the closed region box, if any.
fn first_region_exit(grid: &SectorGrid, plan: &FlightPlan) -> Option<SimTime> {
    let side = grid.region_side_nm();
    let inside =
        |x: Scalar, y: Scalar, alt: Scalar| (0.0..=side).contains(&x) && (0.0..=side).contains(&y) && alt >= 0.0;
    for pair in plan.waypoints.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if !inside(a.x_nm, a.y_nm, a.alt_ft) {
            return Some(a.time);
        }
        if inside(b.x_nm, b.y_nm, b.alt_ft) {
            continue;
        }
        // Exits somewhere on this segment: earliest u where a bound breaks.
        let mut u_exit: Scalar = 1.0;
        let mut check = |p0: Scalar, p1: Scalar, lo: Scalar, hi: Scalar| {
            let dp = p1 - p0;
            if dp > 0.0 && p1 > hi {
                u_exit = u_exit.min((hi - p0) / dp);
            }
            if dp < 0.0 && p1 < lo {
                u_exit = u_exit.min((lo - p0) / dp);
            }
        };
        check(a.x_nm, b.x_nm, 0.0, side);
        check(a.y_nm, b.y_nm, 0.0, side);
        check(a.alt_ft, b.alt_ft, 0.0, Scalar::INFINITY);
        let span_s = (b.time - a.time).as_secs_f64();
        return Some(a.time + SimTime::from_secs_f64(u_exit.max(0.0) * span_s));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airspace::Waypoint;

    fn wp(x: f64, y: f64, alt: f64, t_s: f64) -> Waypoint {
        Waypoint { x_nm: x, y_nm: y, alt_ft: alt, time: SimTime::from_secs_f64(t_s) }
    }

    #[test]
    fn sector_of_interior_points() {
        let g = SectorGrid::new(2, 2, 100.0).unwrap();
        assert_eq!(g.sector_of(10.0, 10.0, 5000.0).unwrap(), SectorId { row: 0, col: 0, layer: 0 });
        assert_eq!(g.sector_of(60.0, 60.0, 12_000.0).unwrap(), SectorId { row: 1, col: 1, layer: 1 });
    }

    #[test]
    fn boundary_resolves_to_higher_index_and_edge_clamps() {
        let g = SectorGrid::new(2, 2, 100.0).unwrap();
        assert_eq!(g.sector_of(50.0, 99.9, 18_000.0).unwrap(), SectorId { row: 1, col: 1, layer: 2 });
        // Region edge maxima clamp to the last cell.
        assert_eq!(g.sector_of(100.0, 100.0, 0.0).unwrap(), SectorId { row: 1, col: 1, layer: 0 });
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let g = SectorGrid::new(2, 2, 100.0).unwrap();
        assert!(g.sector_of(100.1, 10.0, 0.0).is_err());
        assert!(g.sector_of(10.0, -0.1, 0.0).is_err());
        assert!(g.sector_of(10.0, 10.0, -1.0).is_err());
    }

    #[test]
    fn west_east_path_crosses_at_midline() {
        let g = SectorGrid::new(2, 2, 100.0).unwrap();
        let plan = FlightPlan::new(
            7,
            400.0,
            vec![wp(0.0, 25.0, 5000.0, 0.0), wp(100.0, 25.0, 5000.0, 900.0)],
        )
        .unwrap();
        let list = sectors_crossed(&g, &plan);
        assert!(!list.truncated);
        let sectors: Vec<_> = list.crossings.iter().map(|c| c.sector).collect();
        assert_eq!(
            sectors,
            vec![SectorId { row: 0, col: 0, layer: 0 }, SectorId { row: 0, col: 1, layer: 0 }]
        );
        assert_eq!(list.crossings[0].exit, SimTime::from_secs_f64(450.0));
        assert_eq!(list.crossings[1].entry, SimTime::from_secs_f64(450.0));
        assert_eq!(list.handoffs(), 1);
    }

    #[test]
    fn climb_changes_only_the_layer() {
        let g = SectorGrid::new(1, 1, 100.0).unwrap();
        let plan = FlightPlan::new(
            3,
            400.0,
            vec![wp(0.0, 50.0, 8000.0, 0.0), wp(100.0, 50.0, 12_000.0, 900.0)],
        )
        .unwrap();
        let list = sectors_crossed(&g, &plan);
        let sectors: Vec<_> = list.crossings.iter().map(|c| c.sector).collect();
        assert_eq!(
            sectors,
            vec![SectorId { row: 0, col: 0, layer: 0 }, SectorId { row: 0, col: 0, layer: 1 }]
        );
    }

    #[test]
    fn intervals_partition_the_span() {
        let g = SectorGrid::new(4, 4, 100.0).unwrap();
        let dist = ((97.0f64 - 1.0).powi(2) + (89.0f64 - 3.0).powi(2)).sqrt();
        let plan = FlightPlan::new(
            9,
            450.0,
            vec![wp(1.0, 3.0, 21_000.0, 0.0), wp(97.0, 89.0, 21_000.0, dist / 450.0 * 3600.0)],
        )
        .unwrap();
        let list = sectors_crossed(&g, &plan);
        assert_eq!(list.crossings.first().unwrap().entry, plan.start_time());
        assert_eq!(list.crossings.last().unwrap().exit, plan.end_time());
        for pair in list.crossings.windows(2) {
            assert_eq!(pair[0].exit, pair[1].entry);
            let a = pair[0].sector;
            let b = pair[1].sector;
            let step = (a.row as i64 - b.row as i64).abs()
                + (a.col as i64 - b.col as i64).abs()
                + (a.layer as i64 - b.layer as i64).abs();
            assert_eq!(step, 1, "consecutive sectors share a face");
        }
    }

    #[test]
    fn leaving_the_region_truncates_with_flag() {
        let g = SectorGrid::new(2, 2, 100.0).unwrap();
        let plan = FlightPlan::new(
            4,
            400.0,
            vec![wp(50.0, 50.0, 5000.0, 0.0), wp(150.0, 50.0, 5000.0, 900.0)],
        )
        .unwrap();
        let list = sectors_crossed(&g, &plan);
        assert!(list.truncated);
        assert_eq!(list.crossings.last().unwrap().exit, SimTime::from_secs_f64(450.0));
    }
}
