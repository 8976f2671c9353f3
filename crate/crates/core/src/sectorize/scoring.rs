//! Composite objective over candidate grid configurations.
//!
//! For a traffic snapshot plus the active flight plans, each `(R, C)` grid
//! in `{1..5}^2` (layers fixed at 3) is scored as
//!
//! ```text
//! J = w_var * occupancy_variance + w_hand * handoff_count + w_risk * risk_pair_count
//! ```
//!
//! where `occupancy_variance` is the population variance of instantaneous
//! aircraft count across all cells, `handoff_count` sums boundary crossings
//! over the plans, and `risk_pair_count` counts plan pairs that violate the
//! separation minima while sitting in different sectors at the violation's
//! closest approach. Lower is better.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::airspace::{sectors_crossed, FlightPlan, SectorGrid, TrafficSnapshot};
use crate::conflict::{violation_in_windows, SeparationMinima};
use crate::time::SimTime;
use crate::Scalar;

/// Grid search space is `{1..GRID_CHOICES_PER_AXIS}` rows and columns.
pub const GRID_CHOICES_PER_AXIS: u32 = 5;

/// Objective weights. A single risk pair outweighs several handoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub w_var: Scalar,
    pub w_hand: Scalar,
    pub w_risk: Scalar,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights { w_var: 1.0, w_hand: 2.0, w_risk: 10.0 }
    }
}

/// Score components for one grid configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridObjectiveBreakdown {
    pub rows: u32,
    pub cols: u32,
    pub occupancy_variance: Scalar,
    pub handoff_count: u64,
    pub risk_pair_count: u64,
    pub weights: ObjectiveWeights,
    pub j: Scalar,
}

/// Pairs in violation of the minima, with the instant of closest approach.
/// Grid independent, so computed once and shared across all 25 scores.
fn violating_pairs(
    plans: &[FlightPlan],
    minima: &SeparationMinima,
) -> Vec<(usize, usize, SimTime)> {
    let mut out = Vec::new();
    for i in 0..plans.len() {
        for j in (i + 1)..plans.len() {
            let mut n = 0;
            if let Some(v) = violation_in_windows(
                &plans[i],
                &plans[j],
                minima.horizontal_nm,
                minima.vertical_ft,
                None,
                &mut n,
            ) {
                out.push((i, j, v.t_closest));
            }
        }
    }
    out
}

fn breakdown_for(
    snapshot: &TrafficSnapshot,
    plans: &[FlightPlan],
    violations: &[(usize, usize, SimTime)],
    rows: u32,
    cols: u32,
    weights: ObjectiveWeights,
) -> GridObjectiveBreakdown {
    let grid = SectorGrid::new(rows, cols, snapshot.region_side_nm).expect("valid grid");

    // Instantaneous occupancy variance over all cells, empty cells included.
    let cells = grid.sector_count() as usize;
    let mut counts = vec![0u64; cells];
    for a in &snapshot.aircraft {
        let s = grid
            .sector_of(a.x_nm, a.y_nm, a.alt_ft)
            .expect("snapshot aircraft are inside the region");
        let idx = ((s.row * grid.cols() + s.col) * crate::airspace::LAYERS + s.layer) as usize;
        counts[idx] += 1;
    }
    let n = cells as Scalar;
    let mean = counts.iter().sum::<u64>() as Scalar / n;
    let occupancy_variance =
        counts.iter().map(|&c| (c as Scalar - mean) * (c as Scalar - mean)).sum::<Scalar>() / n;

    let handoff_count: u64 = plans.iter().map(|p| sectors_crossed(&grid, p).handoffs()).sum();

    let side = snapshot.region_side_nm;
    let sector_at = |plan: &FlightPlan, t: SimTime| {
        let (x, y, alt) = plan.position_at(t).expect("violation instant within plan span");
        grid.sector_of(x.clamp(0.0, side), y.clamp(0.0, side), alt.max(0.0))
            .expect("clamped point is inside")
    };
    let risk_pair_count = violations
        .iter()
        .filter(|&&(i, j, t)| sector_at(&plans[i], t) != sector_at(&plans[j], t))
        .count() as u64;

    let j = weights.w_var * occupancy_variance
        + weights.w_hand * handoff_count as Scalar
        + weights.w_risk * risk_pair_count as Scalar;
    GridObjectiveBreakdown {
        rows,
        cols,
        occupancy_variance,
        handoff_count,
        risk_pair_count,
        weights,
        j,
    }
}

/// Scores a single `(rows, cols)` configuration.
pub fn score_grid(
    snapshot: &TrafficSnapshot,
    plans: &[FlightPlan],
    rows: u32,
    cols: u32,
    weights: ObjectiveWeights,
    minima: &SeparationMinima,
) -> GridObjectiveBreakdown {
    let violations = violating_pairs(plans, minima);
    breakdown_for(snapshot, plans, &violations, rows, cols, weights)
}

/// Scores all 25 configurations, ordered by `(rows, cols)`. Configurations
/// are scored in parallel; the output order is fixed.
pub fn score_all_grids(
    snapshot: &TrafficSnapshot,
    plans: &[FlightPlan],
    weights: ObjectiveWeights,
    minima: &SeparationMinima,
) -> Vec<GridObjectiveBreakdown> {
    let violations = violating_pairs(plans, minima);
    let configs: Vec<(u32, u32)> = (1..=GRID_CHOICES_PER_AXIS)
        .flat_map(|r| (1..=GRID_CHOICES_PER_AXIS).map(move |c| (r, c)))
        .collect();
    configs
        .par_iter()
        .map(|&(r, c)| breakdown_for(snapshot, plans, &violations, r, c, weights))
        .collect()
}

/// Arg-min of J over the 25 configurations. Ties break toward the smallest
/// cell count `R*C`, then the smallest `R`.
pub fn label_optimal_grid(
    snapshot: &TrafficSnapshot,
    plans: &[FlightPlan],
    weights: ObjectiveWeights,
    minima: &SeparationMinima,
) -> (u32, u32) {
    let all = score_all_grids(snapshot, plans, weights, minima);
    let best = all
        .iter()
        .min_by(|a, b| {
            (a.j, a.rows * a.cols, a.rows)
                .partial_cmp(&(b.j, b.rows * b.cols, b.rows))
                .expect("scores are finite")
        })
        .expect("25 configurations scored");
    (best.rows, best.cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airspace::Waypoint;

    fn line(owner: u32, from: (f64, f64), to: (f64, f64), alt: f64, speed: f64, t0: f64) -> FlightPlan {
        let dist = ((to.0 - from.0).powi(2) + (to.1 - from.1).powi(2)).sqrt();
        FlightPlan::new(
            owner,
            speed,
            vec![
                Waypoint { x_nm: from.0, y_nm: from.1, alt_ft: alt, time: SimTime::from_secs_f64(t0) },
                Waypoint {
                    x_nm: to.0,
                    y_nm: to.1,
                    alt_ft: alt,
                    time: SimTime::from_secs_f64(t0 + dist / speed * 3600.0),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_snapshot_scores_zero_everywhere() {
        let snap = TrafficSnapshot::new(100.0, 0.0, 0, 12);
        let all = score_all_grids(&snap, &[], ObjectiveWeights::default(), &SeparationMinima::default());
        assert_eq!(all.len(), 25);
        for b in &all {
            assert_eq!(b.occupancy_variance, 0.0);
            assert_eq!(b.handoff_count, 0);
            assert_eq!(b.risk_pair_count, 0);
            assert_eq!(b.j, 0.0);
        }
        let label = label_optimal_grid(&snap, &[], ObjectiveWeights::default(), &SeparationMinima::default());
        assert_eq!(label, (1, 1), "all-tied case resolves by the tie-break rule");
    }

    #[test]
    fn single_crossing_counts_one_handoff() {
        let snap = TrafficSnapshot::new(100.0, 0.0, 0, 12);
        let plan = line(0, (0.0, 50.0), (100.0, 50.0), 30000.0, 400.0, 0.0);
        let b = score_grid(&snap, &[plan], 1, 2, ObjectiveWeights::default(), &SeparationMinima::default());
        assert_eq!(b.handoff_count, 1);
        assert_eq!(b.j, 2.0);
    }

    #[test]
    fn risk_pair_requires_boundary_spanning_closest_approach() {
        // Parallel tracks 4 NM apart: in violation, closest approach at every
        // instant. On a 1x2 grid both sit in the same cell; on 2x1 rows the
        // tracks straddle the y=50 line.
        let a = line(1, (0.0, 48.0), (100.0, 48.0), 30000.0, 400.0, 0.0);
        let b = line(2, (0.0, 52.0), (100.0, 52.0), 30000.0, 400.0, 0.0);
        let snap = TrafficSnapshot::new(100.0, 0.0, 0, 12);
        let w = ObjectiveWeights::default();
        let m = SeparationMinima::default();
        let same = score_grid(&snap, &[a.clone(), b.clone()], 1, 2, w, &m);
        assert_eq!(same.risk_pair_count, 0, "co-sector violations are not boundary risk pairs");
        let split = score_grid(&snap, &[a, b], 2, 1, w, &m);
        assert_eq!(split.risk_pair_count, 1);
    }

    #[test]
    fn corridor_prefers_cuts_along_the_flow() {
        // Heavy east-west corridor with zero north-south flow: column cuts
        // cost handoffs, row cuts are free.
        let mut plans = Vec::new();
        for i in 0..10 {
            let y = 10.0 + 8.0 * i as f64;
            plans.push(line(i, (0.0, y), (100.0, y), 30000.0, 420.0, 40.0 * i as f64));
        }
        let snap = crate::airspace::snapshot_from_plans(&plans, 100.0, 200.0, 1, 10);
        let w = ObjectiveWeights::default();
        let m = SeparationMinima::default();
        let (r_star, c_star) = label_optimal_grid(&snap, &plans, w, &m);
        assert!(r_star >= c_star, "row cuts should win for an east-west corridor, got {r_star}x{c_star}");

        // The label must equal a from-scratch re-enumeration of all 25 scores.
        let mut best: Option<(Scalar, u32, u32)> = None;
        for r in 1..=5u32 {
            for c in 1..=5u32 {
                let b = score_grid(&snap, &plans, r, c, w, &m);
                let key = (b.j, r * c, r);
                if best.map_or(true, |(bj, brc, br)| key < (bj, brc, br)) {
                    best = Some(key);
                }
            }
        }
        let best = best.unwrap();
        assert_eq!((r_star, c_star), {
            let mut label = (0, 0);
            for r in 1..=5u32 {
                for c in 1..=5u32 {
                    let b = score_grid(&snap, &plans, r, c, w, &m);
                    if (b.j, r * c, r) == best {
                        label = (r, c);
                        break;
                    }
                }
                if label != (0, 0) {
                    break;
                }
            }
            label
        });
    }
}
