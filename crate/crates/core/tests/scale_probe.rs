//! Diagnostic sweep probe (run with --ignored --nocapture).

use airsynod::airspace::{generate_synthetic_traffic, SectorGrid, TrafficProfile};
use airsynod::sim::{run_scenario, SimConfig};
use airsynod::time::SimTime;

fn run_cell(profile: TrafficProfile, rows: u32, cols: u32, count: u32, seed: u64) {
    let grid = SectorGrid::new(rows, cols, 100.0).unwrap();
    let plans = generate_synthetic_traffic(seed, count, &grid, profile);
    let mut cfg = SimConfig::new(grid);
    cfg.sim_seed = seed;
    cfg.limits.sim_time_cap = Some(SimTime::from_secs_f64(14_400.0));
    let t0 = std::time::Instant::now();
    let out = run_scenario(plans, &cfg);
    for r in &out.nmacs {
        let pos = |owner: u32| {
            out.executed
                .iter()
                .find(|p| p.owner == owner)
                .and_then(|p| p.position_at(r.t_closest))
                .and_then(|(x, y, z)| grid.sector_of(x.clamp(0.0, 100.0), y.clamp(0.0, 100.0), z).ok())
        };
        let (sa, sb) = (pos(r.a), pos(r.b));
        println!(
            "    nmac {}-{} t={:.0}s dh={:.4}nm dv={:.0}ft sectors {:?} vs {:?} {}",
            r.a,
            r.b,
            r.t_closest.as_secs_f64(),
            r.min_horizontal_nm,
            r.min_vertical_ft,
            sa,
            sb,
            if sa == sb { "SAME" } else { "CROSS" },
        );
    }
    let m = &out.metrics;
    println!(
        "{:?} {}x{} n={} seed={} | att={} adm={} den={} div={} hold={} spd={} alt={} retry={} late={} evict={} nmac={} | succ={:.4} viol={} events={} p1={:.1}s p2={:.1}s wall={:.2}s",
        profile, rows, cols, count, seed,
        m.attempted, m.admitted, m.denied, m.diverted, m.holdings, m.speed_mods,
        m.alternates_used, m.retries, m.late_entries, m.evictions, m.nmac_count,
        m.admitted as f64 / m.attempted.max(1) as f64,
        out.violations.len(), m.events_processed, m.phase1_s, m.phase2_s,
        t0.elapsed().as_secs_f64(),
    );
    assert!(out.violations.is_empty(), "{:?}", out.violations);
}

#[test]
#[ignore]
fn probe_random_sweep() {
    for &(r, c) in &[(2, 2), (4, 4), (8, 8), (16, 16)] {
        for &n in &[40, 160] {
            run_cell(TrafficProfile::Random, r, c, n, 7);
        }
    }
}

#[test]
#[ignore]
fn probe_converging_sweep() {
    for &(r, c) in &[(2, 2), (4, 4), (8, 8), (16, 16)] {
        for &n in &[60, 120] {
            run_cell(TrafficProfile::Converging, r, c, n, 7);
        }
    }
}
