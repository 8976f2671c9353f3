//! Per-run outcome counters and rates.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Counters and timings for one simulation run.
///
/// `wall_time_s` is host time and is excluded from deterministic outputs;
/// every other field is a pure function of (scenario, parameters, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunMetrics {
    /// Sector-entry protocol executions started.
    pub attempted: u64,
    pub admitted: u64,
    pub denied: u64,
    pub diverted: u64,
    /// Admissions that used a holding delay.
    pub holdings: u64,
    /// Total hold quanta across those admissions.
    pub hold_quanta: u64,
    /// Admissions that used a speed change.
    pub speed_mods: u64,
    /// Admissions that used a lateral alternate route.
    pub alternates_used: u64,
    /// Discovery and agreement retries across all attempts.
    pub retries: u64,
    /// Admissions that completed after the planned boundary crossing.
    pub late_entries: u64,
    /// Admissions through the empty-sector fast path.
    pub fast_path_admissions: u64,
    /// Members removed after exhausting dissemination re-sends.
    pub evictions: u64,
    pub nmac_count: u64,
    /// Simulated seconds spent in initial-entry coordination.
    pub phase1_s: Scalar,
    /// Simulated seconds spent in handoff and exit coordination.
    pub phase2_s: Scalar,
    /// Simulated time of the last processed event.
    pub makespan_s: Scalar,
    /// Host seconds for the run (diagnostic only, nondeterministic).
    #[serde(skip)]
    pub wall_time_s: Scalar,
    pub timed_out: bool,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub messages_dropped: u64,
    pub dead_letters: u64,
    pub dedup_drops: u64,
    pub events_processed: u64,
}

impl RunMetrics {
    /// Admission throughput ratio; an empty run counts as perfect.
    pub fn r_success(&self) -> Ratio<i64> {
        ratio_or(self.admitted, self.attempted, Ratio::from_integer(1))
    }

    /// Fraction of admissions that needed holding.
    pub fn r_hold(&self) -> Ratio<i64> {
        ratio_or(self.holdings, self.admitted, Ratio::from_integer(0))
    }

    /// Fraction of admissions that needed a speed change.
    pub fn r_speed(&self) -> Ratio<i64> {
        ratio_or(self.speed_mods, self.admitted, Ratio::from_integer(0))
    }

    /// Mean retries per initiated request.
    pub fn mean_retries(&self) -> Ratio<i64> {
        ratio_or(self.retries, self.attempted, Ratio::from_integer(0))
    }

    /// Accounting identity: resolved entries never exceed attempts.
    pub fn accounting_holds(&self) -> bool {
        self.admitted + self.denied + self.diverted <= self.attempted
    }
}

fn ratio_or(num: u64, den: u64, default: Ratio<i64>) -> Ratio<i64> {
    if den == 0 {
        default
    } else {
        Ratio::new(num as i64, den as i64)
    }
}
