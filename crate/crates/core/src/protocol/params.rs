//! The eight tunable protocol parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

/// Parameter names in vector order (the tuner's dimension order).
pub const PARAM_NAMES: [&str; 8] = [
    "timeout_duration_s",
    "ir_attempts",
    "alternates",
    "phase_delay_factor",
    "nack_backoff_min_s",
    "nack_backoff_max_s",
    "start_ir_time_s",
    "solve_timeout_s",
];

/// Protocol timing and retry configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Response window for discovery and each agreement step, seconds.
    pub timeout_duration_s: Scalar,
    /// Retry budget, applied independently to discovery and agreement.
    pub ir_attempts: u32,
    /// Lateral alternate-route attempts before denial.
    pub alternates: u32,
    /// Multiplier on the timeout for dissemination re-send timers.
    pub phase_delay_factor: Scalar,
    pub nack_backoff_min_s: Scalar,
    pub nack_backoff_max_s: Scalar,
    /// Lead time before the projected boundary crossing at which discovery
    /// begins, seconds.
    pub start_ir_time_s: Scalar,
    /// Conflict-solver budget per admission, seconds.
    pub solve_timeout_s: Scalar,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            timeout_duration_s: 1.0,
            ir_attempts: 6,
            alternates: 4,
            phase_delay_factor: 1.5,
            nack_backoff_min_s: 0.1,
            nack_backoff_max_s: 2.0,
            start_ir_time_s: 30.0,
            solve_timeout_s: 5.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("nack_backoff_min must be strictly below nack_backoff_max")]
    BackoffOrder,
    #[error("{0} must be at least 1")]
    BelowOne(&'static str),
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (v, name) in [
            (self.timeout_duration_s, "timeout_duration_s"),
            (self.nack_backoff_min_s, "nack_backoff_min_s"),
            (self.nack_backoff_max_s, "nack_backoff_max_s"),
            (self.start_ir_time_s, "start_ir_time_s"),
            (self.solve_timeout_s, "solve_timeout_s"),
        ] {
            if v <= 0.0 {
                return Err(ParamError::NotPositive(name));
            }
        }
        if self.phase_delay_factor < 1.0 {
            return Err(ParamError::BelowOne("phase_delay_factor"));
        }
        if self.ir_attempts < 1 {
            return Err(ParamError::BelowOne("ir_attempts"));
        }
        if self.alternates < 1 {
            return Err(ParamError::BelowOne("alternates"));
        }
        if self.nack_backoff_min_s >= self.nack_backoff_max_s {
            return Err(ParamError::BackoffOrder);
        }
        Ok(())
    }

    /// Parameter vector in [`PARAM_NAMES`] order.
    pub fn to_array(&self) -> [Scalar; 8] {
        [
            self.timeout_duration_s,
            self.ir_attempts as Scalar,
            self.alternates as Scalar,
            self.phase_delay_factor,
            self.nack_backoff_min_s,
            self.nack_backoff_max_s,
            self.start_ir_time_s,
            self.solve_timeout_s,
        ]
    }

    /// Builds parameters from a vector in [`PARAM_NAMES`] order, rounding
    /// the integer dimensions.
    pub fn from_array(v: &[Scalar; 8]) -> ProtocolParams {
        ProtocolParams {
            timeout_duration_s: v[0],
            ir_attempts: v[1].round().max(1.0) as u32,
            alternates: v[2].round().max(1.0) as u32,
            phase_delay_factor: v[3],
            nack_backoff_min_s: v[4],
            nack_backoff_max_s: v[5],
            start_ir_time_s: v[6],
            solve_timeout_s: v[7],
        }
    }
}

/// Majority quorum of a sector's occupants; an empty sector needs none.
pub fn quorum(occupants: usize) -> usize {
    if occupants == 0 {
        0
    } else {
        occupants / 2 + 1
    }
}

/// Randomized exponential backoff after a rejected round.
///
/// The draw is uniform over a doubling window clamped into
/// `[nack_backoff_min, nack_backoff_max]`: attempt `a` draws from
/// `[min * 2^a, min * 2^(a+1)]` until the window collapses onto the cap.
pub fn nack_backoff(attempt: u32, params: &ProtocolParams, rng: &mut impl Rng) -> Scalar {
    let cap = params.nack_backoff_max_s;
    let scale = 2f64.powi(attempt.min(62) as i32);
    let lo = (params.nack_backoff_min_s * scale).min(cap);
    let hi = (params.nack_backoff_min_s * scale * 2.0).min(cap);
    if lo >= hi {
        return cap;
    }
    rng.random_range(lo..hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quorum_is_majority_with_empty_fast_path() {
        assert_eq!(quorum(0), 0);
        assert_eq!(quorum(1), 1);
        assert_eq!(quorum(2), 2);
        assert_eq!(quorum(3), 2);
        assert_eq!(quorum(4), 3);
        assert_eq!(quorum(5), 3);
    }

    #[test]
    fn backoff_window_doubles_then_caps() {
        let params = ProtocolParams {
            nack_backoff_min_s: 0.1,
            nack_backoff_max_s: 2.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let d0 = nack_backoff(0, &params, &mut rng);
            assert!((0.1..=0.2).contains(&d0), "attempt 0 draws in [min, 2 min], got {d0}");
        }
        for _ in 0..200 {
            let d10 = nack_backoff(10, &params, &mut rng);
            assert_eq!(d10, 2.0, "collapsed window returns the cap exactly");
        }
    }

    #[test]
    fn backoff_always_within_bounds() {
        let params = ProtocolParams {
            nack_backoff_min_s: 0.05,
            nack_backoff_max_s: 3.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for attempt in 0..40 {
            for _ in 0..250 {
                let d = nack_backoff(attempt, &params, &mut rng);
                assert!((params.nack_backoff_min_s..=params.nack_backoff_max_s).contains(&d));
            }
        }
    }

    #[test]
    fn seeded_backoff_is_deterministic() {
        let params = ProtocolParams::default();
        let draws = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|a| nack_backoff(a % 5, &params, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draws(3), draws(3));
        assert_ne!(draws(3), draws(4));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = ProtocolParams::default();
        p.nack_backoff_min_s = 3.0;
        assert_eq!(p.validate(), Err(ParamError::BackoffOrder));
        let mut p = ProtocolParams::default();
        p.ir_attempts = 0;
        assert_eq!(p.validate(), Err(ParamError::BelowOne("ir_attempts")));
    }

    #[test]
    fn array_round_trip() {
        let p = ProtocolParams::default();
        assert_eq!(ProtocolParams::from_array(&p.to_array()), p);
    }
}
