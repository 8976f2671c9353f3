//! Deterministic simulation of decentralized sector-admission control.
//!
//! The crate models a square block of en-route airspace partitioned into a
//! rectangular grid of sectors with three fixed altitude layers. Aircraft
//! negotiate entry into each sector they cross by running a leaderless,
//! quorum-based admission protocol against the sector's current occupants:
//! a discovery round establishes the occupant set and their flight plans, a
//! single-decree agreement round decides whether the candidate plan (possibly
//! speed-adjusted, delayed, or laterally offset) is admitted, and a two-round
//! acknowledge protocol disseminates the decision so every member holds an
//! identical view of the admitted set.
//!
//! Everything runs on a single-threaded discrete-event loop with integer
//! picosecond timestamps, so a given scenario, parameter set, and seed always
//! produces bit-identical results.
//!
//! On top of the simulator sit two analysis layers:
//!
//! * [`sectorize`] scores candidate grid configurations against a traffic
//!   snapshot (occupancy variance, handoff counts, boundary-spanning risk
//!   pairs) and labels the best grid by exhaustive search.
//! * [`tuner`] tunes the eight protocol parameters with Gaussian-process
//!   Bayesian optimization (Latin hypercube seeding, Matern 5/2 ARD kernel,
//!   expected improvement).
//!
//! Numeric kernels (closest-point-of-approach algebra, kernel functions,
//! acquisition math, circular statistics) are generic over [`real::Real`];
//! the domain layer instantiates them at [`Scalar`].

pub mod airspace;
pub mod conflict;
pub mod des;
pub mod metrics;
pub mod protocol;
pub mod real;
pub mod scenario;
pub mod sectorize;
pub mod sim;
pub mod time;
pub mod tuner;

/// Concrete scalar used by the domain layer.
///
/// The numeric core is generic over [`real::Real`]; switching this alias
/// re-types every geometric and statistical computation in the crate.
pub type Scalar = f64;

/// Feet per international nautical mile (1852 m nmi, 0.3048 m ft).
pub const FT_PER_NM: Scalar = 1852.0 / 0.3048;

/// Knots expressed in nautical miles per second.
pub const NM_PER_S_PER_KT: Scalar = 1.0 / 3600.0;
