//! Minimum-total-power scheduling for a high-speed train served by two
//! cache-equipped roadside radio heads (RRHs).
//!
//! The crate computes dynamic per-RRH power trajectories under an
//! instantaneous delay constraint and a content-delivery constraint,
//! trading transmit power against backhaul cost through a smoothed-l0
//! activity penalty. A constant-power baseline, brute-force reference
//! solvers and an experiment harness layer sit on top.
//!
//! All core math is generic over the scalar type (see [`scalar::Real`]);
//! concrete `f64` aliases are exported below.

pub mod caching;
pub mod dynamic_solver;
pub mod invariant_solver;
pub mod numerics;
pub mod oracle;
pub mod scalar;
pub mod scenario;
pub mod surrogate;
pub mod trajectory;

pub use scalar::Real;

/// `f64` aliases for the common entry points.
pub type TimeGrid64 = numerics::TimeGrid<f64>;
pub type LinearProgram64 = numerics::LinearProgram<f64>;
pub type Scenario64 = scenario::ScenarioConfig<f64>;
pub type Popularity64 = caching::Popularity<f64>;
pub type PowerTrajectory64 = trajectory::PowerTrajectory<f64>;
