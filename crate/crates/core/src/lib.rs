//! Robust trajectory tracking with a collision-cone safety filter for
//! planar robots.
//!
//! The pipeline at each control step:
//!
//! 1. [`models`] maps the native vehicle state (Ackermann, differential
//!    drive, or double integrator) onto a common control-affine form.
//! 2. [`smc`] computes a practical sliding-mode tracking input with a
//!    boundary-layer saturation.
//! 3. [`cbf`] turns every obstacle into a robust collision-cone constraint
//!    row and the speed/steering limits into slack-relaxed soft rows.
//! 4. [`qp`] finds the input closest to the tracking command that satisfies
//!    all rows.
//! 5. [`sim`] closes the loop with fixed-step RK4 under zero-order-hold
//!    control and logs a deterministic trace.
//!
//! All numerics are generic over the scalar type through [`Real`]; the
//! aliases at the crate root fix `f64` for the common case.

pub mod cbf;
pub mod math;
pub mod models;
pub mod qp;
mod real;
pub mod sim;
pub mod smc;

pub use real::Real;

/// Double-precision vector.
pub type Vec2 = math::Vec2<f64>;
/// Double-precision 2x2 matrix.
pub type Mat2 = math::Mat2<f64>;
/// Double-precision scenario description.
pub type Scenario = sim::Scenario<f64>;
/// Double-precision trace.
pub type Trace = sim::Trace<f64>;
/// Double-precision run metrics.
pub type Metrics = sim::Metrics<f64>;
