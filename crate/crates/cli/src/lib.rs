//! Command-line front end: presets, scenario files, run orchestration and
//! artifact writing. The binary entry point lives in `main.rs`.

pub mod output;
pub mod plot;
pub mod presets;
pub mod schema;

/// Barrier values below this at any physics step count as a safety
/// violation (exit code 2); matches the discretization slack of the
/// default 1 ms physics step.
pub const SAFETY_H_TOL: f64 = -1e-3;
