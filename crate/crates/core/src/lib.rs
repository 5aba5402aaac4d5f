//! Simulation and planning library for modular, self-servicing satellite
//! power systems.

pub mod cli;
pub mod model;
pub mod planner;
pub mod power;
pub mod reliability;
pub mod sim;
pub mod sizing;
pub mod unloader;

/// Seconds for trace and log lines: integral values without a fraction,
/// others to the millisecond.
pub fn fmt_seconds(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 1e15 {
        format!("{}", t as i64)
    } else {
        format!("{t:.3}")
    }
}
