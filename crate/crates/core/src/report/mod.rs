//! Batch runs and artifacts built on the simulator: sensing-radius sweeps,
//! the centralized oracle check, random scenarios and SVG path plots.

mod generate;
mod oracle;
mod plot;
mod sweep;

pub use generate::{random_scenario, GeneratorParams};
pub use oracle::{assignment_cost, brute_force_assignment, oracle_check, OracleReport};
pub use plot::render_svg;
pub use sweep::{sweep, SweepResult, SweepRow, SWEEP_HEADER};
