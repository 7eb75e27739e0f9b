//! Lambda sweeps and audits producing CSV/JSON tables.

pub mod audit;
pub mod config;
pub mod result;
pub mod runners;

pub use audit::run_inequality_audit;
pub use config::{Experiment, LambdaSchedule, SweepConfig};
pub use result::{Row, SweepResult, TrendCheck, CSV_HEADER, SCHEMA_VERSION};
pub use runners::{run, run_berezin_convergence, run_block_decomposition, run_bmo_sweep, run_counterexample, run_products_sweep, run_semicommutator_sweep};
