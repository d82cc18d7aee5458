//! Configuration, the analysis pipeline, invariant suites and report/CSV
//! output shared by the command line tool and the Python bindings.

mod analyze;
mod check;
mod config;
mod report;

pub use analyze::{
    run_analyze, run_curvature, run_volume, write_outputs, write_packet_csv, write_suites_csv, write_topology_csv,
    Outcome,
};
pub use check::{run_check, CheckOutcome, Fault, BIANCHI_LIMIT, CONFORMAL_LIMIT, NON_EINSTEIN_FLOOR};
pub use config::{parse_ladder, Numerics, Outputs, Overrides, RunConfig};
pub use report::{Gate, Report, REPORT_HEADER};
