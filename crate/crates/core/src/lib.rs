//! Capacity of discrete memoryless channels.
//!
//! The crate solves `max_p I(p, W)` over the input simplex with the
//! Arimoto-Blahut alternating-optimization recurrence, brackets the optimum
//! between computable lower and upper bounds each iteration, and ships the
//! instrumentation needed to study how fast the iteration converges:
//! per-iteration divergence bookkeeping, decay-rate fitting, KKT-style
//! classification of input symbols, and independent capacity oracles
//! (closed forms and brute-force lattice search) to validate against.
//!
//! All information quantities are in nats; bits appear only at reporting
//! boundaries. Types are immutable after construction and operations are
//! pure, so everything can be shared across threads freely.

pub mod error;
pub mod generate;
pub mod info;
pub mod lab;
pub mod numeric;
pub mod oracle;
pub mod prob;
pub mod solver;

pub use error::{Error, Result};
pub use info::{entropy, kl_divergence, mutual_information, output_distribution, row_divergence};
pub use lab::{
    annotate_trace, classify_indexes, fit_rate, iteration_bound_check, optimality_gaps,
    BoundCheck, ConvergenceRecord, IndexClassification, IndexType, RateFit, ReferenceOptimum,
    RefSource, Regime,
};
pub use oracle::{analytic_capacity, grid_search_capacity, OracleMethod, OracleResult};
pub use prob::{Channel, Distribution};
pub use solver::{
    ab_step, approx_capacity, capacity_upper_bound, solve, Init, IterationRecord, SolveReport,
    SolverConfig, StopReason,
};
