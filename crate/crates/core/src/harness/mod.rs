//! Evaluation regimens, hidden-unit sweeps and experiment grids.
//!
//! A grid is the Cartesian product of domain parameters, depths and master
//! seeds. Each cell sweeps the hidden-unit candidates under one regimen
//! (stratified cross-validation or balanced testing) and keeps the candidate
//! with the best mean macro G-Mean, along with an audit of all candidates.

mod folds;
mod grid;
mod report;
mod run;
pub mod seeds;

pub use folds::{complement, stratified_folds};
pub use grid::{
    presets, run_grid, Cell, CellFailure, CellOutcome, DomainGrid, ExperimentGrid, TimedOutcome,
};
pub use report::{
    load_results, parse_results, pivot, render_table, save_pivot_csv, save_results,
    write_pivot_csv, write_results, write_timings, PivotRow, PIVOT_HEADER,
};
pub use run::{
    fit_and_score, run_balanced_test, run_cv, run_regimen, summarize, sweep_hidden_units,
    AuditEntry, ExperimentResult, Regimen, TrainingSchedule, THRESHOLD,
};
