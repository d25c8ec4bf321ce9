//! Design of ±1 spreading code families with low circular correlation
//! sidelobes.
//!
//! The crate optimizes an n×m family of binary (±1) codes so that the sum of
//! squared circular auto- and cross-correlations is small, while every code
//! keeps its shift-one autocorrelation at the minimum magnitude the code
//! length allows (the ACZ property). The optimizer is a two-stage block
//! coordinate descent: stage one drives the family into the ACZ-feasible set,
//! stage two minimizes the correlation objective without leaving it. Each
//! block update is solved exactly, either by exhaustive enumeration or by a
//! custom branch-and-bound over the selected bits.
//!
//! Gold and Weil code generators are included as baselines, along with a
//! plain-text family file format shared by the library and the CLI.

pub mod bcd;
pub mod correlation;
mod error;
pub mod family;
pub mod generators;
pub mod subproblem;

pub use error::{Error, Result};
pub use family::{is_acz, load_family, save_family, AczParameter, CodeFamily, IndexSet};

pub use correlation::{
    apply_assignment, build_table, cross_correlation, parseval_check, ChipAssignment,
    CorrelationTable, ObjectiveValue,
};

pub use generators::{gold_family, random_family, weil_family, GoldSpec, WeilSpec};

pub use subproblem::{
    build_partial, solve_branch_and_bound, solve_exhaustive, PartialProblem, SolveResult,
    SubproblemMode, DEFAULT_ENUMERATION_CAP,
};

pub use bcd::{
    bcd_step, run, run_stage_one, run_stage_two, select_subset, BcdConfig, CheckpointConfig,
    Initializer, IterationRecord, ResolvedRunConfig, RunHistory, RunOptions, SelectionStrategy,
    SolverChoice, StageRun, StepOutcome,
};
