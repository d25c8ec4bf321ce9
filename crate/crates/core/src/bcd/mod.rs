//! Two-stage block coordinate descent over a code family.
//!
//! Each iteration draws a random subset of chips, solves the restricted
//! problem over them exactly, and writes the optimal values back. Stage one
//! minimizes the shift-one autocorrelation energy until every code meets the
//! ACZ bound; stage two minimizes the full correlation objective with the ACZ
//! constraints enforced, so the objective never increases and feasibility is
//! never lost.

mod checkpoint;

pub use checkpoint::{CheckpointConfig, ResolvedRunConfig, HISTORY_HEADER};
use checkpoint::CheckpointWriter;

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{
    apply_assignment, build_table, ChipAssignment, CorrelationTable, ObjectiveValue,
};
use crate::error::{Error, Result};
use crate::family::{is_acz, CodeFamily, IndexSet};
use crate::generators::{gold_family, random_family_with, weil_family, GoldSpec, WeilSpec};
use crate::subproblem::{
    build_partial, solve_branch_and_bound, solve_exhaustive, SubproblemMode,
};

/// How each iteration's variable subset is drawn: `block_size` bits across at
/// most `max_active_columns` codes, at most `max_per_column` bits per code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionStrategy {
    pub block_size: usize,
    pub max_active_columns: usize,
    pub max_per_column: usize,
}

impl SelectionStrategy {
    /// Strategy with the per-column cap defaulted to ⌈block_size /
    /// max_active_columns⌉, spreading the bits evenly.
    pub fn new(block_size: usize, max_active_columns: usize) -> Self {
        SelectionStrategy {
            block_size,
            max_active_columns,
            max_per_column: block_size.div_ceil(max_active_columns.max(1)),
        }
    }

    pub fn with_max_per_column(mut self, max_per_column: usize) -> Self {
        self.max_per_column = max_per_column;
        self
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let detail = if self.block_size == 0 {
            Some("block size must be at least 1".to_string())
        } else if self.max_active_columns == 0 || self.max_active_columns > m {
            Some(format!(
                "max active columns {} out of range 1..={m}",
                self.max_active_columns
            ))
        } else if self.max_per_column == 0 || self.max_per_column > n {
            Some(format!(
                "max per column {} out of range 1..={n}",
                self.max_per_column
            ))
        } else if self.max_active_columns * self.max_per_column < self.block_size {
            Some(format!(
                "{} columns x {} per column cannot hold {} bits",
                self.max_active_columns, self.max_per_column, self.block_size
            ))
        } else {
            None
        };
        match detail {
            Some(detail) => Err(Error::StrategyInfeasible { detail }),
            None => Ok(()),
        }
    }
}

/// Which exact solver performs the block updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Enumeration,
    BranchAndBound,
    /// Enumeration for blocks of up to 4 bits, branch-and-bound above.
    Auto,
}

impl SolverChoice {
    fn use_enumeration(self, block_size: usize) -> bool {
        match self {
            SolverChoice::Enumeration => true,
            SolverChoice::BranchAndBound => false,
            SolverChoice::Auto => block_size <= 4,
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverChoice::Enumeration => "enum",
            SolverChoice::BranchAndBound => "bnb",
            SolverChoice::Auto => "auto",
        })
    }
}

/// Per-stage run limits and the block solver choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcdConfig {
    pub strategy: SelectionStrategy,
    pub seed: u64,
    /// Iteration cap per stage.
    pub max_iterations: Option<u64>,
    /// Wall-clock cap per stage, in seconds, checked between iterations.
    pub time_limit: Option<f64>,
    /// Stage two stops after this many consecutive non-improving iterations.
    /// `None` applies the default of max(1, 2000 / block_size).
    pub patience: Option<u64>,
    pub solver: SolverChoice,
}

impl BcdConfig {
    pub fn new(strategy: SelectionStrategy, seed: u64) -> Self {
        BcdConfig {
            strategy,
            seed,
            max_iterations: Some(100_000),
            time_limit: None,
            patience: None,
            solver: SolverChoice::Auto,
        }
    }

    pub fn effective_patience(&self) -> u64 {
        self.patience
            .unwrap_or_else(|| (2000 / self.strategy.block_size.max(1) as u64).max(1))
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        self.strategy.validate(n, m)?;
        if self.max_iterations.is_none() && self.time_limit.is_none() {
            return Err(Error::InvalidConfig {
                detail: "need a finite max_iterations or time_limit".into(),
            });
        }
        if self.patience == Some(0) {
            return Err(Error::InvalidConfig {
                detail: "patience must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Starting family of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Initializer {
    Random,
    Gold,
    Weil,
    File(PathBuf),
}

impl Initializer {
    /// Parses the CLI form: `random`, `gold`, `weil`, or `file:PATH`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Initializer::Random),
            "gold" => Ok(Initializer::Gold),
            "weil" => Ok(Initializer::Weil),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(Initializer::File(PathBuf::from(path))),
                _ => Err(Error::InitializerError {
                    detail: format!("unknown initializer {s:?} (random|gold|weil|file:PATH)"),
                }),
            },
        }
    }

    /// Builds the initial n×m family. Gold and Weil initializers order the
    /// ACZ-satisfying codes first, then fill with the remaining codes, so
    /// small families start as close to feasible as the baseline allows.
    pub fn build(&self, n: usize, m: usize, rng: &mut ChaCha8Rng) -> Result<CodeFamily> {
        match self {
            Initializer::Random => random_family_with(rng, n, m),
            Initializer::Gold => {
                if !(n + 1).is_power_of_two() {
                    return Err(Error::InitializerError {
                        detail: format!("gold init needs n = 2^d - 1, got {n}"),
                    });
                }
                let degree = (n + 1).trailing_zeros();
                let family = gold_family(&GoldSpec::with_default_pair(degree)?)?;
                take_acz_first(family, m)
            }
            Initializer::Weil => {
                let family = weil_family(&WeilSpec::new(n))?;
                take_acz_first(family, m)
            }
            Initializer::File(path) => {
                let family = crate::family::load_family(path)?;
                if family.n() != n || family.m() != m {
                    return Err(Error::InitializerError {
                        detail: format!(
                            "{} holds a {}x{} family, expected {n}x{m}",
                            path.display(),
                            family.n(),
                            family.m()
                        ),
                    });
                }
                Ok(family)
            }
        }
    }
}

impl fmt::Display for Initializer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initializer::Random => f.write_str("random"),
            Initializer::Gold => f.write_str("gold"),
            Initializer::Weil => f.write_str("weil"),
            Initializer::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

fn take_acz_first(family: CodeFamily, m: usize) -> Result<CodeFamily> {
    if m > family.m() {
        return Err(Error::InitializerError {
            detail: format!(
                "requested {m} codes but the baseline family has only {}",
                family.m()
            ),
        });
    }
    let (mut acz, rest): (Vec<Vec<i8>>, Vec<Vec<i8>>) = family
        .codes()
        .map(<[i8]>::to_vec)
        .partition(|c| is_acz(c));
    acz.extend(rest);
    acz.truncate(m);
    CodeFamily::new(acz)
}

/// One history row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Global iteration index across both stages, starting at 0.
    pub iteration: u64,
    pub stage: u8,
    pub elapsed_s: f64,
    pub block_size: usize,
    pub active_columns: usize,
    /// Solver objective of the step: restricted correlation energy in stage
    /// two, restricted shift-one energy in stage one.
    pub restricted_objective: i64,
    pub isl: i64,
    pub mos: f64,
    pub j: i64,
}

/// Everything a run produced: per-iteration records, the final family, and
/// the stage outcomes.
#[derive(Debug, Clone)]
pub struct RunHistory {
    pub records: Vec<IterationRecord>,
    pub final_family: CodeFamily,
    pub final_objective: ObjectiveValue,
    pub final_j: i64,
    pub stage_one_iterations: u64,
    pub stage_two_iterations: u64,
    /// False when the stage-one budget ran out before reaching feasibility;
    /// the best family found is still returned.
    pub acz_feasible: bool,
}

/// Outcome of a single stage run.
#[derive(Debug, Clone)]
pub struct StageRun {
    pub family: CodeFamily,
    pub records: Vec<IterationRecord>,
    pub iterations: u64,
    pub feasible: bool,
}

/// Draws a variable subset: `min(max_active_columns, block_size)` distinct
/// columns uniformly, then distinct rows per column in round-robin order
/// until the block is full.
pub fn select_subset(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    strategy: &SelectionStrategy,
) -> Result<IndexSet> {
    strategy.validate(n, m)?;
    let cols_wanted = strategy.max_active_columns.min(strategy.block_size);

    let mut columns: Vec<usize> = Vec::with_capacity(cols_wanted);
    while columns.len() < cols_wanted {
        let c = rng.gen_range(0..m);
        if !columns.contains(&c) {
            columns.push(c);
        }
    }

    let mut rows_used: Vec<Vec<usize>> = vec![Vec::new(); cols_wanted];
    let mut entries: Vec<(usize, usize)> = Vec::with_capacity(strategy.block_size);
    while entries.len() < strategy.block_size {
        for (slot, &col) in columns.iter().enumerate() {
            if entries.len() == strategy.block_size {
                break;
            }
            if rows_used[slot].len() >= strategy.max_per_column || rows_used[slot].len() >= n {
                continue;
            }
            let row = loop {
                let r = rng.gen_range(0..n);
                if !rows_used[slot].contains(&r) {
                    break r;
                }
            };
            rows_used[slot].push(row);
            entries.push((col, row));
        }
    }
    IndexSet::new(entries)
}

/// Outcome of one block update.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub restricted_objective: i64,
    pub solver_nodes: u64,
    pub changed_bits: usize,
    pub objective: ObjectiveValue,
}

/// Performs one BCD step over `subset`: builds the restricted problem,
/// solves it exactly, and applies the optimal assignment to the family and
/// table.
pub fn bcd_step(
    family: &mut CodeFamily,
    table: &mut CorrelationTable,
    subset: &IndexSet,
    mode: SubproblemMode,
    solver: SolverChoice,
) -> Result<StepOutcome> {
    let problem = build_partial(family, table, subset, mode)?;
    let result = if solver.use_enumeration(subset.len()) {
        solve_exhaustive(&problem)?
    } else {
        solve_branch_and_bound(&problem)?
    };

    let changed_bits = result
        .assignment
        .iter()
        .zip(problem.incumbent())
        .filter(|(a, b)| a != b)
        .count();
    let chips: Vec<ChipAssignment> = subset
        .entries()
        .iter()
        .zip(&result.assignment)
        .map(|(&(code, row), &value)| ChipAssignment { code, row, value })
        .collect();
    let objective = apply_assignment(family, table, &chips)?;

    Ok(StepOutcome {
        restricted_objective: result.objective,
        solver_nodes: result.nodes_explored,
        changed_bits,
        objective,
    })
}

/// Runs stage one on its own: descends on the shift-one energy until the
/// family satisfies the ACZ bound or the budget runs out.
pub fn run_stage_one(family: CodeFamily, config: &BcdConfig) -> Result<StageRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut driver = Driver::new(family, config, &mut rng, None)?;
    let feasible = driver.stage_one()?;
    Ok(driver.into_stage_run(feasible))
}

/// Runs stage two on its own; the family must already satisfy the ACZ bound.
pub fn run_stage_two(family: CodeFamily, config: &BcdConfig) -> Result<StageRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut driver = Driver::new(family, config, &mut rng, None)?;
    driver.require_acz()?;
    driver.stage_two()?;
    Ok(driver.into_stage_run(true))
}

/// Checkpoint-enabled options for a full run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub n: usize,
    pub m: usize,
    pub initializer: Initializer,
    pub config: BcdConfig,
    pub checkpoint: Option<CheckpointConfig>,
    /// Worker threads for table construction; block solves stay sequential.
    pub threads: usize,
}

impl RunOptions {
    pub fn new(n: usize, m: usize, initializer: Initializer, config: BcdConfig) -> Self {
        RunOptions {
            n,
            m,
            initializer,
            config,
            checkpoint: None,
            threads: 1,
        }
    }
}

/// Full two-stage run: initialize, reach feasibility, minimize. Checkpoints
/// (family snapshot, flushed history, resolved config) are written at the
/// configured period and at termination. Reproducible from (initializer,
/// config, seed).
pub fn run(options: &RunOptions) -> Result<RunHistory> {
    options.config.validate(options.n, options.m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.config.seed);
    let family = options
        .initializer
        .build(options.n, options.m, &mut rng)?;

    let writer = match &options.checkpoint {
        Some(ckpt) => Some(CheckpointWriter::new(ckpt, options)?),
        None => None,
    };

    let mut driver = Driver::new(family, &options.config, &mut rng, writer)?;
    let feasible = driver.stage_one()?;
    if feasible {
        driver.stage_two()?;
    }
    driver.finish(feasible)
}

struct Driver<'a> {
    family: CodeFamily,
    table: CorrelationTable,
    config: &'a BcdConfig,
    rng: &'a mut ChaCha8Rng,
    records: Vec<IterationRecord>,
    started: Instant,
    iteration: u64,
    stage_iterations: [u64; 2],
    writer: Option<CheckpointWriter>,
}

impl<'a> Driver<'a> {
    fn new(
        family: CodeFamily,
        config: &'a BcdConfig,
        rng: &'a mut ChaCha8Rng,
        writer: Option<CheckpointWriter>,
    ) -> Result<Self> {
        config.validate(family.n(), family.m())?;
        let table = build_table(&family);
        Ok(Driver {
            family,
            table,
            config,
            rng,
            records: Vec::new(),
            started: Instant::now(),
            iteration: 0,
            stage_iterations: [0, 0],
            writer,
        })
    }

    fn require_acz(&self) -> Result<()> {
        if let Some(code) = (0..self.family.m()).find(|&i| !is_acz(self.family.code(i))) {
            return Err(Error::AczPrecondition { code });
        }
        Ok(())
    }

    fn budget_left(&self, stage_started: Instant, stage_iters: u64) -> bool {
        if let Some(max) = self.config.max_iterations {
            if stage_iters >= max {
                return false;
            }
        }
        if let Some(limit) = self.config.time_limit {
            if stage_started.elapsed().as_secs_f64() >= limit {
                return false;
            }
        }
        true
    }

    fn iterate(&mut self, stage: u8, mode: SubproblemMode) -> Result<StepOutcome> {
        let subset = select_subset(
            self.rng,
            self.family.n(),
            self.family.m(),
            &self.config.strategy,
        )?;
        let outcome = bcd_step(
            &mut self.family,
            &mut self.table,
            &subset,
            mode,
            self.config.solver,
        )?;

        let record = IterationRecord {
            iteration: self.iteration,
            stage,
            elapsed_s: self.started.elapsed().as_secs_f64(),
            block_size: subset.len(),
            active_columns: subset.active_columns().len(),
            restricted_objective: outcome.restricted_objective,
            isl: outcome.objective.isl,
            mos: outcome.objective.mos,
            j: self.table.stage_one_objective(),
        };
        if let Some(writer) = &mut self.writer {
            writer.record(&record)?;
        }
        self.records.push(record);
        self.iteration += 1;
        self.stage_iterations[stage as usize - 1] += 1;
        if let Some(writer) = &mut self.writer {
            writer.maybe_checkpoint(self.iteration, &self.family, &self.table)?;
        }
        Ok(outcome)
    }

    /// Stage one: descend on the shift-one energy until feasible. Returns
    /// false when the budget ran out first.
    fn stage_one(&mut self) -> Result<bool> {
        let stage_started = Instant::now();
        let mut iters = 0u64;
        loop {
            if self.table.all_acz() {
                return Ok(true);
            }
            if !self.budget_left(stage_started, iters) {
                return Ok(false);
            }
            self.iterate(1, SubproblemMode::StageOne)?;
            iters += 1;
        }
    }

    /// Stage two: descend on the full objective, stopping on patience or
    /// budget.
    fn stage_two(&mut self) -> Result<()> {
        let stage_started = Instant::now();
        let patience = self.config.effective_patience();
        let mut best = self.table.isl();
        let mut non_improving = 0u64;
        let mut iters = 0u64;
        while self.budget_left(stage_started, iters) && non_improving < patience {
            let outcome = self.iterate(2, SubproblemMode::StageTwo)?;
            iters += 1;
            if outcome.objective.isl < best {
                best = outcome.objective.isl;
                non_improving = 0;
            } else {
                non_improving += 1;
            }
        }
        Ok(())
    }

    fn into_stage_run(self, feasible: bool) -> StageRun {
        StageRun {
            family: self.family,
            iterations: self.iteration,
            records: self.records,
            feasible,
        }
    }

    fn finish(mut self, feasible: bool) -> Result<RunHistory> {
        if let Some(writer) = &mut self.writer {
            writer.finalize(self.iteration, &self.family, &self.table)?;
        }
        Ok(RunHistory {
            final_objective: self.table.objective(),
            final_j: self.table.stage_one_objective(),
            records: self.records,
            final_family: self.family,
            stage_one_iterations: self.stage_iterations[0],
            stage_two_iterations: self.stage_iterations[1],
            acz_feasible: feasible,
        })
    }
}
