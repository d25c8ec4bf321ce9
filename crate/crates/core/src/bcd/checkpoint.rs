//! Checkpoint layout of a run directory: `config.json` (the resolved run
//! configuration), `history.csv` (one row per iteration, buffered and flushed
//! at checkpoints), and `family_<iter>.txt` snapshots in the family file
//! format.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::correlation::{build_table, CorrelationTable};
use crate::error::Result;
use crate::family::{save_family, CodeFamily};

use super::{BcdConfig, Initializer, IterationRecord, RunOptions, SelectionStrategy, SolverChoice};

/// Where and how often snapshots are written. `every == 0` disables periodic
/// snapshots; the final state is always written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointConfig {
    pub dir: PathBuf,
    pub every: u64,
}

pub const HISTORY_HEADER: &str =
    "iter,stage,elapsed_s,block_size,active_cols,restricted_obj,isl,mos,J";

/// Flat key-value document describing a run completely. Every field except
/// `n` and `m` has a default; unknown keys are rejected. The `config.json`
/// a run writes is a valid document for reproducing that run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedRunConfig {
    pub n: usize,
    pub m: usize,
    #[serde(default = "defaults::init")]
    pub init: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::block_size")]
    pub block_size: usize,
    /// Defaults to `min(block_size, m)`.
    #[serde(default)]
    pub max_active_cols: Option<usize>,
    /// Defaults to ⌈block_size / max_active_cols⌉.
    #[serde(default)]
    pub max_per_col: Option<usize>,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: Option<u64>,
    #[serde(default)]
    pub time_limit: Option<f64>,
    /// Defaults to max(1, 2000 / block_size).
    #[serde(default)]
    pub patience: Option<u64>,
    #[serde(default = "defaults::solver")]
    pub solver: String,
    #[serde(default = "defaults::out")]
    pub out: String,
    #[serde(default = "defaults::checkpoint_every")]
    pub checkpoint_every: u64,
    #[serde(default = "defaults::threads")]
    pub threads: usize,
}

mod defaults {
    pub fn init() -> String {
        "random".into()
    }
    pub fn block_size() -> usize {
        1
    }
    pub fn max_iters() -> Option<u64> {
        Some(100_000)
    }
    pub fn solver() -> String {
        "auto".into()
    }
    pub fn out() -> String {
        "bcd_out".into()
    }
    pub fn checkpoint_every() -> u64 {
        500
    }
    pub fn threads() -> usize {
        1
    }
}

impl ResolvedRunConfig {
    /// Captures a run's options with every default made explicit.
    pub fn from_options(options: &RunOptions) -> Self {
        let cfg = &options.config;
        ResolvedRunConfig {
            n: options.n,
            m: options.m,
            init: options.initializer.to_string(),
            seed: cfg.seed,
            block_size: cfg.strategy.block_size,
            max_active_cols: Some(cfg.strategy.max_active_columns),
            max_per_col: Some(cfg.strategy.max_per_column),
            max_iters: cfg.max_iterations,
            time_limit: cfg.time_limit,
            patience: Some(cfg.effective_patience()),
            solver: cfg.solver.to_string(),
            out: options
                .checkpoint
                .as_ref()
                .map(|c| c.dir.display().to_string())
                .unwrap_or_default(),
            checkpoint_every: options
                .checkpoint
                .as_ref()
                .map_or(defaults::checkpoint_every(), |c| c.every),
            threads: options.threads,
        }
    }

    pub fn parse_solver(&self) -> Result<SolverChoice> {
        match self.solver.as_str() {
            "enum" => Ok(SolverChoice::Enumeration),
            "bnb" => Ok(SolverChoice::BranchAndBound),
            "auto" => Ok(SolverChoice::Auto),
            other => Err(crate::error::Error::InvalidConfig {
                detail: format!("unknown solver {other:?} (enum|bnb|auto)"),
            }),
        }
    }

    /// Materializes run options, applying the documented defaults.
    pub fn into_options(self) -> Result<RunOptions> {
        let max_active_cols = self
            .max_active_cols
            .unwrap_or_else(|| self.block_size.min(self.m).max(1));
        let mut strategy = SelectionStrategy::new(self.block_size, max_active_cols);
        if let Some(per_col) = self.max_per_col {
            strategy = strategy.with_max_per_column(per_col);
        }
        let solver = self.parse_solver()?;
        let initializer = Initializer::parse(&self.init)?;
        let config = BcdConfig {
            strategy,
            seed: self.seed,
            max_iterations: self.max_iters,
            time_limit: self.time_limit,
            patience: self.patience,
            solver,
        };
        Ok(RunOptions {
            n: self.n,
            m: self.m,
            initializer,
            config,
            checkpoint: Some(CheckpointConfig {
                dir: PathBuf::from(self.out),
                every: self.checkpoint_every,
            }),
            threads: self.threads,
        })
    }
}

pub(super) struct CheckpointWriter {
    dir: PathBuf,
    every: u64,
    history: BufWriter<fs::File>,
}

impl CheckpointWriter {
    pub fn new(ckpt: &CheckpointConfig, options: &RunOptions) -> Result<Self> {
        fs::create_dir_all(&ckpt.dir)?;
        let resolved = ResolvedRunConfig::from_options(options);
        let json = serde_json::to_string_pretty(&resolved)?;
        fs::write(ckpt.dir.join("config.json"), json + "\n")?;

        let mut history = BufWriter::new(fs::File::create(ckpt.dir.join("history.csv"))?);
        writeln!(history, "{HISTORY_HEADER}")?;
        Ok(CheckpointWriter {
            dir: ckpt.dir.clone(),
            every: ckpt.every,
            history,
        })
    }

    pub fn record(&mut self, r: &IterationRecord) -> Result<()> {
        writeln!(
            self.history,
            "{},{},{:.6},{},{},{},{},{:.9},{}",
            r.iteration,
            r.stage,
            r.elapsed_s,
            r.block_size,
            r.active_columns,
            r.restricted_objective,
            r.isl,
            r.mos,
            r.j
        )?;
        Ok(())
    }

    /// Snapshots after every `every` completed iterations.
    pub fn maybe_checkpoint(
        &mut self,
        completed: u64,
        family: &CodeFamily,
        table: &CorrelationTable,
    ) -> Result<()> {
        if self.every > 0 && completed > 0 && completed.is_multiple_of(self.every) {
            self.snapshot(completed, family, table)?;
        }
        Ok(())
    }

    pub fn finalize(
        &mut self,
        completed: u64,
        family: &CodeFamily,
        table: &CorrelationTable,
    ) -> Result<()> {
        self.snapshot(completed, family, table)
    }

    fn snapshot(
        &mut self,
        completed: u64,
        family: &CodeFamily,
        table: &CorrelationTable,
    ) -> Result<()> {
        save_family(family, self.dir.join(format!("family_{completed}.txt")))?;
        self.history.flush()?;

        // Spot-check: the incrementally maintained table must agree with a
        // from-scratch rebuild.
        let rebuilt = build_table(family);
        assert_eq!(
            rebuilt.isl(),
            table.isl(),
            "correlation table drifted from the family at iteration {completed}"
        );
        Ok(())
    }
}
