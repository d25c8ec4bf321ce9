//! Command-line interface: optimization runs, baseline generation, family
//! evaluation, and the block-solve timing benchmark.
//!
//! Exit codes: 0 on success, 1 on usage or i/o errors, 2 when a run's first
//! stage exhausted its budget before reaching ACZ feasibility.

use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use spreadopt_core::generators::random_family_with;
use spreadopt_core::subproblem::{
    build_partial, solve_branch_and_bound, solve_exhaustive, SubproblemMode,
};
use spreadopt_core::{
    build_table, gold_family, load_family, run, save_family, select_subset, weil_family,
    CodeFamily, GoldSpec, ResolvedRunConfig, SelectionStrategy, WeilSpec,
};

#[derive(Parser)]
#[command(
    name = "spreadopt",
    version,
    about = "Design and evaluate ±1 spreading code families with low correlation sidelobes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the two-stage block coordinate descent optimizer.
    Run(RunArgs),
    /// Generate a baseline family (gold, weil, or random) as a family file.
    Generate(GenerateArgs),
    /// Evaluate a family file: correlation objective and ACZ statistics.
    Eval(EvalArgs),
    /// Time restricted-problem builds and solves across active-column counts.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Code length.
    #[arg(long)]
    n: Option<usize>,
    /// Number of codes.
    #[arg(long)]
    m: Option<usize>,
    /// Free bits per iteration.
    #[arg(long)]
    block_size: Option<usize>,
    /// Cap on codes touched per iteration [default: block-size].
    #[arg(long)]
    max_active_cols: Option<usize>,
    /// Cap on free bits per touched code [default: even split].
    #[arg(long)]
    max_per_col: Option<usize>,
    /// Initial family: random | gold | weil | file:PATH.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration cap per stage.
    #[arg(long)]
    max_iters: Option<u64>,
    /// Wall-clock cap per stage, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Stop stage two after this many non-improving iterations.
    #[arg(long)]
    patience: Option<u64>,
    /// Block solver: enum | bnb | auto.
    #[arg(long)]
    solver: Option<String>,
    /// Output directory for checkpoints and history.
    #[arg(long)]
    out: Option<String>,
    /// Snapshot period in iterations (0 disables periodic snapshots).
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Worker threads for table construction.
    #[arg(long)]
    threads: Option<usize>,
    /// Load a run configuration file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyKind {
    Gold,
    Weil,
    Random,
}

#[derive(Args)]
struct GenerateArgs {
    /// Which construction to generate.
    #[arg(long, value_enum)]
    family: FamilyKind,
    /// Register degree for gold (length 2^d - 1).
    #[arg(long)]
    degree: Option<u32>,
    /// Override the first feedback polynomial (comma-separated exponents).
    #[arg(long, value_delimiter = ',')]
    taps_u: Option<Vec<u32>>,
    /// Override the second feedback polynomial (comma-separated exponents).
    #[arg(long, value_delimiter = ',')]
    taps_v: Option<Vec<u32>>,
    /// Prime code length for weil.
    #[arg(long)]
    p: Option<usize>,
    /// Convention bit at index 0 of the Legendre sequence.
    #[arg(long, default_value_t = 0)]
    legendre_zero_bit: u8,
    /// Code length for random.
    #[arg(long)]
    n: Option<usize>,
    /// Family size for random.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only the ACZ-satisfying codes, preserving order.
    #[arg(long)]
    acz_only: bool,
    /// Output family file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Family file to evaluate.
    #[arg(long = "in")]
    input: PathBuf,
    /// Also write every correlation value as CSV (i,j,k,value).
    #[arg(long)]
    dump_correlations: Option<PathBuf>,
    /// Worker threads for table construction.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Free bits per instance.
    #[arg(long)]
    block_size: usize,
    /// Active-column counts to benchmark.
    #[arg(long, value_delimiter = ',')]
    active_cols_list: Vec<usize>,
    /// Instances per active-column count.
    #[arg(long, default_value_t = 30)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(1);
        }
    }
}

type CmdResult = Result<i32, String>;

fn cmd_run(args: RunArgs) -> CmdResult {
    // Start from the config file (or an empty document), then let explicit
    // flags override, then parse strictly so unknown file keys error out.
    let mut doc: Map<String, Value> = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => Map::new(),
    };
    override_field(&mut doc, "n", &args.n);
    override_field(&mut doc, "m", &args.m);
    override_field(&mut doc, "block_size", &args.block_size);
    override_field(&mut doc, "max_active_cols", &args.max_active_cols);
    override_field(&mut doc, "max_per_col", &args.max_per_col);
    override_field(&mut doc, "init", &args.init);
    override_field(&mut doc, "seed", &args.seed);
    override_field(&mut doc, "max_iters", &args.max_iters);
    override_field(&mut doc, "time_limit", &args.time_limit);
    override_field(&mut doc, "patience", &args.patience);
    override_field(&mut doc, "solver", &args.solver);
    override_field(&mut doc, "out", &args.out);
    override_field(&mut doc, "checkpoint_every", &args.checkpoint_every);
    override_field(&mut doc, "threads", &args.threads);

    let resolved: ResolvedRunConfig =
        serde_json::from_value(Value::Object(doc)).map_err(|e| format!("run configuration: {e}"))?;
    let options = resolved.into_options().map_err(|e| e.to_string())?;
    options
        .config
        .validate(options.n, options.m)
        .map_err(|e| e.to_string())?;

    let history = run(&options).map_err(|e| e.to_string())?;

    println!("stage1_iterations {}", history.stage_one_iterations);
    println!("stage2_iterations {}", history.stage_two_iterations);
    println!("final_isl {}", history.final_objective.isl);
    println!("final_mos {:.6}", history.final_objective.mos);
    println!(
        "final_sidelobe_mos {:.6}",
        history.final_objective.sidelobe_mos
    );
    println!("final_J {}", history.final_j);
    println!("acz_feasible {}", history.acz_feasible);
    if let Some(ckpt) = &options.checkpoint {
        println!("out {}", ckpt.dir.display());
    }
    Ok(if history.acz_feasible { 0 } else { 2 })
}

fn override_field<T: Clone + Into<Value>>(doc: &mut Map<String, Value>, key: &str, value: &Option<T>) {
    if let Some(v) = value {
        doc.insert(key.to_string(), v.clone().into());
    }
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let family = match args.family {
        FamilyKind::Gold => {
            let degree = args.degree.ok_or("gold generation needs --degree")?;
            let spec = match (&args.taps_u, &args.taps_v) {
                (Some(u), Some(v)) => GoldSpec::with_taps(degree, u.clone(), v.clone()),
                (None, None) => GoldSpec::with_default_pair(degree).map_err(|e| e.to_string())?,
                _ => return Err("provide both --taps-u and --taps-v, or neither".into()),
            };
            gold_family(&spec).map_err(|e| e.to_string())?
        }
        FamilyKind::Weil => {
            let p = args.p.ok_or("weil generation needs --p")?;
            let spec = WeilSpec {
                p,
                legendre_zero_bit: args.legendre_zero_bit,
            };
            weil_family(&spec).map_err(|e| e.to_string())?
        }
        FamilyKind::Random => {
            let n = args.n.ok_or("random generation needs --n")?;
            let m = args.m.ok_or("random generation needs --m")?;
            spreadopt_core::random_family(n, m, args.seed).map_err(|e| e.to_string())?
        }
    };

    let family = if args.acz_only {
        family
            .acz_subset()
            .map_err(|_| "no codes satisfy the ACZ property".to_string())?
    } else {
        family
    };
    save_family(&family, &args.out).map_err(|e| e.to_string())?;
    println!("wrote {} codes of length {} to {}", family.m(), family.n(), args.out.display());
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let family = load_family(&args.input).map_err(|e| e.to_string())?;
    let table = spreadopt_core::correlation::build_table_with_threads(&family, args.threads);
    let objective = table.objective();

    println!("n {}", family.n());
    println!("m {}", family.m());
    println!("isl {}", objective.isl);
    println!("mos {:.6}", objective.mos);
    println!("sidelobe_mos {:.6}", objective.sidelobe_mos);
    println!("J {}", table.stage_one_objective());
    println!("acz_count {}", family.acz_count());

    if let Some(path) = &args.dump_correlations {
        let mut out = String::from("i,j,k,value\n");
        for i in 0..family.m() {
            for j in i..family.m() {
                for (k, &value) in table.pair(i, j).iter().enumerate() {
                    out.push_str(&format!("{i},{j},{k},{value}\n"));
                }
            }
        }
        std::fs::write(path, out).map_err(|e| e.to_string())?;
    }
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    if args.active_cols_list.is_empty() {
        return Err("need at least one active-column count".into());
    }
    if args.repeats == 0 {
        return Err("--repeats must be at least 1".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    println!("active_cols,mean_build_s,mean_solve_s,mean_total_s,repeats");
    for &cols in &args.active_cols_list {
        let strategy = SelectionStrategy::new(args.block_size, cols);
        strategy
            .validate(args.n, args.m)
            .map_err(|e| e.to_string())?;

        let mut build_total = 0.0f64;
        let mut solve_total = 0.0f64;
        for _ in 0..args.repeats {
            let family: CodeFamily =
                random_family_with(&mut rng, args.n, args.m).map_err(|e| e.to_string())?;
            let table = build_table(&family);
            let subset =
                select_subset(&mut rng, args.n, args.m, &strategy).map_err(|e| e.to_string())?;

            let started = Instant::now();
            let problem = build_partial(&family, &table, &subset, SubproblemMode::StageTwo)
                .map_err(|e| e.to_string())?;
            build_total += started.elapsed().as_secs_f64();

            // Instances are solved without the ACZ constraints.
            let problem = problem.without_acz();
            let started = Instant::now();
            let result = if args.block_size <= 4 {
                solve_exhaustive(&problem)
            } else {
                solve_branch_and_bound(&problem)
            }
            .map_err(|e| e.to_string())?;
            solve_total += started.elapsed().as_secs_f64();
            std::hint::black_box(result);
        }

        let runs = args.repeats as f64;
        println!(
            "{cols},{:.6},{:.6},{:.6},{}",
            build_total / runs,
            solve_total / runs,
            (build_total + solve_total) / runs,
            args.repeats
        );
    }
    Ok(0)
}
