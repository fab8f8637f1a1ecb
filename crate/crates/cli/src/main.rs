//! `domtest` — two-sample bivariate dominance tests from the command line.
//!
//! `domtest run` ingests a CSV of (treatment, change, level) households,
//! tests the configured dominance criteria in one or both directions with a
//! contact-set bootstrap, and writes a JSON report. `domtest mc` runs a
//! Monte Carlo size/power scenario from a JSON spec and writes rejection
//! rates as CSV.
//!
//! Exit status reflects tool success only: 0 on success regardless of test
//! outcomes, 2 on usage errors, 3 on data errors.

mod grids;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use domtest_core::validation::{self, GeneratorKind, ScenarioSpec};
use domtest_core::{
    build_grid, evaluate_g, load_sample_pair, load_samples, pooled_support, run_suite, Criterion,
    CsvSchema, DirectionChoice, EdfSummary, Error as CoreError, PolicySample, RunConfig,
};

#[derive(Parser)]
#[command(name = "domtest", version, about = "Bivariate dominance tests for two-arm outcome data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run dominance tests on a two-arm dataset and write a JSON report.
    Run(RunArgs),
    /// Run a Monte Carlo scenario (size or power study) from a JSON spec.
    Mc(McArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemaArg {
    Auto,
    Xz,
    Prepost,
}

impl From<SchemaArg> for CsvSchema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Auto => CsvSchema::Auto,
            SchemaArg::Xz => CsvSchema::Xz,
            SchemaArg::Prepost => CsvSchema::PrePost,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirArg {
    Ab,
    Ba,
    Both,
}

impl From<DirArg> for DirectionChoice {
    fn from(d: DirArg) -> Self {
        match d {
            DirArg::Ab => DirectionChoice::AOverB,
            DirArg::Ba => DirectionChoice::BOverA,
            DirArg::Both => DirectionChoice::Both,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Single CSV with a `treatment` column holding exactly two labels.
    #[arg(long, conflicts_with_all = ["input_a", "input_b"])]
    input: Option<PathBuf>,
    /// Arm A as its own CSV (requires --input-b).
    #[arg(long, requires = "input_b")]
    input_a: Option<PathBuf>,
    /// Arm B as its own CSV (requires --input-a).
    #[arg(long, requires = "input_a")]
    input_b: Option<PathBuf>,
    /// Column layout: xz (treatment,x,z) or prepost (treatment,pre_income,post_income).
    #[arg(long, value_enum, default_value_t = SchemaArg::Auto)]
    schema: SchemaArg,
    /// Treatment label to use as arm A (default: first label encountered).
    #[arg(long)]
    label_a: Option<String>,
    /// Comma-separated criteria (lasbd,lasbd2,iasd,iasd2,liasd,liasd2,kr) or `all`.
    #[arg(long, default_value = "all")]
    criteria: String,
    /// Hypothesis direction(s): ab tests A over B, ba the reverse.
    #[arg(long, value_enum, default_value_t = DirArg::Both)]
    direction: DirArg,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 999)]
    reps: usize,
    /// Grid points for gains/losses.
    #[arg(long, default_value_t = 100)]
    grid_x: usize,
    /// Grid points for levels.
    #[arg(long, default_value_t = 50)]
    grid_z: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tie-break constant added to bootstrap statistics in the p-value.
    #[arg(long, default_value_t = 1e-6)]
    eta: f64,
    /// Nominal level echoed into the report.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Report path.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// If set, write one CSV per test-function coordinate under this prefix.
    #[arg(long)]
    emit_grids: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct McArgs {
    /// Scenario spec (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output CSV of rejection rates.
    #[arg(long, default_value = "mc_results.csv")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Mc(args) => cmd_mc(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn parse_criteria(spec: &str) -> Result<Vec<Criterion>, CliError> {
    let mut out = Vec::new();
    for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if token.eq_ignore_ascii_case("all") {
            for c in Criterion::ALL {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            continue;
        }
        let c: Criterion = token
            .parse()
            .map_err(|e: CoreError| CliError::Usage(e.to_string()))?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no criteria selected".into()));
    }
    Ok(out)
}

fn load_input(
    args: &RunArgs,
) -> Result<(PolicySample, PolicySample, Vec<PathBuf>), CliError> {
    let schema: CsvSchema = args.schema.into();
    match (&args.input, &args.input_a, &args.input_b) {
        (Some(path), None, None) => {
            let (a, b) = load_samples(path, schema, args.label_a.as_deref())?;
            Ok((a, b, vec![path.clone()]))
        }
        (None, Some(pa), Some(pb)) => {
            let (a, b) = load_sample_pair(pa, pb, schema, args.label_a.as_deref(), None)?;
            Ok((a, b, vec![pa.clone(), pb.clone()]))
        }
        _ => Err(CliError::Usage(
            "provide either --input FILE or both --input-a and --input-b".into(),
        )),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    init_threads(args.threads);
    let criteria = parse_criteria(&args.criteria)?;
    let (a, b, paths) = load_input(&args)?;
    let cfg = RunConfig {
        criteria,
        direction: args.direction.into(),
        replicates: args.reps,
        seed: args.seed,
        eta: args.eta,
        grid_x: args.grid_x,
        grid_z: args.grid_z,
        alpha: args.alpha,
        ..RunConfig::default()
    };
    cfg.validate().map_err(CliError::from)?;

    let path_refs: Vec<&std::path::Path> = paths.iter().map(PathBuf::as_path).collect();
    let digest = report::input_digest(&path_refs)?;

    let started = Instant::now();
    let results = run_suite(&a, &b, &cfg)?;
    let timing_seconds = started.elapsed().as_secs_f64();

    for r in &results {
        println!(
            "{:<12} {:<8} T_n = {:<12.6} p = {:.3}",
            r.criterion.to_string(),
            r.direction.to_string(),
            r.t_n,
            r.p_value
        );
    }

    if let Some(prefix) = &args.emit_grids {
        let support = pooled_support(&a, &b);
        let grid = build_grid(&support, cfg.grid_x, cfg.grid_z)?;
        let edf_a = EdfSummary::new(&a, &support)?;
        let edf_b = EdfSummary::new(&b, &support)?;
        for &kind in &cfg.criteria {
            let fields = evaluate_g(kind, &edf_a, &edf_b, &grid)?;
            grids::emit_grids(&fields, &grid, prefix, kind)?;
        }
    }

    let report = report::Report {
        tool: "domtest".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        input_digest: digest,
        label_a: a.label().to_string(),
        label_b: b.label().to_string(),
        n_a: a.n(),
        n_b: b.n(),
        config: cfg,
        results,
        timing_seconds,
    };
    std::fs::write(&args.out, report.to_json()?)
        .map_err(|e| CliError::Data(format!("writing {}: {e}", args.out.display())))?;
    eprintln!("report written to {}", args.out.display());
    Ok(())
}

fn cmd_mc(args: McArgs) -> Result<(), CliError> {
    init_threads(args.threads);
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Data(format!("reading {}: {e}", args.scenario.display())))?;
    let spec: ScenarioSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("parsing {}: {e}", args.scenario.display())))?;
    let outcomes = if spec.generator == GeneratorKind::NullIdentical {
        validation::mc_size(&spec, args.seed)?
    } else {
        validation::mc_power(&spec, args.seed)?
    };
    for o in &outcomes {
        println!(
            "{:<12} {:<8} n = {:<6} rejection rate = {:.3} (se {:.3})",
            o.criterion.to_string(),
            o.direction.to_string(),
            o.n,
            o.rejection_rate,
            o.mc_se
        );
    }
    let file = std::fs::File::create(&args.out)
        .map_err(|e| CliError::Data(format!("creating {}: {e}", args.out.display())))?;
    validation::write_mc_csv(&outcomes, file)?;
    eprintln!("results written to {}", args.out.display());
    Ok(())
}
