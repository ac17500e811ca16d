use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sparsequad::datagen::{self, DataGenConfig};
use sparsequad::harness::{self, BenchOptions, Lambda1Spec, Scenario};
use sparsequad::io;
use sparsequad::solver::{solve_path, solve_with, Grid};
use sparsequad::{BaselineConfig, BaselineMethod, Certify, Family, Method, PenaltySpec, ProblemData, SolverConfig};

#[derive(Parser)]
#[command(name = "sparsequad", version, about = "Worst-case quadratic penalty active-set solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one penalized least-squares problem.
    Solve(SolveArgs),
    /// Solve a warm-started (lambda1, lambda2) grid.
    Path(PathArgs),
    /// Generate a synthetic dataset.
    Datagen(DatagenArgs),
    /// Run a benchmark scenario and write one CSV row per cell.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    Enet,
    Grpinf,
}

impl PenaltyArg {
    fn family(self) -> Family {
        match self {
            PenaltyArg::Enet => Family::ElasticNet,
            PenaltyArg::Grpinf => Family::GroupLinfOne,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Quadratic,
    Coordinate,
    Proximal,
}

impl MethodArg {
    fn method(self, tau: f64) -> Method {
        match self {
            MethodArg::Quadratic => Method::Quadratic,
            MethodArg::Coordinate => Method::Baseline(BaselineConfig::benchmark(BaselineMethod::Coordinate, tau)),
            MethodArg::Proximal => Method::Baseline(BaselineConfig::benchmark(BaselineMethod::Proximal, tau)),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Fig2,
    Fig3,
    Accuracy,
    Custom,
}

#[derive(Args)]
struct ProblemArgs {
    /// CSV with y in the first column and X in the others; header optional.
    #[arg(long)]
    input: PathBuf,
    /// JSON array of 1-based column index arrays (group penalty only).
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "enet")]
    penalty: PenaltyArg,
    #[arg(long, default_value_t = 1e-2)]
    tau: f64,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long, value_enum, default_value = "quadratic")]
    method: MethodArg,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    lambda1: f64,
    #[arg(long)]
    lambda2: f64,
    /// none, final, or every-k:<k>
    #[arg(long, default_value = "none")]
    certify: String,
    /// Output JSON file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// auto:<m> or a comma-separated list.
    #[arg(long, default_value = "auto:50")]
    lambda1_grid: String,
    #[arg(long, default_value = "auto:50")]
    lambda2_grid: String,
    #[arg(long)]
    output_csv: PathBuf,
}

#[derive(Args)]
struct DatagenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 0.8)]
    r2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "quadratic,coordinate,proximal")]
    methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-2)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
    /// Custom scenario only.
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    p: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 30)]
    s: usize,
    #[arg(long, default_value_t = 0.8)]
    r2: f64,
    #[arg(long, default_value = "auto:20")]
    lambda1_grid: String,
    #[arg(long, default_value = "auto:5")]
    lambda2_grid: String,
}

fn parse_certify(s: &str) -> Result<Certify> {
    match s {
        "none" => Ok(Certify::None),
        "final" => Ok(Certify::Final),
        _ => match s.strip_prefix("every-k:").map(str::parse::<usize>) {
            Some(Ok(k)) if k > 0 => Ok(Certify::EveryK(k)),
            _ => bail!("--certify expects none, final or every-k:<k>, got {s:?}"),
        },
    }
}

fn load(args: &ProblemArgs) -> Result<ProblemData> {
    let (x, y) = io::read_problem_csv(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let mut problem = ProblemData::new(x, y)?;
    match (args.penalty, &args.groups) {
        (PenaltyArg::Grpinf, Some(g)) => {
            let groups = io::read_groups_json(g, problem.p()).with_context(|| format!("reading {}", g.display()))?;
            problem = problem.with_groups(groups)?;
        }
        (PenaltyArg::Grpinf, None) => bail!("--penalty grpinf needs --groups"),
        (PenaltyArg::Enet, Some(_)) => bail!("--groups is only used with --penalty grpinf"),
        (PenaltyArg::Enet, None) => {}
    }
    Ok(problem)
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let problem = load(&args.problem)?;
    let pen = PenaltySpec::new(args.problem.penalty.family(), args.lambda1, args.lambda2)?;
    let config = SolverConfig {
        tau: args.problem.tau,
        max_outer: args.problem.max_outer,
        certify: parse_certify(&args.certify)?,
        ..SolverConfig::default()
    };
    let sol = solve_with(&args.problem.method.method(args.problem.tau), &problem, &pen, &config)?;
    let certificates: Vec<_> = sol
        .certificates
        .iter()
        .map(|c| {
            json!({
                "iter": c.iter,
                "method": c.certificate.method.as_str(),
                "lower_bound": c.certificate.lower_bound,
                "gap": c.certificate.gap,
            })
        })
        .collect();
    let out = json!({
        "beta": sol.beta,
        "objective": {
            "user": sol.objective.user_value,
            "minimax": sol.objective.minimax_value,
        },
        "kkt_residual": sol.kkt_residual,
        "iterations": sol.n_outer,
        "wall_time_s": sol.wall_time,
        "status": sol.status.as_str(),
        "certificates": certificates,
    });
    write_json(args.output.as_deref(), &out)
}

fn run_path(args: PathArgs) -> Result<()> {
    let problem = load(&args.problem)?;
    let config = SolverConfig { tau: args.problem.tau, max_outer: args.problem.max_outer, ..SolverConfig::default() };
    let path = solve_path(
        &problem,
        args.problem.penalty.family(),
        &Grid::parse(&args.lambda1_grid)?,
        &Grid::parse(&args.lambda2_grid)?,
        &config,
        &args.problem.method.method(args.problem.tau),
    )?;
    let file = File::create(&args.output_csv).with_context(|| format!("creating {}", args.output_csv.display()))?;
    let mut w = BufWriter::new(file);
    use std::io::Write;
    writeln!(w, "lambda1,lambda2,objective,n_active,kkt_residual,n_outer,wall_time_s")?;
    let mut failures = 0;
    for cell in &path.cells {
        match &cell.result {
            Ok(s) => writeln!(
                w,
                "{:?},{:?},{:?},{},{:?},{},{:?}",
                cell.lambda1, cell.lambda2, s.objective.user_value, s.n_active(), s.kkt_residual, s.n_outer, s.wall_time
            )?,
            Err(e) => {
                failures += 1;
                eprintln!("lambda1 = {}, lambda2 = {}: {e}", cell.lambda1, cell.lambda2);
                writeln!(w, "{:?},{:?},NaN,0,NaN,0,NaN", cell.lambda1, cell.lambda2)?;
            }
        }
    }
    w.flush()?;
    if failures > 0 {
        eprintln!("{failures} of {} cells failed", path.cells.len());
    }
    Ok(())
}

fn run_datagen(args: DatagenArgs) -> Result<()> {
    let cfg = DataGenConfig { n: args.n, p: args.p, rho: args.rho, s: args.s, r_squared: args.r2, seed: args.seed };
    let data = datagen::generate(&cfg)?;
    datagen::write_dataset(&args.out, &cfg, &data)?;
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let scenario = match args.scenario {
        ScenarioArg::Fig2 => Scenario::fig2(),
        ScenarioArg::Fig3 => Scenario::fig3(),
        ScenarioArg::Accuracy => Scenario::accuracy(),
        ScenarioArg::Custom => {
            let data = DataGenConfig { n: args.n, p: args.p, rho: args.rho, s: args.s, r_squared: args.r2, seed: 0 };
            let l1 = match Grid::parse(&args.lambda1_grid)? {
                Grid::Auto(m) => Lambda1Spec::Auto(m),
                Grid::Values(v) => Lambda1Spec::Values(v),
            };
            Scenario::custom(data, l1, Grid::parse(&args.lambda2_grid)?)
        }
    };
    let options = BenchOptions {
        methods: args.methods.iter().map(|m| m.method(args.tau)).collect(),
        reps: args.reps,
        base_seed: args.seed,
        tau: args.tau,
    };
    let records = harness::run(&scenario, &options)?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    harness::write_records(BufWriter::new(file), &records)?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve(a) => run_solve(a),
        Command::Path(a) => run_path(a),
        Command::Datagen(a) => run_datagen(a),
        Command::Bench(a) => run_bench(a),
    }
}
