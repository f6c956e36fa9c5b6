mod bench;
mod solve;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use varispeed::generate::{gen_budget, gen_hardness_gadget, gen_random, gen_random_menu, gen_random_speed, RandomParams, TardinessInstance};
use varispeed::io::{InstanceDocument, MachineModel};
use varispeed::rational::parse_q;
use varispeed::{InstanceKind, Q};

#[derive(Parser, Debug)]
#[command(name = "varispeed", version, about = "Min-sum scheduling with varying speed and energy budgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random instance or a hardness gadget.
    Gen(GenArgs),
    /// Solve an instance file and print a JSON report per budget.
    Solve(solve::SolveArgs),
    /// Evaluate the universal sequence of a continuous instance across budgets as CSV.
    Pareto(solve::ParetoArgs),
    /// Run a benchmark suite and write a deterministic CSV table.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Speed,
    Continuous,
    Discrete,
}

#[derive(clap::Args, Debug)]
struct GenArgs {
    #[arg(short = 'n', long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = GenKind::Speed)]
    kind: GenKind,
    /// Speed segments for `speed` instances.
    #[arg(long, default_value_t = 3)]
    segments: usize,
    /// Power exponent for `continuous`, `discrete` and gadget instances.
    #[arg(long, default_value = "2")]
    alpha: String,
    /// Menu size for `discrete` instances.
    #[arg(long, default_value_t = 2)]
    kappa: usize,
    /// Energy budget; `discrete` instances default to a seeded feasible budget.
    #[arg(long)]
    budget: Option<String>,
    /// Largest integer release date (continuous instances only).
    #[arg(long)]
    releases: Option<u32>,
    /// Emit the two-speed hardness gadget of a common-due-date tardiness instance.
    #[arg(long)]
    gadget: bool,
    #[arg(long)]
    due: Option<u64>,
    /// Comma-separated integer volumes of the tardiness instance (random when omitted).
    #[arg(long, value_delimiter = ',')]
    volumes: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    weights: Vec<u64>,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(varispeed::Error),
    Invariant(String),
}

impl From<varispeed::Error> for CliError {
    fn from(e: varispeed::Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

impl CliError {
    fn exit(&self) -> ExitCode {
        let (kind, code, message) = match self {
            CliError::Usage(m) => ("usage", 1, m.clone()),
            CliError::Invariant(m) => ("invariant_violation", 3, m.clone()),
            CliError::Solver(e) => match e {
                varispeed::Error::InfeasibleBudget(_) => ("infeasible_budget", 2, e.to_string()),
                varispeed::Error::InvariantViolation(_) => ("invariant_violation", 3, e.to_string()),
                _ => ("usage", 1, e.to_string()),
            },
        };
        let report = ErrorReport { error: kind, message };
        eprintln!("{}", serde_json::to_string(&report).expect("error reports serialize"));
        ExitCode::from(code)
    }
}

pub fn parse_rational(s: &str, what: &str) -> Result<Q, CliError> {
    parse_q(s).map_err(|_| CliError::Usage(format!("cannot parse {what} {s:?}")))
}

pub fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    if args.n == 0 && !(args.gadget && !args.volumes.is_empty()) {
        return Err(CliError::Usage("-n must be positive".into()));
    }
    let alpha = parse_rational(&args.alpha, "alpha")?;
    let budget = args.budget.as_deref().map(|b| parse_rational(b, "budget")).transpose()?;
    let doc = if args.gadget {
        let due = args.due.ok_or_else(|| CliError::Usage("--gadget needs --due".into()))?;
        let (volumes, weights) = if args.volumes.is_empty() {
            let inst = gen_random(args.n, &RandomParams::default(), args.seed)?;
            let int = |x: &Q| -> u64 { x.to_integer().try_into().unwrap_or(1) };
            (inst.jobs().iter().map(|j| int(&j.volume)).collect(), inst.jobs().iter().map(|j| int(&j.weight)).collect())
        } else {
            (args.volumes.clone(), args.weights.clone())
        };
        let g = gen_hardness_gadget(&TardinessInstance { volumes, weights, due }, &alpha)?;
        InstanceDocument { jobs: g.instance.jobs().to_vec(), model: MachineModel::Menu { menu: g.menu }, budget: Some(g.budget) }
    } else {
        match args.kind {
            GenKind::Speed => {
                if args.releases.is_some() {
                    return Err(CliError::Usage("speed instances have no release dates".into()));
                }
                let inst = gen_random(args.n, &RandomParams::default(), args.seed)?;
                let speed = gen_random_speed(args.segments, args.seed)?;
                InstanceDocument { jobs: inst.jobs().to_vec(), model: MachineModel::Speed { speed }, budget }
            }
            GenKind::Continuous => {
                let p = RandomParams {
                    release: args.releases.map(|r| (0, r)),
                    kind: InstanceKind::ContinuousEnergy,
                    ..Default::default()
                };
                let inst = gen_random(args.n, &p, args.seed)?;
                InstanceDocument {
                    jobs: inst.jobs().to_vec(),
                    model: MachineModel::Alpha { alpha },
                    budget: Some(budget.unwrap_or_else(|| Q::from_integer(1.into()))),
                }
            }
            GenKind::Discrete => {
                if args.releases.is_some() {
                    return Err(CliError::Usage("discrete instances have no release dates".into()));
                }
                if !alpha.is_integer() {
                    return Err(CliError::Usage("discrete menus need an integer alpha".into()));
                }
                let a: u32 = alpha.to_integer().try_into().map_err(|_| CliError::Usage("alpha too large".into()))?;
                let p = RandomParams { kind: InstanceKind::DiscreteEnergy, ..Default::default() };
                let inst = gen_random(args.n, &p, args.seed)?;
                let menu = gen_random_menu(args.kappa, a, args.seed)?;
                let b = budget.unwrap_or_else(|| gen_budget(&inst, &menu, args.seed));
                InstanceDocument { jobs: inst.jobs().to_vec(), model: MachineModel::Menu { menu }, budget: Some(b) }
            }
        }
    };
    let mut text = doc.to_json();
    text.push('\n');
    write_output(args.output.as_ref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => solve::cmd_solve(a),
        Command::Pareto(a) => solve::cmd_pareto(a),
        Command::Bench(a) => bench::cmd_bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.exit(),
    }
}
