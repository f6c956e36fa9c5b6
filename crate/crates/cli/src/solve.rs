use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};
use varispeed::continuous::{assignment_cost, default_budgets, pareto, split_with_reserve, universal_sequence};
use varispeed::discrete::fptas::{fptas, FptasConfig};
use varispeed::discrete::ptas::{ptas as discrete_ptas, DiscretePtasConfig};
use varispeed::io::{InstanceDocument, MachineModel};
use varispeed::oracle::{exact_continuous, exact_discrete, exact_given_speed, OracleConfig};
use varispeed::parallel::{solve as solve_parallel, timeline_csv, ParallelReport};
use varispeed::ptas::{solve as solve_ptas, PtasConfig};
use varispeed::rational::{format_q, to_f64};
use varispeed::{DiscreteSpeedMenu, Error, JobId, Q};

use crate::{parse_rational, write_output, CliError};

/// Lowest admissible oracle ratio.
pub const RATIO_FLOOR: f64 = 1.0 - 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Ptas,
    Continuous,
    DiscretePtas,
    Fptas,
    Parallel,
    Exact,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Ptas => "ptas",
            Algo::Continuous => "continuous",
            Algo::DiscretePtas => "discrete-ptas",
            Algo::Fptas => "fptas",
            Algo::Parallel => "parallel",
            Algo::Exact => "exact",
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct SolveArgs {
    /// Instance JSON file.
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    #[arg(long, default_value = "1/5")]
    pub eps: String,
    /// Energy budget overriding the instance file.
    #[arg(long)]
    pub budget: Option<String>,
    /// Comma-separated budgets; one report per budget.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Vec<String>,
    /// Machine count for `parallel`.
    #[arg(short = 'm', long, default_value_t = 1)]
    pub machines: usize,
    /// Also run the exhaustive oracle when the instance is small enough.
    #[arg(long)]
    pub compare_oracle: bool,
    /// Append one CSV row per report to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the machine timeline of a `parallel` run as CSV.
    #[arg(long)]
    pub timeline: Option<PathBuf>,
    /// Seed recorded in the report.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(clap::Args, Debug)]
pub struct ParetoArgs {
    pub instance: PathBuf,
    #[arg(long, default_value = "1/5")]
    pub eps: String,
    /// Comma-separated budgets (default `2^-8 .. 2^7`).
    #[arg(long, value_delimiter = ',')]
    pub budgets: Vec<String>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub eps: String,
    pub alpha: Option<String>,
    pub menu: Option<DiscreteSpeedMenu>,
    pub budget: Option<String>,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub instance_hash: String,
    pub algorithm: Algo,
    pub params: Params,
    pub permutation: Vec<JobId>,
    pub cost: f64,
    /// Exact cost as `p/q` when the algorithm evaluates it in rational arithmetic.
    pub cost_exact: Option<String>,
    pub energy: Option<f64>,
    pub energy_exact: Option<String>,
    pub certified_bound: Option<f64>,
    pub oracle_cost: Option<f64>,
    pub ratio: Option<f64>,
    pub wall_ms: f64,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallel: Option<ParallelReport>,
}

pub struct Outcome {
    pub permutation: Vec<JobId>,
    pub cost: f64,
    pub cost_exact: Option<Q>,
    pub energy: Option<f64>,
    pub energy_exact: Option<Q>,
    pub certified_bound: Option<f64>,
    pub parallel: Option<ParallelReport>,
    pub timeline: Option<String>,
}

impl Outcome {
    fn exact(permutation: Vec<JobId>, cost: Q, energy: Option<Q>) -> Self {
        Outcome {
            permutation,
            cost: to_f64(&cost),
            cost_exact: Some(cost),
            energy: energy.as_ref().map(to_f64),
            energy_exact: energy,
            certified_bound: None,
            parallel: None,
            timeline: None,
        }
    }
}

pub fn instance_hash(doc: &InstanceDocument) -> String {
    let canonical = serde_json::to_string(doc).expect("instance documents serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn need_budget(budget: Option<&Q>, algo: Algo) -> Result<Q, CliError> {
    budget
        .cloned()
        .ok_or_else(|| CliError::Usage(format!("{} needs an energy budget", algo.name())))
}

fn positive_f64(budget: &Q) -> Result<f64, CliError> {
    let b = to_f64(budget);
    if !(b > 0.0 && b.is_finite()) {
        return Err(CliError::Usage(format!("budget must be positive, got {}", format_q(budget))));
    }
    Ok(b)
}

fn wrong_model(algo: Algo, want: &str) -> CliError {
    CliError::Usage(format!("{} needs an instance with a {want}", algo.name()))
}

/// Runs one algorithm on one budget.
pub fn run(doc: &InstanceDocument, algo: Algo, eps: &Q, budget: Option<&Q>, m: usize) -> Result<Outcome, CliError> {
    let inst = doc.instance()?;
    match (algo, &doc.model) {
        (Algo::Ptas, MachineModel::Speed { speed }) => {
            let sol = solve_ptas(&inst, speed, &PtasConfig::new(eps.clone()))?;
            Ok(Outcome::exact(sol.order, sol.cost, None))
        }
        (Algo::Ptas, _) => Err(wrong_model(algo, "speed profile")),
        (Algo::Continuous, MachineModel::Alpha { .. }) => {
            let law = doc.power_law()?;
            let b = positive_f64(&need_budget(budget, algo)?)?;
            let order = universal_sequence(&inst, &law, eps)?;
            let split = split_with_reserve(&inst, &order, &law, b, to_f64(eps))?;
            let cost = assignment_cost(&inst, &order, &law, &split.assignment)?;
            Ok(Outcome {
                permutation: order,
                cost,
                cost_exact: None,
                energy: Some(split.assignment.total()),
                energy_exact: None,
                certified_bound: None,
                parallel: None,
                timeline: None,
            })
        }
        (Algo::Continuous, _) => Err(wrong_model(algo, "power exponent alpha")),
        (Algo::DiscretePtas, MachineModel::Menu { menu }) => {
            let b = need_budget(budget, algo)?;
            let (sol, _) = discrete_ptas(&inst, menu, &b, &DiscretePtasConfig::new(eps.clone()))?;
            Ok(Outcome::exact(sol.solution.order, sol.solution.cost, Some(sol.solution.energy)))
        }
        (Algo::Fptas, MachineModel::Menu { menu }) => {
            let b = need_budget(budget, algo)?;
            let sol = fptas(&inst, menu, &b, &FptasConfig::new(eps.clone()))?;
            let s = sol.result.solution;
            Ok(Outcome::exact(s.order, s.cost, Some(s.energy)))
        }
        (Algo::DiscretePtas | Algo::Fptas, _) => Err(wrong_model(algo, "speed menu")),
        (Algo::Parallel, MachineModel::Alpha { .. }) => {
            let law = doc.power_law()?;
            let b = positive_f64(&need_budget(budget, algo)?)?;
            let sol = solve_parallel(&inst, m, &law, b, eps)?;
            Ok(Outcome {
                permutation: sol.order.clone(),
                cost: sol.cost,
                cost_exact: None,
                energy: Some(sol.energies.total()),
                energy_exact: None,
                certified_bound: Some(sol.report.certified_bound),
                timeline: Some(timeline_csv(&sol.schedule)),
                parallel: Some(sol.report),
            })
        }
        (Algo::Parallel, _) => Err(wrong_model(algo, "power exponent alpha")),
        (Algo::Exact, _) => {
            let cfg = OracleConfig::from_env();
            match &doc.model {
                MachineModel::Speed { speed } => {
                    let ex = exact_given_speed(&inst, speed, &cfg)?;
                    Ok(Outcome::exact(ex.best_permutations[0].clone(), ex.cost, None))
                }
                MachineModel::Alpha { .. } => {
                    let b = positive_f64(&need_budget(budget, algo)?)?;
                    let ex = exact_continuous(&inst, &doc.power_law()?, b, &cfg)?;
                    Ok(Outcome {
                        permutation: ex.best_permutations[0].clone(),
                        cost: ex.cost,
                        cost_exact: None,
                        energy: Some(b),
                        energy_exact: None,
                        certified_bound: None,
                        parallel: None,
                        timeline: None,
                    })
                }
                MachineModel::Menu { menu } => {
                    let b = need_budget(budget, algo)?;
                    let ex = exact_discrete(&inst, menu, &b, &cfg)?;
                    let order = ex.best_permutations[0].clone();
                    let sol = varispeed::oracle::discrete_order_optimum(&inst, &order, menu, &b)?;
                    Ok(Outcome::exact(order, ex.cost, Some(sol.energy)))
                }
            }
        }
    }
}

/// Exhaustive optimum matching `algo`, or `None` when no oracle applies or the instance is too large.
pub fn oracle_cost(doc: &InstanceDocument, algo: Algo, budget: Option<&Q>, m: usize) -> Result<Option<f64>, CliError> {
    if algo == Algo::Parallel && m > 1 {
        return Ok(None);
    }
    let inst = doc.instance()?;
    if algo == Algo::Parallel && inst.jobs().iter().any(|j| j.release != Q::from_integer(0.into())) {
        return Ok(None);
    }
    let cfg = OracleConfig::from_env();
    let res = match &doc.model {
        MachineModel::Speed { speed } => exact_given_speed(&inst, speed, &cfg).map(|e| to_f64(&e.cost)),
        MachineModel::Alpha { .. } => {
            let b = positive_f64(&need_budget(budget, algo)?)?;
            exact_continuous(&inst, &doc.power_law()?, b, &cfg).map(|e| e.cost)
        }
        MachineModel::Menu { menu } => exact_discrete(&inst, menu, &need_budget(budget, algo)?, &cfg).map(|e| to_f64(&e.cost)),
    };
    match res {
        Ok(c) => Ok(Some(c)),
        Err(Error::InstanceTooLarge { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Ratio of `cost` to `oracle`, treating two zero costs as ratio one.
pub fn ratio(cost: f64, oracle: f64) -> f64 {
    if oracle == 0.0 {
        if cost == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        cost / oracle
    }
}

fn read_doc(path: &PathBuf) -> Result<InstanceDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(InstanceDocument::from_json(&text)?)
}

fn budgets_of(list: &[String], single: Option<&String>, doc: &InstanceDocument) -> Result<Vec<Option<Q>>, CliError> {
    if !list.is_empty() {
        return list.iter().map(|b| parse_rational(b, "budget").map(Some)).collect();
    }
    match single {
        Some(b) => Ok(vec![Some(parse_rational(b, "budget")?)]),
        None => Ok(vec![doc.budget.clone()]),
    }
}

pub const SOLVE_CSV_HEADER: &str =
    "instance_hash,algorithm,n,eps,budget,m,cost,energy,certified_bound,oracle_cost,ratio,wall_ms,seed";

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let doc = read_doc(&args.instance)?;
    let eps = parse_rational(&args.eps, "eps")?;
    if args.machines == 0 {
        return Err(CliError::Usage("-m must be positive".into()));
    }
    let hash = instance_hash(&doc);
    let n = doc.jobs.len();
    let mut rows = Vec::new();
    for budget in budgets_of(&args.budgets, args.budget.as_ref(), &doc)? {
        let start = Instant::now();
        let out = run(&doc, args.algo, &eps, budget.as_ref(), args.machines)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        if !out.cost.is_finite() || out.energy.map_or(false, |e| !e.is_finite()) {
            return Err(CliError::Invariant(format!("non-finite cost {} or energy {:?}", out.cost, out.energy)));
        }
        let oracle = if args.compare_oracle { oracle_cost(&doc, args.algo, budget.as_ref(), args.machines)? } else { None };
        let r = oracle.map(|o| ratio(out.cost, o));
        if let Some(r) = r {
            if r < RATIO_FLOOR {
                return Err(CliError::Invariant(format!("cost {} is below the exact optimum {:?}", out.cost, oracle)));
            }
        }
        if let (Some(path), Some(tl)) = (&args.timeline, &out.timeline) {
            fs::write(path, tl)?;
        }
        let report = SolveReport {
            instance_hash: hash.clone(),
            algorithm: args.algo,
            params: Params {
                eps: format_q(&eps),
                alpha: match &doc.model {
                    MachineModel::Alpha { alpha } => Some(format_q(alpha)),
                    _ => None,
                },
                menu: match &doc.model {
                    MachineModel::Menu { menu } => Some(menu.clone()),
                    _ => None,
                },
                budget: budget.as_ref().map(format_q),
                m: (args.algo == Algo::Parallel).then_some(args.machines),
            },
            permutation: out.permutation,
            cost: out.cost,
            cost_exact: out.cost_exact.as_ref().map(format_q),
            energy: out.energy,
            energy_exact: out.energy_exact.as_ref().map(format_q),
            certified_bound: out.certified_bound,
            oracle_cost: oracle,
            ratio: r,
            wall_ms,
            seed: args.seed,
            parallel: out.parallel,
        };
        println!("{}", serde_json::to_string(&report).expect("reports serialize"));
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            report.instance_hash,
            args.algo.name(),
            n,
            report.params.eps,
            report.params.budget.clone().unwrap_or_default(),
            args.machines,
            report.cost,
            opt(report.energy),
            opt(report.certified_bound),
            opt(report.oracle_cost),
            opt(report.ratio),
            report.wall_ms,
            report.seed.map(|s| s.to_string()).unwrap_or_default()
        ));
    }
    if let Some(path) = &args.csv {
        let fresh = fs::metadata(path).map_or(true, |m| m.len() == 0);
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(f, "{SOLVE_CSV_HEADER}")?;
        }
        for r in rows {
            writeln!(f, "{r}")?;
        }
    }
    Ok(())
}

pub fn cmd_pareto(args: &ParetoArgs) -> Result<(), CliError> {
    let doc = read_doc(&args.instance)?;
    let law = doc.power_law().map_err(|_| CliError::Usage("pareto needs an instance with alpha".into()))?;
    let eps = parse_rational(&args.eps, "eps")?;
    let budgets: Vec<f64> = if args.budgets.is_empty() {
        default_budgets()
    } else {
        args.budgets
            .iter()
            .map(|b| parse_rational(b, "budget").and_then(|q| positive_f64(&q)))
            .collect::<Result<_, _>>()?
    };
    let inst = doc.instance()?;
    let (curve, points) = pareto(&inst, &law, &eps, &budgets)?;
    let order: Vec<String> = curve.order.iter().map(|id| id.to_string()).collect();
    let mut out = String::from("budget,cost,curve_cost,energy_used,order\n");
    for p in &points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.budget,
            p.cost,
            curve.cost(p.budget),
            p.split.assignment.total(),
            order.join(" ")
        ));
    }
    write_output(args.output.as_ref(), &out)
}
