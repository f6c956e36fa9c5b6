use std::path::PathBuf;

use rayon::prelude::*;
use varispeed::generate::{gen_budget, gen_random, gen_random_menu, gen_random_speed, RandomParams};
use varispeed::io::{InstanceDocument, MachineModel};
use varispeed::rational::{format_q, qi};
use varispeed::{InstanceKind, Q};

use crate::solve::{instance_hash, oracle_cost, ratio, run, Algo};
use crate::{parse_rational, write_output, CliError};

pub const BENCH_CSV_HEADER: &str = "algorithm,n,eps,seed,instance_hash,cost,oracle_cost,ratio";
pub const SUMMARY_CSV_HEADER: &str = "algorithm,n,eps,count,median_ratio,max_ratio";

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ptas,continuous,discrete-ptas,fptas,parallel")]
    pub algos: Vec<Algo>,
    #[arg(long, value_delimiter = ',', default_value = "4,6")]
    pub sizes: Vec<usize>,
    /// Number of seeds per cell; seeds are `0..seeds`.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1")]
    pub eps: Vec<String>,
    /// Power exponent of continuous, discrete and parallel instances.
    #[arg(long, default_value_t = 2)]
    pub alpha: u32,
    /// Machines for `parallel` rows.
    #[arg(short = 'm', long, default_value_t = 2)]
    pub machines: usize,
    /// Per-row CSV (stdout when omitted).
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
    /// Per-cell median and maximum ratio CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Seeded instance document for one benchmark cell.
pub fn bench_instance(algo: Algo, n: usize, seed: u64, alpha: u32) -> Result<InstanceDocument, CliError> {
    let a = qi(alpha as i64);
    let doc = match algo {
        Algo::Ptas | Algo::Exact => {
            let inst = gen_random(n, &RandomParams::default(), seed)?;
            InstanceDocument { jobs: inst.jobs().to_vec(), model: MachineModel::Speed { speed: gen_random_speed(3, seed)? }, budget: None }
        }
        Algo::Continuous => {
            let p = RandomParams { kind: InstanceKind::ContinuousEnergy, ..Default::default() };
            let inst = gen_random(n, &p, seed)?;
            InstanceDocument { jobs: inst.jobs().to_vec(), model: MachineModel::Alpha { alpha: a }, budget: Some(qi(1)) }
        }
        Algo::DiscretePtas | Algo::Fptas => {
            let p = RandomParams { kind: InstanceKind::DiscreteEnergy, ..Default::default() };
            let inst = gen_random(n, &p, seed)?;
            let menu = gen_random_menu(2, alpha, seed)?;
            let budget = gen_budget(&inst, &menu, seed);
            InstanceDocument { jobs: inst.jobs().to_vec(), model: MachineModel::Menu { menu }, budget: Some(budget) }
        }
        Algo::Parallel => {
            let p = RandomParams {
                release: Some((0, 2 * n as u32)),
                kind: InstanceKind::ContinuousEnergy,
                ..Default::default()
            };
            let inst = gen_random(n, &p, seed)?;
            InstanceDocument { jobs: inst.jobs().to_vec(), model: MachineModel::Alpha { alpha: a }, budget: Some(qi(n as i64)) }
        }
    };
    Ok(doc)
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub algo: Algo,
    pub n: usize,
    pub eps_index: usize,
    pub eps: String,
    pub seed: u64,
    pub hash: String,
    pub cost: f64,
    pub oracle: Option<f64>,
    pub ratio: Option<f64>,
}

fn bench_row(algo: Algo, n: usize, eps_index: usize, eps: &Q, seed: u64, args: &BenchArgs) -> Result<BenchRow, CliError> {
    let doc = bench_instance(algo, n, seed, args.alpha)?;
    let m = if algo == Algo::Parallel { args.machines } else { 1 };
    let out = run(&doc, algo, eps, doc.budget.as_ref(), m)?;
    let oracle = oracle_cost(&doc, algo, doc.budget.as_ref(), m)?;
    Ok(BenchRow {
        algo,
        n,
        eps_index,
        eps: format_q(eps),
        seed,
        hash: instance_hash(&doc),
        cost: out.cost,
        oracle,
        ratio: oracle.map(|o| ratio(out.cost, o)),
    })
}

pub fn bench_rows(args: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    let eps: Vec<Q> = args.eps.iter().map(|e| parse_rational(e, "eps")).collect::<Result<_, _>>()?;
    let mut tasks = Vec::new();
    for &algo in &args.algos {
        for &n in &args.sizes {
            for (k, e) in eps.iter().enumerate() {
                for seed in 0..args.seeds {
                    tasks.push((algo, n, k, e.clone(), seed));
                }
            }
        }
    }
    let mut rows: Vec<BenchRow> = tasks
        .par_iter()
        .map(|(algo, n, k, e, seed)| bench_row(*algo, *n, *k, e, *seed, args))
        .collect::<Result<_, _>>()?;
    rows.sort_by(|a, b| (a.algo, a.n, a.eps_index, a.seed).cmp(&(b.algo, b.n, b.eps_index, b.seed)));
    Ok(rows)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn rows_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{BENCH_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.algo.name(),
            r.n,
            r.eps,
            r.seed,
            r.hash,
            r.cost,
            opt(r.oracle),
            opt(r.ratio)
        ));
    }
    out
}

fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    Some(if k % 2 == 1 { xs[k / 2] } else { 0.5 * (xs[k / 2 - 1] + xs[k / 2]) })
}

pub fn summary_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    let mut i = 0;
    while i < rows.len() {
        let key = (rows[i].algo, rows[i].n, rows[i].eps_index);
        let mut j = i;
        while j < rows.len() && (rows[j].algo, rows[j].n, rows[j].eps_index) == key {
            j += 1;
        }
        let mut ratios: Vec<f64> = rows[i..j].iter().filter_map(|r| r.ratio).collect();
        let max = ratios.iter().copied().fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.max(b))));
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rows[i].algo.name(),
            rows[i].n,
            rows[i].eps,
            j - i,
            opt(median(&mut ratios)),
            opt(max)
        ));
        i = j;
    }
    out
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let rows = bench_rows(args)?;
    write_output(args.output.as_ref(), &rows_csv(&rows))?;
    if let Some(path) = &args.summary {
        std::fs::write(path, summary_csv(&rows))?;
    }
    Ok(())
}
