//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num::traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use varispeed::continuous::{optimal_energy_split, order_cost as continuous_cost};
use varispeed::discrete::fptas::{enumerate_guesses, fptas, run_guess, DpEntry, DpOptions, FptasConfig};
use varispeed::generate::{gen_budget, gen_hardness_gadget, gen_random, gen_random_menu, gen_random_speed, RandomParams, TardinessInstance};
use varispeed::oracle::{exact_continuous, exact_discrete, exact_given_speed, numeric_energy_minimum, numeric_kkt_check, OracleConfig};
use varispeed::parallel;
use varispeed::ptas::{self, PtasConfig};
use varispeed::rational::{q, to_f64};
use varispeed::schedule::{remaining_weight_integral, time_cost, time_schedule, to_time_schedule, weight_cost};
use varispeed::{Instance, InstanceKind, JobId, PiecewiseConstantSpeed, PowerLaw, SpeedOracle, WeightSchedule, Q};

/// Regression constant of the given-speed PTAS ratio bound `1 + K eps`.
const K: f64 = 1.0;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn shuffled(inst: &Instance, seed: u64) -> Vec<JobId> {
    let mut ids = inst.ids();
    ids.shuffle(&mut rng(seed));
    ids
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[k]
    } else {
        (xs[k - 1] + xs[k]) / 2.0
    }
}

fn permutations(ids: &[JobId]) -> Vec<Vec<JobId>> {
    if ids.len() <= 1 {
        return vec![ids.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..ids.len() {
        let mut rest = ids.to_vec();
        let x = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn suite_instance(seed: u64) -> (Instance, PiecewiseConstantSpeed, Vec<JobId>) {
    let n = 1 + (seed % 10) as usize;
    let inst = gen_random(n, &RandomParams::default(), seed).expect("valid parameters");
    let speed = gen_random_speed(1 + (seed % 5) as usize, seed).expect("valid parameters");
    let order = shuffled(&inst, seed);
    (inst, speed, order)
}

/// Weight-schedule for `order` with random idle weight below some jobs.
fn with_idle(inst: &Instance, order: &[JobId], seed: u64) -> WeightSchedule {
    let mut r = rng(seed ^ 0x1d1e);
    let mut acc = Q::zero();
    let mut c = std::collections::BTreeMap::new();
    for &id in order.iter().rev() {
        if r.gen_bool(0.3) {
            acc += q(r.gen_range(1..=5), r.gen_range(1..=4));
        }
        acc += &inst.job(id).expect("known id").weight;
        c.insert(id, acc.clone());
    }
    WeightSchedule::new(c)
}

fn remaining_weight_identity() -> Outcome {
    for seed in 0..500u64 {
        let (inst, speed, order) = suite_instance(seed);
        let ts = time_schedule(&inst, &order, &speed).map_err(|e| e.to_string())?;
        if time_cost(&inst, &ts) != remaining_weight_integral(&inst, &ts) {
            return Err(format!("seed {seed}: identity fails"));
        }
    }
    Ok("500 instances, exact".into())
}

fn weight_space_duality() -> Outcome {
    let mut with_gap = 0;
    for seed in 0..500u64 {
        let (inst, speed, order) = suite_instance(seed);
        let packed = WeightSchedule::from_order(&inst, &order).map_err(|e| e.to_string())?;
        for ws in [packed, with_idle(&inst, &order, seed)] {
            let wc = weight_cost(&inst, &ws, &speed).map_err(|e| e.to_string())?;
            let tc = time_cost(&inst, &to_time_schedule(&inst, &ws, &speed).map_err(|e| e.to_string())?);
            let idle = !ws.idle_weight(&inst).is_zero();
            if wc < tc || (wc == tc) == idle {
                return Err(format!("seed {seed}: weight cost {wc} time cost {tc} idle {idle}"));
            }
            with_gap += usize::from(wc > tc);
        }
    }
    Ok(format!("1000 schedules, {with_gap} with strict gap"))
}

fn ptas_instance(seed: u64) -> (Instance, PiecewiseConstantSpeed) {
    let mut r = rng(seed ^ 0xa11ce);
    let n = r.gen_range(1..=8usize);
    match seed % 4 {
        0 => (gen_random(n, &RandomParams::default(), seed).expect("valid"), PiecewiseConstantSpeed::unit()),
        3 => {
            let t = TardinessInstance {
                volumes: (0..n).map(|_| r.gen_range(1..=6)).collect(),
                weights: (0..n).map(|_| r.gen_range(1..=6)).collect(),
                due: r.gen_range(1..=10),
            };
            let g = gen_hardness_gadget(&t, &Q::from_integer(2.into())).expect("valid gadget");
            (g.instance, g.profile)
        }
        _ => (
            gen_random(n, &RandomParams::default(), seed).expect("valid"),
            gen_random_speed(r.gen_range(2..=6), seed).expect("valid"),
        ),
    }
}

fn ptas_vs_oracle() -> Outcome {
    let rows: Vec<Result<(f64, f64), String>> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let (inst, speed) = ptas_instance(seed);
            let opt = exact_given_speed(&inst, &speed, &OracleConfig { max_n: 8 }).map_err(|e| e.to_string())?.cost;
            let mut ratios = [0.0; 2];
            for (k, eps) in [q(1, 10), q(2, 5)].into_iter().enumerate() {
                let sol = ptas::solve(&inst, &speed, &PtasConfig::new(eps)).map_err(|e| e.to_string())?;
                ratios[k] = to_f64(&(sol.cost / &opt));
            }
            Ok((ratios[0], ratios[1]))
        })
        .collect();
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_, _>>()?;
    let bound = 1.0 + K * 0.1;
    if let Some((k, r)) = rows.iter().enumerate().find(|(_, r)| !(r.0 >= 1.0 - 1e-9 && r.0 <= bound)) {
        return Err(format!("seed {k}: ratio {} outside [1 - 1e-9, {bound}]", r.0));
    }
    let fine = median(rows.iter().map(|r| r.0).collect());
    let coarse = median(rows.iter().map(|r| r.1).collect());
    let max = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    if fine > coarse {
        return Err(format!("median at eps 0.1 is {fine}, at eps 0.4 is {coarse}"));
    }
    Ok(format!("200 instances, max ratio {max:.6}, median {fine:.6} (eps 0.1) vs {coarse:.6} (eps 0.4), K = {K}"))
}

fn kkt_energy_split() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..200u64 {
        let mut r = rng(seed ^ 0xcc);
        let p = RandomParams { kind: InstanceKind::ContinuousEnergy, ..Default::default() };
        let inst = gen_random(r.gen_range(1..=8), &p, seed).expect("valid");
        let law = PowerLaw::new(Q::from_integer(r.gen_range(2..=4).into())).expect("valid alpha");
        let order = shuffled(&inst, seed);
        let budget = 10f64.powf(r.gen_range(-2.0..2.0));
        let a = optimal_energy_split(&inst, &order, &law, budget).map_err(|e| e.to_string())?;
        let kkt = numeric_kkt_check(&inst, &order, &law, &a).map_err(|e| e.to_string())?;
        let closed = continuous_cost(&inst, &order, &law, budget).map_err(|e| e.to_string())?;
        let numeric = numeric_energy_minimum(&inst, &order, &law, budget).map_err(|e| e.to_string())?;
        let rel = (numeric - closed).abs() / closed;
        if kkt.residual >= 1e-8 || kkt.budget_gap >= 1e-12 || rel >= 1e-6 {
            return Err(format!("seed {seed}: residual {} gap {} numeric {rel}", kkt.residual, kkt.budget_gap));
        }
        worst = (worst.0.max(kkt.residual), worst.1.max(kkt.budget_gap), worst.2.max(rel));
    }
    Ok(format!("200 triples, max residual {:.1e}, budget gap {:.1e}, numeric gap {:.1e}", worst.0, worst.1, worst.2))
}

fn universal_sequence() -> Outcome {
    let budgets = [0.5, 1.0, 10.0];
    for seed in 0..100u64 {
        let n = 1 + (seed % 7) as usize;
        let p = RandomParams { kind: InstanceKind::ContinuousEnergy, ..Default::default() };
        let inst = gen_random(n, &p, seed).expect("valid");
        let alpha = 2 + (seed % 2) as i64;
        let law = PowerLaw::new(Q::from_integer(alpha.into())).expect("valid alpha");
        let mut sets = Vec::new();
        let mut scaled = Vec::new();
        for &e in &budgets {
            let ex = exact_continuous(&inst, &law, e, &OracleConfig { max_n: 7 }).map_err(|e| e.to_string())?;
            sets.push(ex.best_permutations.into_iter().collect::<BTreeSet<_>>());
            scaled.push(ex.cost * e.powf(1.0 / (alpha as f64 - 1.0)));
        }
        if sets.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("seed {seed}: argmin set depends on the budget"));
        }
        if scaled.iter().any(|s| (s - scaled[0]).abs() > 1e-9 * scaled[0]) {
            return Err(format!("seed {seed}: scaled costs {scaled:?}"));
        }
    }
    Ok("100 instances, budgets {0.5, 1, 10}".into())
}

fn discrete_case(n: usize, kappa: usize, seed: u64) -> (Instance, varispeed::DiscreteSpeedMenu, Q) {
    let p = RandomParams { kind: InstanceKind::DiscreteEnergy, ..Default::default() };
    let inst = gen_random(n, &p, seed).expect("valid");
    let menu = gen_random_menu(kappa, 3, seed).expect("valid");
    let budget = gen_budget(&inst, &menu, seed);
    (inst, menu, budget)
}

fn discrete_fptas() -> Outcome {
    let eps = q(1, 5);
    let bound = (Q::one() + &eps).pow(3);
    let rows: Vec<Result<f64, String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let (inst, menu, budget) = discrete_case(1 + (seed % 6) as usize, 2, seed);
            let sol = fptas(&inst, &menu, &budget, &FptasConfig::new(eps.clone())).map_err(|e| e.to_string())?;
            let ex = exact_discrete(&inst, &menu, &budget, &OracleConfig { max_n: 6 }).map_err(|e| e.to_string())?;
            let s = &sol.result.solution;
            if s.cost > &ex.cost * &bound || s.energy > budget {
                return Err(format!("seed {seed}: cost {} vs {}, energy {} vs {budget}", s.cost, ex.cost, s.energy));
            }
            Ok(to_f64(&(&s.cost / &ex.cost)))
        })
        .collect();
    let ratios: Vec<f64> = rows.into_iter().collect::<Result<_, _>>()?;
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(format!("100 instances, max ratio {max:.6} (bound {:.3})", to_f64(&bound)))
}

fn dominated(target: &DpEntry, layer: &[DpEntry]) -> bool {
    layer.iter().any(|x| {
        x.y.iter().zip(&target.y).all(|(a, b)| *a <= b * (1.0 + 1e-12) + 1e-12)
            && x.z <= target.z * (1.0 + 1e-12)
            && x.e <= target.e * (1.0 + 1e-12) + 1e-12
    })
}

fn chain_domination() -> Outcome {
    let eps = q(1, 5);
    let mut states = 0usize;
    for seed in 0..25u64 {
        let (inst, menu, budget) = discrete_case(1 + (seed % 5) as usize, 2, seed);
        for g in enumerate_guesses(&inst, &menu, &eps).map_err(|e| e.to_string())? {
            let z_only = run_guess(&inst, &menu, &budget, &eps, &g, DpOptions { round_y: false, round_z: true })
                .map_err(|e| e.to_string())?;
            let both = run_guess(&inst, &menu, &budget, &eps, &g, DpOptions { round_y: true, round_z: true })
                .map_err(|e| e.to_string())?;
            for (k, layer) in z_only.layers.iter().enumerate() {
                for st in layer {
                    states += 1;
                    if !dominated(st, &both.layers[k]) {
                        return Err(format!("seed {seed}, guess {g:?}, layer {k}: undominated state"));
                    }
                }
            }
        }
    }
    Ok(format!("25 instances, {states} chain states, 0 violations"))
}

fn gadget_identity() -> Outcome {
    let mut checked = 0usize;
    for seed in 0..30u64 {
        let mut r = rng(seed ^ 0x9a);
        let n = 1 + (seed % 6) as usize;
        let t = TardinessInstance {
            volumes: (0..n).map(|_| r.gen_range(1..=6)).collect(),
            weights: (0..n).map(|_| r.gen_range(1..=6)).collect(),
            due: r.gen_range(1..=12),
        };
        let g = gen_hardness_gadget(&t, &Q::from_integer((2 + (seed % 2) as i64).into())).map_err(|e| e.to_string())?;
        for perm in permutations(&g.instance.ids()) {
            let mut prefix = Q::zero();
            for id in perm {
                prefix += &g.instance.job(id).map_err(|e| e.to_string())?.volume;
                if g.cost_map(&prefix) != g.profile.time(&prefix).map_err(|e| e.to_string())? {
                    return Err(format!("seed {seed}: mismatch at completion {prefix}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("30 gadgets, {checked} completions, exact"))
}

fn parallel_certified() -> Outcome {
    let eps = q(1, 5);
    let rows: Vec<Result<f64, String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut r = rng(seed ^ 0x7a);
            let n = r.gen_range(1..=8usize);
            let m = 2 + (seed % 2) as usize;
            let p = RandomParams {
                release: Some((0, 2 * n as u32)),
                kind: InstanceKind::ContinuousEnergy,
                ..Default::default()
            };
            let inst = gen_random(n, &p, seed).map_err(|e| e.to_string())?;
            let law = PowerLaw::new(Q::from_integer(r.gen_range(2..=3).into())).map_err(|e| e.to_string())?;
            let budget = r.gen_range(0.5..2.0) * n as f64;
            let sol = parallel::solve(&inst, m, &law, budget, &eps).map_err(|e| e.to_string())?;
            sol.schedule.validate(&inst).map_err(|e| format!("seed {seed}: {e}"))?;
            if sol.energies.total() > budget {
                return Err(format!("seed {seed}: energy {} exceeds {budget}", sol.energies.total()));
            }
            let rep = &sol.report;
            let bound = rep.weighted_release + (1.0 + rep.eps_prime) * rep.z1 + rep.x_prime;
            if sol.cost > bound * (1.0 + 1e-12) {
                return Err(format!("seed {seed}: cost {} above bound {bound}", sol.cost));
            }
            Ok(sol.cost / bound)
        })
        .collect();
    let slack: Vec<f64> = rows.into_iter().collect::<Result<_, _>>()?;
    let max = slack.iter().cloned().fold(0.0, f64::max);
    Ok(format!("100 instances, max cost / bound {max:.4}"))
}

fn scale_smoke() -> Outcome {
    let inst = gen_random(50, &RandomParams::default(), 1).map_err(|e| e.to_string())?;
    let speed = gen_random_speed(5, 1).map_err(|e| e.to_string())?;
    let t = Instant::now();
    ptas::solve(&inst, &speed, &PtasConfig::new(q(1, 5))).map_err(|e| e.to_string())?;
    let ptas_time = t.elapsed();
    let (inst, menu, budget) = discrete_case(20, 2, 1);
    let t = Instant::now();
    fptas(&inst, &menu, &budget, &FptasConfig::new(q(1, 4))).map_err(|e| e.to_string())?;
    let fptas_time = t.elapsed();
    let limit = Duration::from_secs(60);
    let msg = format!("ptas n=50 {:.1}s, fptas n=20 {:.1}s", ptas_time.as_secs_f64(), fptas_time.as_secs_f64());
    if ptas_time < limit && fptas_time < limit {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("1 remaining-weight identity", remaining_weight_identity, 10),
        ("2 weight-space duality", weight_space_duality, 10),
        ("3 given-speed ptas vs oracle", ptas_vs_oracle, 300),
        ("4 kkt energy split", kkt_energy_split, 60),
        ("5 universal sequence", universal_sequence, 120),
        ("6 discrete fptas", discrete_fptas, 300),
        ("7 chain domination", chain_domination, 120),
        ("8 hardness gadget identity", gadget_identity, 30),
        ("9 parallel certified bound", parallel_certified, 300),
        ("10 scale smoke test", scale_smoke, 120),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(m) if secs >= limit as f64 => Err(format!("{m}; took {secs:.1}s, limit {limit}s")),
            o => o,
        };
        match outcome {
            Ok(m) => println!("PASS criterion {name}: {m} ({secs:.2}s)"),
            Err(m) => {
                failed += 1;
                println!("FAIL criterion {name}: {m} ({secs:.2}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
