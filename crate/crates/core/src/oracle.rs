//! Exhaustive exact solvers used as ground truth for small instances.

use num::traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuous::{check_budget, cost_from_gamma, gamma, remaining_weights};
use crate::discrete::envelope::{allocate, Allocation, Envelope};
use crate::error::{Error, Result};
use crate::model::{DiscreteSpeedMenu, Instance, JobId, PowerLaw};
use crate::rational::{format_q, to_f64, Q};
use crate::schedule::EnergyAssignment;
use crate::speed::SpeedOracle;

/// Default largest instance the oracles accept.
pub const DEFAULT_MAX_N: usize = 9;

/// Environment variable overriding [`DEFAULT_MAX_N`].
pub const MAX_N_ENV: &str = "VARISPEED_ORACLE_MAX_N";

/// Relative cost gap under which permutations count as tied in floating point.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub max_n: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_n: DEFAULT_MAX_N }
    }
}

impl OracleConfig {
    /// Reads the bound from the environment, falling back to the default.
    pub fn from_env() -> Self {
        let max_n = std::env::var(MAX_N_ENV).ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_MAX_N);
        OracleConfig { max_n }
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.max_n {
            return Err(Error::InstanceTooLarge { n, bound: self.max_n });
        }
        Ok(())
    }
}

/// Optimal cost and every permutation (time order of ids) attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult<C> {
    pub best_permutations: Vec<Vec<JobId>>,
    pub cost: C,
}

/// Enumerates time orders whose additive cost stays within `limit`, using `best_rest`
/// as an exact completion bound. Costs are charged per (set already run, next job).
fn enumerate_within<C, F>(n: usize, best_rest: &[C], step: &F, limit: &C, zero: C) -> Vec<Vec<usize>>
where
    C: Clone + PartialOrd + std::ops::Add<Output = C>,
    F: Fn(usize, usize) -> C,
{
    fn rec<C, F>(
        n: usize,
        mask: usize,
        acc: C,
        prefix: &mut Vec<usize>,
        best_rest: &[C],
        step: &F,
        limit: &C,
        out: &mut Vec<Vec<usize>>,
    ) where
        C: Clone + PartialOrd + std::ops::Add<Output = C>,
        F: Fn(usize, usize) -> C,
    {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for j in 0..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << j);
            let a = acc.clone() + step(mask, j);
            if a.clone() + best_rest[next].clone() <= *limit {
                prefix.push(j);
                rec(n, next, a, prefix, best_rest, step, limit, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, 0, zero, &mut Vec::with_capacity(n), best_rest, step, limit, &mut out);
    out.sort();
    out
}

/// Subset dynamic program: `rest[mask]` is the cheapest cost of running the jobs outside `mask`
/// after those in `mask`.
fn completion_table<C, F>(n: usize, step: &F, zero: C) -> Vec<C>
where
    C: Clone + PartialOrd + std::ops::Add<Output = C>,
    F: Fn(usize, usize) -> C,
{
    let full = (1usize << n) - 1;
    let mut rest: Vec<Option<C>> = vec![None; full + 1];
    rest[full] = Some(zero);
    for mask in (0..full).rev() {
        let mut best: Option<C> = None;
        for j in 0..n {
            if mask & (1 << j) == 0 {
                let c = step(mask, j) + rest[mask | (1 << j)].clone().expect("filled");
                if best.as_ref().map_or(true, |b| c < *b) {
                    best = Some(c);
                }
            }
        }
        rest[mask] = best;
    }
    rest.into_iter().map(|c| c.expect("filled")).collect()
}

fn volume_table(inst: &Instance) -> Vec<Q> {
    let n = inst.len();
    let mut vol = vec![Q::zero(); 1 << n];
    for mask in 1usize..(1 << n) {
        let j = mask.trailing_zeros() as usize;
        vol[mask] = &vol[mask & (mask - 1)] + &inst.jobs()[j].volume;
    }
    vol
}

/// Exact optimum for a given speed function, with every optimal order.
pub fn exact_given_speed(inst: &Instance, oracle: &dyn SpeedOracle, cfg: &OracleConfig) -> Result<ExactResult<Q>> {
    cfg.check(inst.len())?;
    let n = inst.len();
    let vol = volume_table(inst);
    let times: Vec<Q> = vol.iter().map(|v| oracle.time(v)).collect::<Result<_>>()?;
    let step = |mask: usize, j: usize| &inst.jobs()[j].weight * &times[mask | (1 << j)];
    let rest = completion_table(n, &step, Q::zero());
    let opt = rest[0].clone();
    let orders = enumerate_within(n, &rest, &step, &opt, Q::zero());
    Ok(ExactResult { best_permutations: orders.iter().map(|o| inst.ids_of(o)).collect(), cost: opt })
}

/// Exact optimum of the continuous speed-scaling problem over all orders.
pub fn exact_continuous(inst: &Instance, law: &PowerLaw, budget: f64, cfg: &OracleConfig) -> Result<ExactResult<f64>> {
    cfg.check(inst.len())?;
    check_budget(budget)?;
    let n = inst.len();
    let a = law.alpha_f64();
    let p = (a - 1.0) / a;
    let mut wsum = vec![0.0f64; 1 << n];
    for mask in 1usize..(1 << n) {
        let j = mask.trailing_zeros() as usize;
        wsum[mask] = wsum[mask & (mask - 1)] + to_f64(&inst.jobs()[j].weight);
    }
    let full = (1usize << n) - 1;
    let vol: Vec<f64> = inst.jobs().iter().map(|j| to_f64(&j.volume)).collect();
    // job j runs while the jobs outside `mask` (including j) remain
    let step = |mask: usize, j: usize| vol[j] * wsum[full & !mask].powf(p);
    let rest = completion_table(n, &step, 0.0);
    let g = rest[0];
    let limit = g * (1.0 + TIE_TOLERANCE).powf(p) + f64::EPSILON * g;
    let orders = enumerate_within(n, &rest, &step, &limit, 0.0);
    let best = orders
        .iter()
        .map(|o| gamma(inst, o, law))
        .fold(f64::INFINITY, f64::min);
    Ok(ExactResult {
        best_permutations: orders.iter().map(|o| inst.ids_of(o)).collect(),
        cost: cost_from_gamma(best, law, budget),
    })
}

/// Optimal speeds for a fixed order on a discrete menu.
#[derive(Debug, Clone)]
pub struct DiscreteOrderSolution {
    pub order: Vec<JobId>,
    pub cost: Q,
    pub energy: Q,
    /// Work per (menu index) for each job, in `order`.
    pub work: Vec<Vec<(usize, Q)>>,
    /// Execution times in `order`.
    pub x: Vec<Q>,
}

/// Smallest energy any schedule needs: all work at the most efficient speed.
pub fn min_energy(inst: &Instance, menu: &DiscreteSpeedMenu) -> Q {
    inst.total_volume() * menu.min_energy_per_work()
}

/// Exact optimal speed allocation for a fixed time order.
pub fn discrete_order_optimum(
    inst: &Instance,
    order: &[JobId],
    menu: &DiscreteSpeedMenu,
    budget: &Q,
) -> Result<DiscreteOrderSolution> {
    let env: Envelope<Q> = Envelope::new(menu);
    discrete_order_with(inst, order, menu, &env, budget)
}

fn discrete_order_with(
    inst: &Instance,
    order: &[JobId],
    menu: &DiscreteSpeedMenu,
    env: &Envelope<Q>,
    budget: &Q,
) -> Result<DiscreteOrderSolution> {
    let idx = inst.indices_of(order)?;
    let volumes: Vec<Q> = idx.iter().map(|&i| inst.jobs()[i].volume.clone()).collect();
    let mut coeff = vec![Q::zero(); idx.len()];
    let mut acc = Q::zero();
    for (pos, &i) in idx.iter().enumerate().rev() {
        acc += &inst.jobs()[i].weight;
        coeff[pos] = acc.clone();
    }
    let Allocation { work, x, energy, objective } = allocate(env, &volumes, &coeff, budget).ok_or_else(|| {
        Error::InfeasibleBudget(format!(
            "budget {} is below the minimum energy {}",
            format_q(budget),
            format_q(&min_energy(inst, menu))
        ))
    })?;
    Ok(DiscreteOrderSolution { order: order.to_vec(), cost: objective, energy, work, x })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            let swap = if k % 2 == 0 { i } else { 0 };
            cur.swap(swap, k - 1);
        }
    }
    heap(n, &mut cur, &mut out);
    out.sort();
    out
}

/// Exact optimum for a discrete speed menu and energy budget over all orders.
pub fn exact_discrete(
    inst: &Instance,
    menu: &DiscreteSpeedMenu,
    budget: &Q,
    cfg: &OracleConfig,
) -> Result<ExactResult<Q>> {
    cfg.check(inst.len())?;
    cfg.check(menu.len())?;
    if !budget.is_positive() {
        return Err(Error::InvalidParameter("budget must be positive".into()));
    }
    let need = min_energy(inst, menu);
    if need > *budget {
        return Err(Error::InfeasibleBudget(format!(
            "budget {} is below the minimum energy {}",
            format_q(budget),
            format_q(&need)
        )));
    }
    let env: Envelope<Q> = Envelope::new(menu);
    let costs: Vec<(Vec<usize>, Q)> = permutations(inst.len())
        .into_par_iter()
        .map(|o| {
            let ids = inst.ids_of(&o);
            let c = discrete_order_with(inst, &ids, menu, &env, budget).map(|s| s.cost);
            c.map(|c| (o, c))
        })
        .collect::<Result<_>>()?;
    let best = costs.iter().map(|(_, c)| c).min().cloned().expect("nonempty");
    let best_permutations = costs
        .iter()
        .filter(|(_, c)| *c == best)
        .map(|(o, _)| inst.ids_of(o))
        .collect();
    Ok(ExactResult { best_permutations, cost: best })
}

/// Stationarity spread and budget gap of an energy assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `(max - min) / max` over the per-job terms `W_j v_j^(a/(a-1)) (a-1)^-1 E_j^(-a/(a-1))`.
    pub residual: f64,
    /// `|sum E_j - E| / E`.
    pub budget_gap: f64,
}

/// Evaluates the first-order optimality conditions of the energy split along a time order.
pub fn numeric_kkt_check(inst: &Instance, order: &[JobId], law: &PowerLaw, a: &EnergyAssignment) -> Result<KktReport> {
    let idx = inst.indices_of(order)?;
    let alpha = law.alpha_f64();
    let w = remaining_weights(inst, &idx);
    let mut terms = Vec::with_capacity(idx.len());
    for (pos, &i) in idx.iter().enumerate() {
        let j = &inst.jobs()[i];
        let e = a.energies.get(&j.id).copied().ok_or(Error::UnknownJob(j.id))?;
        if e <= 0.0 {
            return Err(Error::InvalidParameter(format!("job {} has nonpositive energy {e}", j.id)));
        }
        let v = to_f64(&j.volume);
        let r = alpha / (alpha - 1.0);
        terms.push(w[pos] * v.powf(r) / (alpha - 1.0) * e.powf(-r));
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = terms.iter().cloned().fold(f64::INFINITY, f64::min);
    let residual = if max > 0.0 { (max - min) / max } else { 0.0 };
    let budget_gap = (a.total() - a.budget).abs() / a.budget;
    Ok(KktReport { residual, budget_gap })
}

/// Minimizes `sum_j W_j x_j(E_j)` over `sum_j E_j = E` by pairwise golden-section descent.
pub fn numeric_energy_minimum(inst: &Instance, order: &[JobId], law: &PowerLaw, budget: f64) -> Result<f64> {
    check_budget(budget)?;
    let idx = inst.indices_of(order)?;
    let w = remaining_weights(inst, &idx);
    let v: Vec<f64> = idx.iter().map(|&i| to_f64(&inst.jobs()[i].volume)).collect();
    let active: Vec<usize> = (0..idx.len()).filter(|&k| v[k] > 0.0 && w[k] > 0.0).collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let term = |k: usize, e: f64| w[k] * law.execution_time(v[k], e);
    let mut e = vec![budget / active.len() as f64; idx.len()];
    let total = |e: &[f64]| active.iter().map(|&k| term(k, e[k])).sum::<f64>();
    let mut cost = total(&e);
    for _sweep in 0..2000 {
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let (i, j) = (active[a], active[b]);
                let t = e[i] + e[j];
                let h = |s: f64| term(i, s * t) + term(j, (1.0 - s) * t);
                let (mut lo, mut hi) = (1e-15, 1.0 - 1e-15);
                let g = (5f64.sqrt() - 1.0) / 2.0;
                let mut x1 = hi - g * (hi - lo);
                let mut x2 = lo + g * (hi - lo);
                let (mut f1, mut f2) = (h(x1), h(x2));
                for _ in 0..200 {
                    if f1 < f2 {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - g * (hi - lo);
                        f1 = h(x1);
                    } else {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + g * (hi - lo);
                        f2 = h(x2);
                    }
                    if hi - lo < 1e-16 {
                        break;
                    }
                }
                let s = (lo + hi) / 2.0;
                if h(s) < h(e[i] / t) {
                    e[i] = s * t;
                    e[j] = t - e[i];
                }
            }
        }
        let next = total(&e);
        let done = (cost - next).abs() <= 1e-15 * cost;
        cost = next;
        if done {
            break;
        }
    }
    Ok(cost)
}
