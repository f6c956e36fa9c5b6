//! Preemptive scheduling with release dates on identical parallel machines under an energy budget.
//!
//! A fast single-machine relaxation (one machine `m` times as fast, release dates dropped, with a
//! bound `X` on the weighted execution time) yields a priority order and energies; preemptive list
//! scheduling then runs the `m` highest-priority available jobs at every moment.

use std::collections::BTreeMap;

use num::traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::continuous::{check_budget, remaining_weights, universal_sequence};
use crate::error::{Error, Result};
use crate::model::{Instance, JobId, PowerLaw};
use crate::oracle::OracleConfig;
use crate::rational::{to_f64, Q};
use crate::schedule::EnergyAssignment;

/// Relative tolerance for floating-point schedule checks.
pub const TOLERANCE: f64 = 1e-9;

const BISECTION_STEPS: usize = 100;
const MAX_MULTIPLIER_SHARE: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub machine: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelSchedule {
    pub machines: usize,
    pub fragments: BTreeMap<JobId, Vec<Fragment>>,
    /// Execution time of each job on one machine.
    pub execution: BTreeMap<JobId, f64>,
    pub completions: BTreeMap<JobId, f64>,
}

impl ParallelSchedule {
    pub fn cost(&self, inst: &Instance) -> f64 {
        inst.jobs().iter().map(|j| to_f64(&j.weight) * self.completions.get(&j.id).copied().unwrap_or(0.0)).sum()
    }

    /// Checks machine exclusivity, job exclusivity, release dates and processed durations.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let scale = self.completions.values().fold(1.0f64, |a, &b| a.max(b.abs()));
        let tol = TOLERANCE * scale;
        let bad = |msg: String| Err(Error::InvariantViolation(msg));
        let mut per_machine: Vec<Vec<(f64, f64, JobId)>> = vec![Vec::new(); self.machines];
        for j in inst.jobs() {
            let frags = self.fragments.get(&j.id).map(Vec::as_slice).unwrap_or(&[]);
            let x = self.execution.get(&j.id).copied().ok_or(Error::UnknownJob(j.id))?;
            let r = to_f64(&j.release);
            let mut total = 0.0;
            let mut sorted: Vec<Fragment> = frags.to_vec();
            sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
            for (k, f) in sorted.iter().enumerate() {
                if f.machine >= self.machines {
                    return bad(format!("job {} uses machine {}", j.id, f.machine));
                }
                if f.end < f.start - tol || f.start < r - tol {
                    return bad(format!("job {} fragment [{}, {}) violates release {r}", j.id, f.start, f.end));
                }
                if k > 0 && f.start < sorted[k - 1].end - tol {
                    return bad(format!("job {} runs on two machines at time {}", j.id, f.start));
                }
                total += f.end - f.start;
                per_machine[f.machine].push((f.start, f.end, j.id));
            }
            if (total - x).abs() > TOLERANCE * x.max(1.0) {
                return bad(format!("job {} processed for {total}, needs {x}", j.id));
            }
            let c = self.completions.get(&j.id).copied().ok_or(Error::UnknownJob(j.id))?;
            let last = sorted.last().map_or(r, |f| f.end);
            if (c - last).abs() > tol || c < r - tol {
                return bad(format!("job {} completion {c} disagrees with its fragments", j.id));
            }
        }
        for (mi, frags) in per_machine.iter_mut().enumerate() {
            frags.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in frags.windows(2) {
                if w[1].0 < w[0].1 - tol {
                    return bad(format!("machine {mi} runs jobs {} and {} at once", w[0].2, w[1].2));
                }
            }
        }
        Ok(())
    }
}

/// Preemptive list scheduling with fixed execution times; migration is allowed.
pub fn list_schedule_times(inst: &Instance, m: usize, perm: &[JobId], execution: &BTreeMap<JobId, f64>) -> Result<ParallelSchedule> {
    if m == 0 {
        return Err(Error::InvalidParameter("machine count must be positive".into()));
    }
    let idx = inst.indices_of(perm)?;
    let n = inst.len();
    let mut prio = vec![0usize; n];
    for (pos, &i) in idx.iter().enumerate() {
        prio[i] = pos;
    }
    let release: Vec<f64> = inst.jobs().iter().map(|j| to_f64(&j.release)).collect();
    let mut remaining = Vec::with_capacity(n);
    for j in inst.jobs() {
        let x = execution.get(&j.id).copied().ok_or(Error::UnknownJob(j.id))?;
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!("job {} has execution time {x}", j.id)));
        }
        remaining.push(x);
    }
    let mut done = vec![false; n];
    let mut completion = vec![0.0; n];
    let mut fragments: Vec<Vec<Fragment>> = vec![Vec::new(); n];
    for i in 0..n {
        if remaining[i] == 0.0 {
            done[i] = true;
            completion[i] = release[i];
        }
    }
    let mut on_machine: Vec<Option<(usize, f64)>> = vec![None; m];
    let mut t = 0.0f64;
    while done.iter().any(|d| !d) {
        let mut avail: Vec<usize> = (0..n).filter(|&i| !done[i] && release[i] <= t).collect();
        if avail.is_empty() {
            t = (0..n).filter(|&i| !done[i]).map(|i| release[i]).fold(f64::INFINITY, f64::min);
            continue;
        }
        avail.sort_by_key(|&i| prio[i]);
        avail.truncate(m);
        for (mi, slot) in on_machine.iter_mut().enumerate() {
            if let Some((i, start)) = *slot {
                if !avail.contains(&i) {
                    fragments[i].push(Fragment { machine: mi, start, end: t });
                    *slot = None;
                }
            }
        }
        for &i in &avail {
            if !on_machine.iter().any(|s| s.map_or(false, |(j, _)| j == i)) {
                let free = on_machine.iter().position(Option::is_none).expect("m slots for m jobs");
                on_machine[free] = Some((i, t));
            }
        }
        let finish = avail.iter().map(|&i| t + remaining[i]).fold(f64::INFINITY, f64::min);
        let next_release = (0..n).filter(|&i| !done[i] && release[i] > t).map(|i| release[i]).fold(f64::INFINITY, f64::min);
        let next = finish.min(next_release);
        for &i in &avail {
            if t + remaining[i] <= next {
                remaining[i] = 0.0;
                done[i] = true;
                completion[i] = next;
            } else {
                remaining[i] -= next - t;
            }
        }
        for (mi, slot) in on_machine.iter_mut().enumerate() {
            if let Some((i, start)) = *slot {
                if done[i] {
                    fragments[i].push(Fragment { machine: mi, start, end: next });
                    *slot = None;
                }
            }
        }
        t = next;
    }
    let ids: Vec<JobId> = inst.ids();
    Ok(ParallelSchedule {
        machines: m,
        fragments: ids.iter().copied().zip(fragments).collect(),
        execution: ids.iter().map(|&id| (id, execution[&id])).collect(),
        completions: ids.iter().copied().zip(completion).collect(),
    })
}

/// Preemptive list scheduling with execution times implied by the energies under `law`.
pub fn preemptive_list_schedule(
    inst: &Instance,
    m: usize,
    perm: &[JobId],
    energies: &EnergyAssignment,
    law: &PowerLaw,
) -> Result<ParallelSchedule> {
    let mut execution = BTreeMap::new();
    for j in inst.jobs() {
        let e = energies.energies.get(&j.id).copied().ok_or(Error::UnknownJob(j.id))?;
        execution.insert(j.id, law.execution_time(to_f64(&j.volume), e));
    }
    list_schedule_times(inst, m, perm, &execution)
}

/// Search range for the weighted execution time `X* = sum_j w_j x_j` of an optimal schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationBounds {
    pub x_lower: f64,
    pub x_upper: f64,
}

pub fn relaxation_bounds(inst: &Instance, law: &PowerLaw, budget: f64) -> Result<RelaxationBounds> {
    check_budget(budget)?;
    let a = law.alpha_f64();
    let x_lower = inst
        .jobs()
        .iter()
        .map(|j| to_f64(&j.weight) * law.execution_time(to_f64(&j.volume), budget))
        .sum();
    let w_max = inst.jobs().iter().map(|j| to_f64(&j.weight)).fold(0.0, f64::max);
    let v_sum = to_f64(&inst.total_volume());
    let x_upper = if w_max == 0.0 || v_sum == 0.0 {
        0.0
    } else {
        ((inst.len() as f64 * w_max).ln() - budget.ln() / (a - 1.0) + a / (a - 1.0) * v_sum.ln()).exp()
    };
    Ok(RelaxationBounds { x_lower, x_upper: x_upper.max(x_lower) })
}

/// Solution of the fast single-machine relaxation for one bound `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub order: Vec<JobId>,
    pub energies: EnergyAssignment,
    /// Execution time of each job on one original machine (`m` times its time on the fast machine).
    pub execution: BTreeMap<JobId, f64>,
    /// Weighted completion time on the fast machine.
    pub z1: f64,
    /// `sum_j w_j x_j`, at most the bound.
    pub weighted_execution: f64,
    /// Lagrange multiplier of the bound, relative to the scheduling cost.
    pub multiplier: f64,
}

struct Split {
    energies: Vec<f64>,
    execution: Vec<f64>,
    z1: f64,
    weighted_execution: f64,
}

struct Relaxer<'a> {
    inst: &'a Instance,
    m: f64,
    law: &'a PowerLaw,
    budget: f64,
    reserve: f64,
    v: Vec<f64>,
    w: Vec<f64>,
}

impl<'a> Relaxer<'a> {
    fn new(inst: &'a Instance, m: usize, law: &'a PowerLaw, budget: f64, reserve: f64) -> Result<Self> {
        check_budget(budget)?;
        if m == 0 {
            return Err(Error::InvalidParameter("machine count must be positive".into()));
        }
        Ok(Relaxer {
            inst,
            m: m as f64,
            law,
            budget,
            reserve,
            v: inst.jobs().iter().map(|j| to_f64(&j.volume)).collect(),
            w: inst.jobs().iter().map(|j| to_f64(&j.weight)).collect(),
        })
    }

    /// Closed-form split for the coefficients `(1 - theta) W_j / m + theta w_j`.
    fn split(&self, order: &[usize], big_w: &[f64], theta: f64) -> Split {
        let n = order.len();
        let a = self.law.alpha_f64();
        let p = (a - 1.0) / a;
        let share = self.reserve * self.budget / n as f64;
        let mut energies = vec![0.0; n];
        let mut terms = vec![0.0; n];
        let mut reserved = 0usize;
        for (pos, &i) in order.iter().enumerate() {
            if big_w[pos] == 0.0 && self.v[i] > 0.0 {
                energies[i] = share;
                reserved += 1;
            } else {
                let c = (1.0 - theta) * big_w[pos] / self.m + theta * self.w[i];
                terms[i] = self.v[i] * c.powf(p);
            }
        }
        let g: f64 = terms.iter().sum();
        let effective = self.budget - share * reserved as f64;
        if g > 0.0 {
            for i in 0..n {
                if terms[i] > 0.0 {
                    energies[i] = effective * terms[i] / g;
                }
            }
        }
        let total: f64 = energies.iter().sum();
        if total > self.budget {
            let f = self.budget / total;
            energies.iter_mut().for_each(|e| *e *= f);
            while energies.iter().sum::<f64>() > self.budget {
                energies.iter_mut().for_each(|e| *e *= 1.0 - f64::EPSILON);
            }
        }
        let execution: Vec<f64> = (0..n)
            .map(|i| if self.v[i] == 0.0 { 0.0 } else { self.law.execution_time(self.v[i], energies[i]) })
            .collect();
        let mut z1 = 0.0;
        for (pos, &i) in order.iter().enumerate() {
            if big_w[pos] > 0.0 {
                z1 += big_w[pos] * execution[i] / self.m;
            }
        }
        let weighted_execution = (0..n).filter(|&i| self.w[i] > 0.0).map(|i| self.w[i] * execution[i]).sum();
        Split { energies, execution, z1, weighted_execution }
    }

    /// Best split of one order subject to `sum_j w_j x_j <= bound`, with its multiplier share.
    fn solve_order(&self, order: &[usize], bound: f64) -> Option<(Split, f64)> {
        let big_w = remaining_weights(self.inst, order);
        let fits = |s: &Split| s.weighted_execution <= bound * (1.0 + 1e-12);
        let free = self.split(order, &big_w, 0.0);
        if fits(&free) {
            return Some((free, 0.0));
        }
        let tight = self.split(order, &big_w, MAX_MULTIPLIER_SHARE);
        if !fits(&tight) {
            return None;
        }
        let (mut lo, mut hi, mut best) = (0.0, MAX_MULTIPLIER_SHARE, tight);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let s = self.split(order, &big_w, mid);
            if fits(&s) {
                hi = mid;
                best = s;
            } else {
                lo = mid;
            }
        }
        Some((best, hi))
    }

    fn finish(&self, order: &[usize], split: Split, theta: f64) -> Relaxation {
        let ids = self.inst.ids();
        Relaxation {
            order: self.inst.ids_of(order),
            energies: EnergyAssignment {
                energies: ids.iter().copied().zip(split.energies.iter().copied()).collect(),
                budget: self.budget,
            },
            execution: ids.iter().copied().zip(split.execution.iter().copied()).collect(),
            z1: split.z1,
            weighted_execution: split.weighted_execution,
            multiplier: theta / (1.0 - theta),
        }
    }
}

/// Relaxation starting from `start` and improved by adjacent interchanges.
pub fn fast_relaxation_from(
    inst: &Instance,
    m: usize,
    law: &PowerLaw,
    budget: f64,
    bound: f64,
    eps: f64,
    start: &[JobId],
) -> Result<Relaxation> {
    let rx = Relaxer::new(inst, m, law, budget, eps)?;
    let mut order = inst.indices_of(start)?;
    let (mut best, mut theta) = rx
        .solve_order(&order, bound)
        .ok_or_else(|| Error::InfeasibleBudget(format!("no energy split reaches weighted execution time {bound}")))?;
    for _ in 0..order.len() {
        let mut improved = false;
        for k in 0..order.len().saturating_sub(1) {
            order.swap(k, k + 1);
            match rx.solve_order(&order, bound) {
                Some((s, th)) if s.z1 < best.z1 * (1.0 - 1e-12) => {
                    best = s;
                    theta = th;
                    improved = true;
                }
                _ => order.swap(k, k + 1),
            }
        }
        if !improved {
            break;
        }
    }
    Ok(rx.finish(&order, best, theta))
}

/// Fast single-machine relaxation: one machine `m` times as fast, no release dates, energy
/// `budget` and `sum_j w_j x_j <= bound`. Jobs whose remaining weight is zero receive
/// `eps * budget / n` energy each.
pub fn fast_relaxation(inst: &Instance, m: usize, law: &PowerLaw, budget: f64, bound: f64, eps: &Q) -> Result<Relaxation> {
    let start = universal_sequence(inst, law, eps)?;
    fast_relaxation_from(inst, m, law, budget, bound, to_f64(eps), &start)
}

/// Exact relaxation optimum by enumerating every order.
pub fn exact_relaxation(
    inst: &Instance,
    m: usize,
    law: &PowerLaw,
    budget: f64,
    bound: f64,
    eps: f64,
    cfg: &OracleConfig,
) -> Result<Relaxation> {
    if inst.len() > cfg.max_n {
        return Err(Error::InstanceTooLarge { n: inst.len(), bound: cfg.max_n });
    }
    let rx = Relaxer::new(inst, m, law, budget, eps)?;
    let mut order: Vec<usize> = (0..inst.len()).collect();
    let mut best: Option<(Vec<usize>, Split, f64)> = None;
    loop {
        if let Some((s, th)) = rx.solve_order(&order, bound) {
            if best.as_ref().map_or(true, |b| s.z1 < b.1.z1) {
                best = Some((order.clone(), s, th));
            }
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    let (order, s, th) =
        best.ok_or_else(|| Error::InfeasibleBudget(format!("no energy split reaches weighted execution time {bound}")))?;
    Ok(rx.finish(&order, s, th))
}

fn next_permutation(a: &mut [usize]) -> bool {
    let Some(i) = (1..a.len()).rev().find(|&i| a[i - 1] < a[i]) else {
        return false;
    };
    let j = (i..a.len()).rev().find(|&j| a[j] > a[i - 1]).expect("successor exists");
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelReport {
    pub eps_prime: f64,
    pub bounds: RelaxationBounds,
    /// Bound `X'` of the returned solution.
    pub x_prime: f64,
    /// Relaxation cost `Z1(X')` of the returned solution.
    pub z1: f64,
    pub weighted_execution: f64,
    /// `sum_j w_j r_j`.
    pub weighted_release: f64,
    /// `sum_j w_j r_j + (1 + eps') Z1(X') + X'`.
    pub certified_bound: f64,
    pub grid_points: usize,
    pub feasible_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelSolution {
    pub order: Vec<JobId>,
    pub energies: EnergyAssignment,
    pub schedule: ParallelSchedule,
    pub cost: f64,
    pub report: ParallelReport,
}

/// Per-job completion bound `r_j + sum_{k before j} x_k / m + x_j` of list scheduling.
pub fn completion_bounds(inst: &Instance, m: usize, perm: &[JobId], execution: &BTreeMap<JobId, f64>) -> Result<BTreeMap<JobId, f64>> {
    let mut before = 0.0;
    let mut out = BTreeMap::new();
    for &id in perm {
        let j = inst.job(id)?;
        let x = execution.get(&id).copied().ok_or(Error::UnknownJob(id))?;
        out.insert(id, to_f64(&j.release) + before / m as f64 + x);
        before += x;
    }
    Ok(out)
}

/// Runs the relaxation for `X = X_L (1 + eps/2)^i` up to `X_U`, list-schedules each result and
/// returns the cheapest schedule together with the certified bound of its run.
pub fn solve(inst: &Instance, m: usize, law: &PowerLaw, budget: f64, eps: &Q) -> Result<ParallelSolution> {
    if !(eps.is_positive() && *eps < Q::one() / Q::from_integer(2.into())) {
        return Err(Error::InvalidParameter("eps must lie in (0, 1/2)".into()));
    }
    let eps_prime_q = eps / Q::from_integer(2.into());
    let eps_prime = to_f64(&eps_prime_q);
    let bounds = relaxation_bounds(inst, law, budget)?;
    let grid: Vec<f64> = if bounds.x_lower <= 0.0 {
        vec![bounds.x_upper]
    } else {
        let steps = ((bounds.x_upper / bounds.x_lower).ln() / eps_prime.ln_1p()).ceil().max(0.0) as i32;
        (0..=steps).map(|i| bounds.x_lower * (1.0 + eps_prime).powi(i)).collect()
    };
    let start = universal_sequence(inst, law, &eps_prime_q)?;
    let weighted_release: f64 = inst.jobs().iter().map(|j| to_f64(&j.weight) * to_f64(&j.release)).sum();
    let mut best: Option<(ParallelSolution, f64)> = None;
    let mut feasible = 0usize;
    for &x in &grid {
        let relax = match fast_relaxation_from(inst, m, law, budget, x, eps_prime, &start) {
            Ok(r) => r,
            Err(Error::InfeasibleBudget(_)) => continue,
            Err(e) => return Err(e),
        };
        feasible += 1;
        let schedule = list_schedule_times(inst, m, &relax.order, &relax.execution)?;
        let cost = schedule.cost(inst);
        if best.as_ref().map_or(true, |b| cost < b.0.cost) {
            let certified = weighted_release + (1.0 + eps_prime) * relax.z1 + x;
            let sol = ParallelSolution {
                order: relax.order.clone(),
                energies: relax.energies.clone(),
                schedule,
                cost,
                report: ParallelReport {
                    eps_prime,
                    bounds,
                    x_prime: x,
                    z1: relax.z1,
                    weighted_execution: relax.weighted_execution,
                    weighted_release,
                    certified_bound: certified,
                    grid_points: grid.len(),
                    feasible_points: 0,
                },
            };
            best = Some((sol, x));
        }
    }
    let (mut sol, _) = best.ok_or_else(|| {
        Error::InvariantViolation(format!(
            "no bound in [{}, {}] admits a relaxation",
            bounds.x_lower, bounds.x_upper
        ))
    })?;
    sol.report.feasible_points = feasible;
    check_solution(inst, m, budget, &sol)?;
    Ok(sol)
}

/// Asserts feasibility, the energy budget, per-job list-scheduling bounds and the certified bound.
pub fn check_solution(inst: &Instance, m: usize, budget: f64, sol: &ParallelSolution) -> Result<()> {
    sol.schedule.validate(inst)?;
    let total = sol.energies.total();
    if total > budget {
        return Err(Error::InvariantViolation(format!("energy {total} exceeds budget {budget}")));
    }
    let bounds = completion_bounds(inst, m, &sol.order, &sol.schedule.execution)?;
    for (id, b) in &bounds {
        let c = sol.schedule.completions[id];
        if c > b * (1.0 + TOLERANCE) + TOLERANCE {
            return Err(Error::InvariantViolation(format!("job {id} completes at {c}, list bound {b}")));
        }
    }
    if sol.cost > sol.report.certified_bound * (1.0 + TOLERANCE) {
        return Err(Error::InvariantViolation(format!(
            "cost {} exceeds certified bound {}",
            sol.cost, sol.report.certified_bound
        )));
    }
    if sol.report.weighted_execution > sol.report.x_prime * (1.0 + TOLERANCE) {
        return Err(Error::InvariantViolation("relaxation exceeds its bound".into()));
    }
    Ok(())
}

/// Rows `machine,job,start,end` sorted by machine then start.
pub fn timeline_csv(schedule: &ParallelSchedule) -> String {
    let mut rows: Vec<(usize, f64, f64, JobId)> = schedule
        .fragments
        .iter()
        .flat_map(|(id, fs)| fs.iter().map(move |f| (f.machine, f.start, f.end, *id)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.3.cmp(&b.3)));
    let mut out = String::from("machine,job,start,end\n");
    for (mch, s, e, id) in rows {
        out.push_str(&format!("{mch},{id},{s},{e}\n"));
    }
    out
}
