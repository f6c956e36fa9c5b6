//! Continuous speed scaling with power `P(s) = s^alpha` under an energy budget.

use std::collections::BTreeMap;

use num::traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, InstanceKind, Job, JobId, PowerLaw};
use crate::ptas::{self, PtasConfig};
use crate::rational::{to_f64, Q};
use crate::schedule::EnergyAssignment;
use crate::speed::PowerOracle;

/// Remaining weight `W_j` (weight of `j` and every later job) along a time order of indices.
pub fn remaining_weights(inst: &Instance, order: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; order.len()];
    let mut acc = 0.0;
    for (pos, &i) in order.iter().enumerate().rev() {
        acc += to_f64(&inst.jobs()[i].weight);
        w[pos] = acc;
    }
    w
}

/// `gamma = sum_j v_j W_j^((alpha-1)/alpha)` along a time order of indices.
pub fn gamma(inst: &Instance, order: &[usize], law: &PowerLaw) -> f64 {
    let p = (law.alpha_f64() - 1.0) / law.alpha_f64();
    remaining_weights(inst, order)
        .iter()
        .zip(order)
        .map(|(w, &i)| to_f64(&inst.jobs()[i].volume) * w.powf(p))
        .sum()
}

/// `E^(-1/(alpha-1)) gamma^(alpha/(alpha-1))`.
pub fn cost_from_gamma(gamma: f64, law: &PowerLaw, budget: f64) -> f64 {
    let a = law.alpha_f64();
    ((a * gamma.ln() - budget.ln()) / (a - 1.0)).exp()
}

/// Optimal scheduling cost of a fixed order of ids.
pub fn order_cost(inst: &Instance, order: &[JobId], law: &PowerLaw, budget: f64) -> Result<f64> {
    check_budget(budget)?;
    let idx = inst.indices_of(order)?;
    Ok(cost_from_gamma(gamma(inst, &idx, law), law, budget))
}

pub(crate) fn check_budget(budget: f64) -> Result<()> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidParameter(format!("budget must be positive, got {budget}")));
    }
    Ok(())
}

/// Cost `sum_j W_j x_j` of an explicit energy assignment along a time order of ids.
pub fn assignment_cost(inst: &Instance, order: &[JobId], law: &PowerLaw, a: &EnergyAssignment) -> Result<f64> {
    let idx = inst.indices_of(order)?;
    let w = remaining_weights(inst, &idx);
    let mut cost = 0.0;
    for (pos, &i) in idx.iter().enumerate() {
        let j = &inst.jobs()[i];
        let e = a.energies.get(&j.id).copied().ok_or(Error::UnknownJob(j.id))?;
        if w[pos] == 0.0 {
            continue;
        }
        cost += w[pos] * law.execution_time(to_f64(&j.volume), e);
    }
    Ok(cost)
}

/// Per-job energies proportional to `v_j W_j^((alpha-1)/alpha)`.
pub fn optimal_energy_split(inst: &Instance, order: &[JobId], law: &PowerLaw, budget: f64) -> Result<EnergyAssignment> {
    check_budget(budget)?;
    let idx = inst.indices_of(order)?;
    let p = (law.alpha_f64() - 1.0) / law.alpha_f64();
    let w = remaining_weights(inst, &idx);
    let terms: Vec<f64> = idx
        .iter()
        .zip(&w)
        .map(|(&i, wj)| to_f64(&inst.jobs()[i].volume) * wj.powf(p))
        .collect();
    let g: f64 = terms.iter().sum();
    if g <= 0.0 {
        return Err(Error::InvalidInstance("every job has zero volume or zero remaining weight".into()));
    }
    let energies: BTreeMap<JobId, f64> = idx
        .iter()
        .zip(&terms)
        .map(|(&i, t)| (inst.jobs()[i].id, t / g * budget))
        .collect();
    Ok(EnergyAssignment { energies, budget })
}

/// Energy split with a reserve of `eps * budget / n` for every job of positive volume whose
/// remaining weight is zero; the rest of the budget follows [`optimal_energy_split`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservedSplit {
    pub assignment: EnergyAssignment,
    /// Ids that received the reserve share.
    pub reserved: Vec<JobId>,
    /// Budget left for the closed-form split.
    pub effective_budget: f64,
}

pub fn split_with_reserve(inst: &Instance, order: &[JobId], law: &PowerLaw, budget: f64, eps: f64) -> Result<ReservedSplit> {
    check_budget(budget)?;
    let idx = inst.indices_of(order)?;
    let w = remaining_weights(inst, &idx);
    let reserved: Vec<JobId> = idx
        .iter()
        .zip(&w)
        .filter(|(&i, &wj)| wj == 0.0 && inst.jobs()[i].volume.is_positive())
        .map(|(&i, _)| inst.jobs()[i].id)
        .collect();
    let share = eps * budget / inst.len() as f64;
    let effective_budget = budget - share * reserved.len() as f64;
    let mut assignment = if reserved.len() == inst.len() {
        EnergyAssignment { energies: BTreeMap::new(), budget }
    } else {
        optimal_energy_split(inst, order, law, effective_budget)?
    };
    assignment.budget = budget;
    for id in &reserved {
        assignment.energies.insert(*id, share);
    }
    for j in inst.jobs() {
        assignment.energies.entry(j.id).or_insert(0.0);
    }
    Ok(ReservedSplit { assignment, reserved, effective_budget })
}

/// Instance with volumes and weights exchanged.
fn swapped(inst: &Instance) -> Result<Instance> {
    Instance::new(
        inst.jobs().iter().map(|j| Job::new(j.id, j.weight.clone(), j.volume.clone())).collect(),
        InstanceKind::GivenSpeed,
    )
}

/// Job order that is near optimal for every energy budget.
///
/// Minimizes `sum_j v_j W_j^((alpha-1)/alpha)`: in reverse time order this is a given-speed
/// problem with volumes `w_j`, weights `v_j` and speed oracle `f(x) = x^((alpha-1)/alpha)`.
pub fn universal_sequence(inst: &Instance, law: &PowerLaw, eps: &Q) -> Result<Vec<JobId>> {
    let sw = swapped(inst)?;
    let exponent = (law.alpha() - Q::one()) / law.alpha();
    let oracle = PowerOracle::new(&exponent)?;
    let sol = ptas::solve(&sw, &oracle, &PtasConfig::new(eps.clone()))?;
    let mut order = sol.order;
    order.reverse();
    Ok(order)
}

/// Cost as a function of the budget for one fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoCurve {
    pub order: Vec<JobId>,
    pub gamma: f64,
    pub alpha: f64,
}

impl ParetoCurve {
    pub fn new(inst: &Instance, order: Vec<JobId>, law: &PowerLaw) -> Result<Self> {
        let idx = inst.indices_of(&order)?;
        Ok(ParetoCurve { gamma: gamma(inst, &idx, law), order, alpha: law.alpha_f64() })
    }

    /// `gamma^(alpha/(alpha-1)) E^(-1/(alpha-1))`.
    pub fn cost(&self, budget: f64) -> f64 {
        let a = self.alpha;
        ((a * self.gamma.ln() - budget.ln()) / (a - 1.0)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub budget: f64,
    pub cost: f64,
    pub split: ReservedSplit,
}

/// Sixteen budgets `2^-8, ..., 2^7`.
pub fn default_budgets() -> Vec<f64> {
    (-8..8).map(|k| 2f64.powi(k)).collect()
}

/// One universal sequence evaluated at every budget.
pub fn pareto(inst: &Instance, law: &PowerLaw, eps: &Q, budgets: &[f64]) -> Result<(ParetoCurve, Vec<ParetoPoint>)> {
    for &b in budgets {
        check_budget(b)?;
    }
    let order = universal_sequence(inst, law, eps)?;
    let curve = ParetoCurve::new(inst, order, law)?;
    let eps = to_f64(eps);
    let points = budgets
        .iter()
        .map(|&budget| {
            let split = split_with_reserve(inst, &curve.order, law, budget, eps)?;
            Ok(ParetoPoint { budget, cost: curve.cost(split.effective_budget), split })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((curve, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn law(a: i64) -> PowerLaw {
        PowerLaw::new(qi(a)).unwrap()
    }

    fn inst(jobs: &[(i64, i64)]) -> Instance {
        Instance::new(
            jobs.iter().enumerate().map(|(i, &(v, w))| Job::new(i as u32 + 1, qi(v), qi(w))).collect(),
            InstanceKind::ContinuousEnergy,
        )
        .unwrap()
    }

    #[test]
    fn two_unit_jobs_split() {
        let a = optimal_energy_split(&inst(&[(1, 1), (1, 1)]), &[1, 2], &law(2), 1.0).unwrap();
        let r2 = 2f64.sqrt();
        assert!((a.energies[&1] - r2 / (r2 + 1.0)).abs() < 1e-12);
        assert!((a.energies[&2] - 1.0 / (r2 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn single_job_gets_everything() {
        let a = optimal_energy_split(&inst(&[(3, 2)]), &[1], &law(3), 2.5).unwrap();
        assert_eq!(a.energies[&1], 2.5);
    }

    #[test]
    fn identical_jobs_get_decreasing_energy() {
        let i = inst(&[(2, 3); 5]);
        let a = optimal_energy_split(&i, &[1, 2, 3, 4, 5], &law(2), 1.0).unwrap();
        for k in 1..5u32 {
            assert!(a.energies[&k] > a.energies[&(k + 1)]);
        }
    }

    #[test]
    fn curve_halves_when_budget_doubles() {
        let c = ParetoCurve::new(&inst(&[(1, 2), (3, 1)]), vec![1, 2], &law(2)).unwrap();
        assert!((c.cost(2.0) / c.cost(1.0) - 0.5).abs() < 1e-12);
        let one = ParetoCurve::new(&inst(&[(1, 1)]), vec![1], &law(3)).unwrap();
        assert!((one.cost(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trailing_zero_weight_job_gets_reserve() {
        let i = inst(&[(1, 2), (2, 0)]);
        let s = split_with_reserve(&i, &[1, 2], &law(2), 1.0, 0.1).unwrap();
        assert_eq!(s.reserved, vec![2]);
        assert!((s.assignment.energies[&2] - 0.05).abs() < 1e-15);
        assert!((s.assignment.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn universal_sequence_handles_zero_fields() {
        let i = inst(&[(1, 2), (2, 0), (0, 3), (2, 2)]);
        let order = universal_sequence(&i, &law(2), &q(1, 5)).unwrap();
        assert_eq!(order[0], 3);
        assert_eq!(*order.last().unwrap(), 2);
    }
}
