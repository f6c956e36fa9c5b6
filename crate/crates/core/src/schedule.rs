//! Weight-schedules, time-schedules and their costs.

use std::collections::BTreeMap;

use num::traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, JobId};
use crate::rational::{format_q, Q};
use crate::speed::SpeedOracle;

/// Serde adapter for maps from job id to rational.
pub(crate) mod serde_q_map {
    use super::*;
    use crate::rational::serde_q;
    use serde::ser::SerializeMap;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<JobId, Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(&k.to_string(), &format_q(v))?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<JobId, Q>, D::Error> {
        let raw = BTreeMap::<String, serde_json::Value>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                let id = k.parse::<JobId>().map_err(de::Error::custom)?;
                let q = serde_q::from_value(&v).map_err(de::Error::custom)?;
                Ok((id, q))
            })
            .collect()
    }
}

/// Completion weights `C_j^w`; job `j` occupies `[C_j^w - w_j, C_j^w)` in weight-space.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WeightSchedule {
    #[serde(with = "serde_q_map")]
    completions: BTreeMap<JobId, Q>,
}

impl WeightSchedule {
    pub fn new(completions: BTreeMap<JobId, Q>) -> Self {
        WeightSchedule { completions }
    }

    /// Schedule without idle weight for a time order (first entry runs first).
    pub fn from_order(inst: &Instance, order: &[JobId]) -> Result<Self> {
        let idx = inst.indices_of(order)?;
        let mut acc = Q::zero();
        let mut completions = BTreeMap::new();
        for &i in idx.iter().rev() {
            let j = &inst.jobs()[i];
            acc += &j.weight;
            completions.insert(j.id, acc.clone());
        }
        Ok(WeightSchedule { completions })
    }

    pub fn completions(&self) -> &BTreeMap<JobId, Q> {
        &self.completions
    }

    pub fn completion(&self, id: JobId) -> Option<&Q> {
        self.completions.get(&id)
    }

    pub fn len(&self) -> usize {
        self.completions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.completions.is_empty()
    }

    /// Same schedule with one completion weight replaced.
    pub fn with_completion(&self, id: JobId, c: Q) -> Self {
        let mut s = self.clone();
        s.completions.insert(id, c);
        s
    }

    /// Checks that every job is present, starting weights are nonnegative and intervals are disjoint.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.completions.len() != inst.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} completion weights for {} jobs",
                self.completions.len(),
                inst.len()
            )));
        }
        let mut spans = Vec::with_capacity(inst.len());
        for j in inst.jobs() {
            let c = self.completions.get(&j.id).ok_or(Error::UnknownJob(j.id))?;
            let s = c - &j.weight;
            if s.is_negative() {
                return Err(Error::InvalidSchedule(format!("job {} starts at negative weight", j.id)));
            }
            if j.weight.is_positive() {
                spans.push((s, c.clone(), j.id));
            }
        }
        spans.sort();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidSchedule(format!("jobs {} and {} overlap", w[0].2, w[1].2)));
            }
        }
        Ok(())
    }

    /// Time order: decreasing completion weight, ties by ascending id.
    pub fn time_order(&self, inst: &Instance) -> Result<Vec<JobId>> {
        self.validate(inst)?;
        let mut ids: Vec<(&Q, JobId)> = self.completions.iter().map(|(&id, c)| (c, id)).collect();
        ids.sort_by(|a, b| b.0.cmp(a.0).then(a.1.cmp(&b.1)));
        Ok(ids.into_iter().map(|(_, id)| id).collect())
    }

    /// Largest completion weight.
    pub fn max_completion(&self) -> Q {
        self.completions.values().max().cloned().unwrap_or_else(Q::zero)
    }

    /// Weight in `[0, max C^w)` not covered by any job.
    pub fn idle_weight(&self, inst: &Instance) -> Q {
        self.max_completion() - inst.total_weight()
    }

    /// `V(w) = sum of v_j over jobs with C_j^w > w`.
    pub fn remaining_volume(&self, inst: &Instance, w: &Q) -> Q {
        inst.jobs()
            .iter()
            .filter(|j| self.completions.get(&j.id).is_some_and(|c| c > w))
            .fold(Q::zero(), |a, j| a + &j.volume)
    }
}

/// Jobs in processing order with completion and execution times; no idle time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSchedule {
    pub order: Vec<JobId>,
    #[serde(with = "serde_q_map")]
    pub completions: BTreeMap<JobId, Q>,
    #[serde(with = "serde_q_map")]
    pub executions: BTreeMap<JobId, Q>,
}

/// Per-job energies under a budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAssignment {
    pub energies: BTreeMap<JobId, f64>,
    pub budget: f64,
}

impl EnergyAssignment {
    pub fn total(&self) -> f64 {
        self.energies.values().sum()
    }
}

/// Runs jobs back to back in `order` on the oracle's machine.
pub fn time_schedule(inst: &Instance, order: &[JobId], oracle: &dyn SpeedOracle) -> Result<TimeSchedule> {
    let idx = inst.indices_of(order)?;
    let mut prefix = Q::zero();
    let mut prev = Q::zero();
    let mut completions = BTreeMap::new();
    let mut executions = BTreeMap::new();
    for &i in &idx {
        let j = &inst.jobs()[i];
        prefix += &j.volume;
        let c = oracle.time(&prefix)?;
        executions.insert(j.id, &c - &prev);
        completions.insert(j.id, c.clone());
        prev = c;
    }
    Ok(TimeSchedule { order: order.to_vec(), completions, executions })
}

/// `sum_j w_j C_j`.
pub fn time_cost(inst: &Instance, ts: &TimeSchedule) -> Q {
    inst.jobs()
        .iter()
        .fold(Q::zero(), |a, j| a + &j.weight * &ts.completions[&j.id])
}

/// `integral_0^inf W(t) dt` with `W(t)` the weight of jobs completing strictly after `t`.
pub fn remaining_weight_integral(inst: &Instance, ts: &TimeSchedule) -> Q {
    let mut events: Vec<(&Q, &Q)> = inst.jobs().iter().map(|j| (&ts.completions[&j.id], &j.weight)).collect();
    events.sort_by(|a, b| a.0.cmp(b.0));
    let mut remaining = inst.total_weight();
    let mut prev = Q::zero();
    let mut area = Q::zero();
    for (t, w) in events {
        area += &remaining * (t - &prev);
        remaining -= w;
        prev = t.clone();
    }
    area
}

/// Time-schedule induced by ordering jobs by decreasing completion weight.
pub fn to_time_schedule(inst: &Instance, ws: &WeightSchedule, oracle: &dyn SpeedOracle) -> Result<TimeSchedule> {
    let order = ws.time_order(inst)?;
    time_schedule(inst, &order, oracle)
}

/// `sum_j x_j C_j^w` over the induced time-schedule.
pub fn weight_cost(inst: &Instance, ws: &WeightSchedule, oracle: &dyn SpeedOracle) -> Result<Q> {
    let ts = to_time_schedule(inst, ws, oracle)?;
    Ok(ts
        .executions
        .iter()
        .fold(Q::zero(), |a, (id, x)| a + x * &ws.completions[id]))
}

/// Cost of running jobs in `order`.
pub fn order_cost(inst: &Instance, order: &[JobId], oracle: &dyn SpeedOracle) -> Result<Q> {
    Ok(time_cost(inst, &time_schedule(inst, order, oracle)?))
}
