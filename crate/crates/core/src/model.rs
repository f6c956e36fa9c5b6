//! Jobs, instances and machine models.

use std::collections::HashMap;

use num::traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_q, serde_q, serde_q_vec, to_f64, Q};

pub type JobId = u32;

/// A job with work volume (processing time at speed 1), weight and release date.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    #[serde(rename = "v", with = "serde_q")]
    pub volume: Q,
    #[serde(rename = "w", with = "serde_q")]
    pub weight: Q,
    #[serde(rename = "r", with = "serde_q", default = "Q::zero")]
    pub release: Q,
}

impl Job {
    pub fn new(id: JobId, volume: Q, weight: Q) -> Self {
        Job { id, volume, weight, release: Q::zero() }
    }

    pub fn with_release(mut self, release: Q) -> Self {
        self.release = release;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    GivenSpeed,
    ContinuousEnergy,
    DiscreteEnergy,
}

/// A validated, nonempty set of jobs with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    jobs: Vec<Job>,
    kind: InstanceKind,
    index: HashMap<JobId, usize>,
}

impl Instance {
    pub fn new(jobs: Vec<Job>, kind: InstanceKind) -> Result<Self> {
        if jobs.is_empty() {
            return Err(Error::InvalidInstance("instance has no jobs".into()));
        }
        let mut index = HashMap::with_capacity(jobs.len());
        for (i, j) in jobs.iter().enumerate() {
            if j.volume.is_negative() || j.weight.is_negative() || j.release.is_negative() {
                return Err(Error::InvalidInstance(format!("job {} has a negative field", j.id)));
            }
            if kind == InstanceKind::GivenSpeed && !j.release.is_zero() {
                return Err(Error::InvalidInstance(format!(
                    "job {} has release {} in a given-speed instance",
                    j.id,
                    format_q(&j.release)
                )));
            }
            if index.insert(j.id, i).is_some() {
                return Err(Error::InvalidInstance(format!("duplicate job id {}", j.id)));
            }
        }
        Ok(Instance { jobs, kind, index })
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn job(&self, id: JobId) -> Result<&Job> {
        self.index_of(id).map(|i| &self.jobs[i])
    }

    pub fn index_of(&self, id: JobId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownJob(id))
    }

    pub fn ids(&self) -> Vec<JobId> {
        self.jobs.iter().map(|j| j.id).collect()
    }

    pub fn total_volume(&self) -> Q {
        self.jobs.iter().fold(Q::zero(), |a, j| a + &j.volume)
    }

    pub fn total_weight(&self) -> Q {
        self.jobs.iter().fold(Q::zero(), |a, j| a + &j.weight)
    }

    /// Same jobs under a different kind tag.
    pub fn with_kind(&self, kind: InstanceKind) -> Result<Self> {
        Instance::new(self.jobs.clone(), kind)
    }

    /// Maps job indices to ids.
    pub fn ids_of(&self, order: &[usize]) -> Vec<JobId> {
        order.iter().map(|&i| self.jobs[i].id).collect()
    }

    /// Maps a permutation of ids to indices, checking it covers every job exactly once.
    pub fn indices_of(&self, order: &[JobId]) -> Result<Vec<usize>> {
        if order.len() != self.len() {
            return Err(Error::InvalidSchedule(format!(
                "permutation has {} entries for {} jobs",
                order.len(),
                self.len()
            )));
        }
        let mut seen = vec![false; self.len()];
        order
            .iter()
            .map(|&id| {
                let i = self.index_of(id)?;
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidSchedule(format!("job {id} repeated in permutation")));
                }
                Ok(i)
            })
            .collect()
    }
}

/// Finite set of speeds `s_1 > ... > s_k > 0` with power values `P(s_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteSpeedMenu {
    #[serde(with = "serde_q_vec")]
    speeds: Vec<Q>,
    #[serde(with = "serde_q_vec")]
    power: Vec<Q>,
}

impl DiscreteSpeedMenu {
    pub fn new(speeds: Vec<Q>, power: Vec<Q>) -> Result<Self> {
        if speeds.is_empty() || speeds.len() != power.len() {
            return Err(Error::InvalidParameter("menu needs matching nonempty speeds and powers".into()));
        }
        if speeds.iter().any(|s| !s.is_positive()) || power.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidParameter("menu speeds must be positive and powers nonnegative".into()));
        }
        if speeds.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidParameter("menu speeds must be strictly decreasing".into()));
        }
        Ok(DiscreteSpeedMenu { speeds, power })
    }

    /// Menu with `P(s) = s^alpha` for an integer exponent.
    pub fn power_law(speeds: Vec<Q>, alpha: u32) -> Result<Self> {
        let power = speeds.iter().map(|s| s.pow(alpha as i32)).collect();
        DiscreteSpeedMenu::new(speeds, power)
    }

    pub fn speeds(&self) -> &[Q] {
        &self.speeds
    }

    pub fn power(&self) -> &[Q] {
        &self.power
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    /// Energy per unit of work at speed `i`.
    pub fn energy_per_work(&self, i: usize) -> Q {
        &self.power[i] / &self.speeds[i]
    }

    /// Smallest energy per unit of work over the menu.
    pub fn min_energy_per_work(&self) -> Q {
        (0..self.len()).map(|i| self.energy_per_work(i)).min().expect("nonempty menu")
    }

    /// The same menu with every speed multiplied by `factor`, keeping energy per unit time.
    pub fn scaled(&self, factor: &Q) -> Result<Self> {
        DiscreteSpeedMenu::new(self.speeds.iter().map(|s| s * factor).collect(), self.power.clone())
    }
}

/// Continuous speeds with power `P(s) = s^alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerLaw {
    #[serde(with = "serde_q")]
    alpha: Q,
}

impl PowerLaw {
    pub fn new(alpha: Q) -> Result<Self> {
        if alpha <= Q::one() {
            return Err(Error::InvalidParameter(format!(
                "alpha must exceed 1, got {}",
                format_q(&alpha)
            )));
        }
        Ok(PowerLaw { alpha })
    }

    pub fn alpha(&self) -> &Q {
        &self.alpha
    }

    pub fn alpha_f64(&self) -> f64 {
        to_f64(&self.alpha)
    }

    /// Execution time of volume `v` under energy `e`: `(v^alpha / e)^(1/(alpha-1))`.
    pub fn execution_time(&self, v: f64, e: f64) -> f64 {
        let a = self.alpha_f64();
        if v == 0.0 {
            return 0.0;
        }
        ((a * v.ln() - e.ln()) / (a - 1.0)).exp()
    }

    /// Energy needed to run volume `v` in time `x`: `v^alpha / x^(alpha-1)`.
    pub fn energy_for_time(&self, v: f64, x: f64) -> f64 {
        let a = self.alpha_f64();
        if v == 0.0 {
            return 0.0;
        }
        (a * v.ln() - (a - 1.0) * x.ln()).exp()
    }
}
