//! Cost-bounded transforms that create idle weight.

use std::collections::{BTreeMap, BTreeSet};

use num::traits::{One, Signed};

use crate::error::Result;
use crate::grid::{check_eps, WeightIntervalGrid};
use crate::model::{Instance, JobId};
use crate::rational::Q;
use crate::schedule::WeightSchedule;

/// Multiplies every completion weight by `1 + eps`.
pub fn weight_stretch(ws: &WeightSchedule, eps: &Q) -> Result<WeightSchedule> {
    check_eps(eps)?;
    let f = Q::one() + eps;
    Ok(WeightSchedule::new(ws.completions().iter().map(|(&id, c)| (id, c * &f)).collect()))
}

/// Result of [`stretch_intervals`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StretchOutcome {
    pub schedule: WeightSchedule,
    /// Intervals `I_u` that a single job covered completely before the transform.
    pub fully_covered: Vec<i64>,
}

/// Delays each `C_j^w` in `I_u` by `|I_u|` and packs the jobs that lie inside one interval downward.
pub fn stretch_intervals(inst: &Instance, ws: &WeightSchedule, eps: &Q) -> Result<StretchOutcome> {
    ws.validate(inst)?;
    let grid = WeightIntervalGrid::new(eps, &inst.total_weight())?;
    let weight = |id: JobId| inst.job(id).map(|j| j.weight.clone());

    let min_c = ws.completions().values().filter(|c| c.is_positive()).min().cloned();
    let mut covered = BTreeSet::new();
    if let Some(min_c) = &min_c {
        let floor_u = grid.index_of(min_c);
        for (&id, c) in ws.completions() {
            let w = weight(id)?;
            if !w.is_positive() {
                continue;
            }
            let s = c - &w;
            let first = if s.is_positive() { grid.index_of(&s) } else { floor_u };
            for u in first..=grid.index_of(c) {
                if u >= floor_u && grid.lo(u) >= s && grid.hi(u) <= *c {
                    covered.insert(u);
                }
            }
        }
    }

    let mut moved: BTreeMap<JobId, Q> = BTreeMap::new();
    for (&id, c) in ws.completions() {
        let c2 = if c.is_positive() { c + grid.len(grid.index_of(c)) } else { c.clone() };
        moved.insert(id, c2);
    }

    // group jobs lying entirely inside one interval
    let mut inside: BTreeMap<i64, Vec<(Q, JobId)>> = BTreeMap::new();
    let mut straddle_top: BTreeMap<i64, Q> = BTreeMap::new();
    for (&id, c) in &moved {
        if !c.is_positive() {
            continue;
        }
        let w = weight(id)?;
        let s = c - &w;
        let u = grid.index_of(c);
        if s >= grid.lo(u) {
            inside.entry(u).or_default().push((s, id));
        } else {
            straddle_top.insert(u, c.clone());
        }
    }
    for (u, mut jobs) in inside {
        if covered.contains(&(u - 1)) {
            continue;
        }
        jobs.sort();
        let mut top = straddle_top.get(&u).cloned().unwrap_or_else(|| grid.lo(u));
        if top < grid.lo(u) {
            top = grid.lo(u);
        }
        for (_, id) in jobs {
            let w = weight(id)?;
            top += &w;
            moved.insert(id, top.clone());
        }
    }
    Ok(StretchOutcome { schedule: WeightSchedule::new(moved), fully_covered: covered.into_iter().collect() })
}
