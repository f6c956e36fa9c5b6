//! Smith in weight-space: greedy placement of light jobs around a fixed heavy skeleton.

use std::collections::BTreeMap;

use num::traits::{One, Signed};

use crate::error::Result;
use crate::grid::WeightIntervalGrid;
use crate::model::{Instance, JobId};
use crate::rational::Q;
use crate::schedule::WeightSchedule;

/// A piece of a job occupying `[start, end)` in weight-space.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Piece {
    job: JobId,
    start: Q,
    end: Q,
}

/// Intervals not covered by any piece inside `[lo, hi)`, in increasing order.
fn gaps(pieces: &[Piece], lo: &Q, hi: &Q) -> Vec<(Q, Q)> {
    let mut spans: Vec<(&Q, &Q)> = pieces.iter().filter(|p| p.end > *lo && p.start < *hi).map(|p| (&p.start, &p.end)).collect();
    spans.sort();
    let mut out = Vec::new();
    let mut at = lo.clone();
    for (s, e) in spans {
        if *s > at {
            out.push((at.clone(), s.clone().min(hi.clone())));
        }
        if *e > at {
            at = e.clone();
        }
    }
    if at < *hi {
        out.push((at, hi.clone()));
    }
    out
}

/// Packs the pieces lying inside each interval downward, leaving the idle weight on top.
fn consolidate(grid: &WeightIntervalGrid, pieces: &mut [Piece], skip: &[i64]) {
    let mut straddle_top: BTreeMap<i64, Q> = BTreeMap::new();
    let mut inside: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, p) in pieces.iter().enumerate() {
        if !p.end.is_positive() {
            continue;
        }
        let u = grid.index_of(&p.end);
        let lo = grid.lo(u);
        if p.start >= lo && p.end > p.start {
            inside.entry(u).or_default().push(i);
        } else if p.start < lo {
            let e = straddle_top.entry(u).or_insert_with(|| lo.clone());
            if p.end > *e {
                *e = p.end.clone();
            }
        }
    }
    for (u, mut idx) in inside {
        if skip.contains(&u) {
            continue;
        }
        idx.sort_by(|&a, &b| pieces[a].start.cmp(&pieces[b].start));
        let mut top = straddle_top.get(&u).cloned().unwrap_or_else(|| grid.lo(u));
        for i in idx {
            let len = &pieces[i].end - &pieces[i].start;
            pieces[i].start = top.clone();
            top += len;
            pieces[i].end = top.clone();
        }
    }
}

/// Removes light jobs, consolidates idle weight, refills it by Reverse Smith's rule
/// (largest `v/w` first among jobs with `w <= eps^2 |I_u|`), stretches intervals and
/// finally makes every light job contiguous again.
///
/// A job is light when `w_j <= eps^2 |I_u|` for the interval `I_u` holding its starting
/// weight; a job starting at weight 0 counts as heavy.
pub fn classify_and_smith(inst: &Instance, ws: &WeightSchedule, eps: &Q) -> Result<WeightSchedule> {
    ws.validate(inst)?;
    let grid = WeightIntervalGrid::new(eps, &inst.total_weight().max(Q::one()))?;
    let eps2 = eps * eps;
    let mut heavy: Vec<Piece> = Vec::new();
    let mut light: Vec<JobId> = Vec::new();
    for j in inst.jobs() {
        let c = ws.completion(j.id).expect("validated").clone();
        let s = &c - &j.weight;
        let is_light = s.is_positive() && j.weight.is_positive() && j.weight <= &eps2 * grid.len(grid.index_of(&s));
        if is_light {
            light.push(j.id);
        } else {
            heavy.push(Piece { job: j.id, start: s, end: c });
        }
    }
    if light.is_empty() {
        return Ok(ws.clone());
    }

    // step 1: idle weight consecutive inside each interval
    consolidate(&grid, &mut heavy, &[]);

    // step 2: Reverse Smith fill, preemptive
    let ratio = |id: JobId| {
        let j = inst.job(id).expect("known id");
        &j.volume / &j.weight
    };
    light.sort_by(|&a, &b| ratio(b).cmp(&ratio(a)).then(b.cmp(&a)));
    let mut left: BTreeMap<JobId, Q> = light.iter().map(|&id| (id, inst.job(id).expect("id").weight.clone())).collect();
    let first_u = light
        .iter()
        .map(|&id| {
            let w = &inst.job(id).expect("id").weight;
            // smallest u with eps^2 |I_u| >= w
            crate::rational::ceil_log(grid.base(), &(w / (&eps2 * eps))) + 1
        })
        .min()
        .expect("nonempty");
    let mut pieces = heavy.clone();
    let mut u = first_u;
    while left.values().any(|w| w.is_positive()) {
        let cap = &eps2 * grid.len(u);
        for (mut a, b) in gaps(&pieces, &grid.lo(u), &grid.hi(u)) {
            while a < b {
                let Some(&id) = light
                    .iter()
                    .find(|id| left[id].is_positive() && inst.job(**id).expect("id").weight <= cap)
                else {
                    break;
                };
                let need = left[&id].clone();
                let take = need.min(&b - &a);
                let end = &a + &take;
                pieces.push(Piece { job: id, start: a.clone(), end: end.clone() });
                *left.get_mut(&id).expect("id") -= &take;
                a = end;
            }
        }
        u += 1;
    }

    // step 3: stretch every piece
    let covered: Vec<i64> = {
        let mut c = Vec::new();
        for p in &pieces {
            if !p.start.is_positive() {
                continue;
            }
            let (a, b) = (grid.index_of(&p.start), grid.index_of(&p.end));
            for v in a..=b {
                if grid.lo(v) >= p.start && grid.hi(v) <= p.end {
                    c.push(v + 1);
                }
            }
        }
        c
    };
    for p in pieces.iter_mut() {
        if p.end.is_positive() {
            let d = grid.len(grid.index_of(&p.end));
            p.start += &d;
            p.end += &d;
        }
    }
    // pieces of one job that became adjacent count as one
    consolidate(&grid, &mut pieces, &covered);

    // step 4: make each light job contiguous
    let mut by_job: BTreeMap<JobId, Vec<usize>> = BTreeMap::new();
    for (i, p) in pieces.iter().enumerate() {
        by_job.entry(p.job).or_default().push(i);
    }
    let mut fixed: Vec<Piece> = Vec::new();
    let mut split: Vec<(Q, JobId)> = Vec::new();
    for (&id, idx) in &by_job {
        let mut parts: Vec<&Piece> = idx.iter().map(|&i| &pieces[i]).collect();
        parts.sort_by(|a, b| a.start.cmp(&b.start));
        let contiguous = parts.windows(2).all(|w| w[0].end == w[1].start);
        if contiguous {
            fixed.push(Piece { job: id, start: parts[0].start.clone(), end: parts.last().expect("piece").end.clone() });
        } else {
            split.push((parts[0].start.clone(), id));
        }
    }
    split.sort();
    for (start, id) in split {
        let w = inst.job(id).expect("id").weight.clone();
        let u = grid.index_of(&start);
        let mut lo = grid.lo(u);
        let mut spot = None;
        while spot.is_none() {
            let hi = grid.hi(u.max(grid.index_of(&lo)));
            for (a, b) in gaps(&fixed, &lo, &hi) {
                if &b - &a >= w {
                    spot = Some(a);
                    break;
                }
            }
            lo = hi;
        }
        let a = spot.expect("found");
        let end = &a + &w;
        fixed.push(Piece { job: id, start: a, end });
    }
    let out = WeightSchedule::new(fixed.into_iter().map(|p| (p.job, p.end)).collect());
    out.validate(inst)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InstanceKind, Job};
    use crate::rational::{q, qi};

    #[test]
    fn higher_ratio_gets_lower_weight() {
        let eps = q(1, 4);
        let inst = Instance::new(
            vec![Job::new(1, qi(1), qi(1)), Job::new(2, qi(3), qi(1))],
            InstanceKind::GivenSpeed,
        )
        .unwrap();
        // both start high enough in weight-space to be light
        let ws = WeightSchedule::new(BTreeMap::from([(1, qi(1001)), (2, qi(2001))]));
        let out = classify_and_smith(&inst, &ws, &eps).unwrap();
        assert!(out.completion(2) < out.completion(1));
    }

    #[test]
    fn heavy_only_schedule_is_unchanged() {
        let inst = Instance::new(vec![Job::new(1, qi(1), qi(5))], InstanceKind::GivenSpeed).unwrap();
        let ws = WeightSchedule::from_order(&inst, &[1]).unwrap();
        assert_eq!(classify_and_smith(&inst, &ws, &q(1, 4)).unwrap(), ws);
    }
}
