//! Fully polynomial approximation scheme for a constant number of speeds.
//!
//! Guesses the jobs that run at several speeds together with their speeds and completion
//! weights. They cut weight-space into intervals of uniform speed, slowest at the bottom. A
//! DP then assigns the remaining jobs, taken in Reverse Smith order, to the intervals while
//! tracking the rounded cost `z`, the rounded weight `y_i` in every interval and the
//! minimum energy.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::envelope::Envelope;
use crate::discrete::ptas::{check_budget, cost_anchor, CostGrid, DiscreteSolution};
use crate::error::{Error, Result};
use crate::grid::check_eps;
use crate::model::{DiscreteSpeedMenu, Instance, JobId};
use crate::oracle::discrete_order_optimum;
use crate::rational::{to_f64, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FptasConfig {
    pub eps: Q,
    /// Largest number of useful speeds accepted.
    pub max_kappa: usize,
    pub max_guesses: usize,
}

impl FptasConfig {
    pub fn new(eps: Q) -> Self {
        FptasConfig { eps, max_kappa: 3, max_guesses: 2_000_000 }
    }
}

/// Split jobs, their completion weights and the speed of every idle-weight interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitJobGuess {
    /// Menu index of the speed used in each interval, bottom interval first.
    pub speeds: Vec<usize>,
    /// Job between interval `i` and `i+1`; `None` marks a dummy of zero weight and volume.
    pub split: Vec<Option<JobId>>,
    /// Completion weight of each boundary job.
    pub completion: Vec<f64>,
}

/// Which values the DP rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpOptions {
    pub round_y: bool,
    pub round_z: bool,
}

/// A stored DP state `[k, z, y_1..y_m]` with its energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpEntry {
    pub y: Vec<f64>,
    pub z: f64,
    pub e: f64,
}

/// States per number of placed jobs for one guess.
#[derive(Debug, Clone)]
pub struct GuessRun {
    pub layers: Vec<Vec<DpEntry>>,
    /// Best final `(z, e)` within the budget.
    pub best: Option<(f64, f64)>,
    /// Interval of each non-split job (Reverse Smith order) on the best chain.
    pub assignment: Vec<usize>,
    /// Energy spent on split jobs on the best chain.
    pub split_energy: f64,
}

#[derive(Debug, Clone)]
pub struct FptasSolution {
    pub result: DiscreteSolution,
    pub guess: SplitJobGuess,
    /// Cost of the reconstructed weight-schedule with the DP speeds.
    pub realized_cost: f64,
    /// Energy of the reconstructed schedule with the DP speeds.
    pub realized_energy: f64,
    pub guesses: usize,
    pub beta: f64,
    pub delta: f64,
}

struct Prep {
    env: Envelope<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    /// Instance indices in Reverse Smith order (`w/v` ascending, ties by id).
    rs: Vec<usize>,
    total_weight: f64,
    beta: f64,
    delta: f64,
    anchor: f64,
}

fn prepare(inst: &Instance, menu: &DiscreteSpeedMenu, eps: f64) -> Prep {
    let env: Envelope<f64> = Envelope::new(menu);
    let v: Vec<f64> = inst.jobs().iter().map(|j| to_f64(&j.volume)).collect();
    let w: Vec<f64> = inst.jobs().iter().map(|j| to_f64(&j.weight)).collect();
    let mut rs: Vec<usize> = (0..inst.len()).collect();
    rs.sort_by(|&a, &b| {
        let (ja, jb) = (&inst.jobs()[a], &inst.jobs()[b]);
        // w_a / v_a < w_b / v_b  <=>  w_a v_b < w_b v_a
        (&ja.weight * &jb.volume).cmp(&(&jb.weight * &ja.volume)).then(ja.id.cmp(&jb.id))
    });
    let n = inst.len() as f64;
    let beta = (1.0 + eps).powf(1.0 / n) - 1.0;
    let delta = (1.0 + eps).powf(1.0 / (n + 1.0)) - 1.0;
    Prep { env, total_weight: w.iter().sum(), v, w, rs, beta, delta, anchor: cost_anchor(inst, menu) }
}

/// Powers of `1+beta` from the first one at or above `lo` to the first one at or above `hi`.
fn positions(beta: f64, lo: f64, hi: f64) -> Vec<f64> {
    let lb = beta.ln_1p();
    let mut k = (lo.ln() / lb).ceil() as i64;
    while (1.0 + beta).powi(k as i32) < lo * (1.0 - 1e-12) {
        k += 1;
    }
    let mut out = Vec::new();
    loop {
        let p = (1.0 + beta).powi(k as i32);
        out.push(p);
        if p >= hi * (1.0 - 1e-12) {
            break;
        }
        k += 1;
    }
    out
}

fn guesses_for(inst: &Instance, menu: &DiscreteSpeedMenu, p: &Prep, max_guesses: usize) -> Result<Vec<SplitJobGuess>> {
    let k = p.env.speeds.len();
    let min_w = p.w.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
    let dummy_positions = if min_w.is_finite() { positions(p.beta, min_w, p.total_weight) } else { Vec::new() };
    let mut out = Vec::new();
    for mask in 1usize..(1 << k) {
        // interval speeds as envelope points, slowest (largest index) first
        let pts: Vec<usize> = (0..k).rev().filter(|b| mask >> b & 1 == 1).collect();
        let mut split: Vec<Option<usize>> = Vec::new();
        let mut comp: Vec<f64> = Vec::new();
        #[allow(clippy::too_many_arguments)]
        fn rec(
            inst: &Instance,
            p: &Prep,
            pts: &[usize],
            dummy_positions: &[f64],
            split: &mut Vec<Option<usize>>,
            comp: &mut Vec<f64>,
            out: &mut Vec<SplitJobGuess>,
            max_guesses: usize,
        ) -> Result<()> {
            if split.len() + 1 == pts.len() {
                if out.len() >= max_guesses {
                    return Err(Error::StateLimit(format!("more than {max_guesses} split-job guesses")));
                }
                out.push(SplitJobGuess {
                    speeds: pts.iter().map(|&e| p.env.speeds[e]).collect(),
                    split: split.iter().map(|s| s.map(|i| inst.jobs()[i].id)).collect(),
                    completion: comp.clone(),
                });
                return Ok(());
            }
            let below = comp.last().copied().unwrap_or(0.0);
            let mut options: Vec<(Option<usize>, Vec<f64>)> = vec![(None, dummy_positions.to_vec())];
            for i in 0..inst.len() {
                if p.v[i] > 0.0 && !split.contains(&Some(i)) {
                    options.push((Some(i), positions(p.beta, p.w[i].max(f64::MIN_POSITIVE), p.total_weight.max(p.w[i]))));
                }
            }
            for (job, pos) in options {
                let wj = job.map_or(0.0, |i| p.w[i]);
                for &c in &pos {
                    if c - wj < below * (1.0 - 1e-12) || (c <= below && !comp.is_empty()) {
                        continue;
                    }
                    split.push(job);
                    comp.push(c);
                    rec(inst, p, pts, dummy_positions, split, comp, out, max_guesses)?;
                    split.pop();
                    comp.pop();
                }
            }
            Ok(())
        }
        rec(inst, p, &pts, &dummy_positions, &mut split, &mut comp, &mut out, max_guesses)?;
    }
    let _ = menu;
    Ok(out)
}

/// Every split-job guess the FPTAS examines.
pub fn enumerate_guesses(inst: &Instance, menu: &DiscreteSpeedMenu, eps: &Q) -> Result<Vec<SplitJobGuess>> {
    check_eps(eps)?;
    let p = prepare(inst, menu, to_f64(eps));
    guesses_for(inst, menu, &p, usize::MAX)
}

/// Envelope position of a menu index.
fn env_pos(p: &Prep, menu_idx: usize) -> usize {
    p.env.speeds.iter().position(|&s| s == menu_idx).expect("envelope speed")
}

/// Tradeoff of the split jobs: breakpoints `(cost, energy)` from all-slow to all-fast and
/// the greedy segments that produce them.
struct SplitCurve {
    points: Vec<(f64, f64)>,
    /// (job, from envelope point, to envelope point) per segment.
    segments: Vec<(usize, usize, usize)>,
    base: Vec<(usize, usize)>,
}

fn split_curve(inst: &Instance, p: &Prep, g: &SplitJobGuess) -> SplitCurve {
    let mut cost = 0.0;
    let mut energy = 0.0;
    let mut segs: Vec<(f64, usize, usize, usize, f64, f64)> = Vec::new();
    let mut base = Vec::new();
    for (b, job) in g.split.iter().enumerate() {
        let Some(id) = job else { continue };
        let i = inst.index_of(*id).expect("known id");
        let slow = env_pos(p, g.speeds[b]);
        let fast = env_pos(p, g.speeds[b + 1]);
        let c = g.completion[b];
        let v = p.v[i];
        cost += c * v * p.env.time[slow];
        energy += v * p.env.energy[slow];
        base.push((i, slow));
        if c <= 0.0 {
            continue;
        }
        for k in (fast + 1..=slow).rev() {
            let dz = c * v * (p.env.time[k] - p.env.time[k - 1]);
            let de = v * (p.env.energy[k - 1] - p.env.energy[k]);
            segs.push((dz / de, i, k, k - 1, dz, de));
        }
    }
    segs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(b.2.cmp(&a.2)));
    let mut points = vec![(cost, energy)];
    for s in &segs {
        cost -= s.4;
        energy += s.5;
        points.push((cost.max(0.0), energy));
    }
    SplitCurve { points, segments: segs.iter().map(|s| (s.1, s.2, s.3)).collect(), base }
}

#[derive(Debug, Clone, Copy)]
struct FEntry {
    z: f64,
    e: f64,
    pred_state: u32,
    pred_entry: u32,
    interval: u8,
}

struct Layer {
    keys: Vec<Vec<i64>>,
    y: Vec<Vec<f64>>,
    fronts: Vec<Vec<FEntry>>,
}

fn prune(mut v: Vec<FEntry>) -> Vec<FEntry> {
    v.sort_by(|a, b| a.z.total_cmp(&b.z).then(a.e.total_cmp(&b.e)));
    let mut out: Vec<FEntry> = Vec::with_capacity(v.len());
    for x in v {
        if out.last().map_or(true, |l| x.e < l.e) {
            out.push(x);
        }
    }
    out
}

struct RunOut {
    layers: Vec<Layer>,
    start: Vec<(f64, f64)>,
    nonsplit: Vec<usize>,
}

fn run(inst: &Instance, p: &Prep, g: &SplitJobGuess, budget: f64, opts: DpOptions, incumbent: &AtomicU64) -> RunOut {
    let m = g.speeds.len();
    let cap_e = budget * (1.0 + 1e-9);
    let grid = CostGrid::new(p.anchor, p.delta);
    let rz = |z: f64| if opts.round_z { grid.round_up(z) } else { z };
    let lb = p.beta.ln_1p();
    let key = |y: f64| -> (i64, f64) {
        if y <= 0.0 {
            return (i64::MIN, 0.0);
        }
        if !opts.round_y {
            return (y.to_bits() as i64, y);
        }
        let mut k = (y.ln() / lb).floor() as i64;
        let mut r = (1.0 + p.beta).powi(k as i32);
        while r > y {
            k -= 1;
            r = (1.0 + p.beta).powi(k as i32);
        }
        (k, r)
    };
    let split_idx: Vec<usize> = g.split.iter().flatten().map(|id| inst.index_of(*id).expect("id")).collect();
    let split_w: Vec<f64> = g.split.iter().map(|s| s.map_or(0.0, |id| p.w[inst.index_of(id).expect("id")])).collect();
    let lo: Vec<f64> = (0..m).map(|i| if i == 0 { 0.0 } else { g.completion[i - 1] }).collect();
    let cap: Vec<f64> =
        (0..m).map(|i| if i + 1 == m { f64::INFINITY } else { g.completion[i] - split_w[i] - lo[i] }).collect();
    let speed: Vec<usize> = g.speeds.iter().map(|&s| env_pos(p, s)).collect();

    // starting states from the split-job tradeoff
    let curve = split_curve(inst, p, g);
    let mut start: Vec<(f64, f64)> = Vec::new();
    for (k, &(z, e)) in curve.points.iter().enumerate() {
        start.push((z, e));
        if let Some(&(z2, e2)) = curve.points.get(k + 1) {
            if opts.round_z && z > z2 {
                for gz in grid.between(z2, z) {
                    start.push((gz, e2 + (e - e2) * (gz - z2) / (z - z2)));
                }
            }
        }
    }
    let first: Vec<FEntry> = prune(
        start
            .iter()
            .enumerate()
            .filter(|(_, s)| s.1 <= cap_e)
            .map(|(k, s)| FEntry { z: rz(s.0), e: s.1, pred_state: 0, pred_entry: k as u32, interval: 0 })
            .collect(),
    );
    let zero_key: Vec<i64> = vec![i64::MIN; m];
    let mut layers = vec![Layer { keys: vec![zero_key], y: vec![vec![0.0; m]], fronts: vec![first] }];
    let nonsplit: Vec<usize> = p.rs.iter().copied().filter(|i| !split_idx.contains(i)).collect();
    // cost the jobs after position l add at least: fastest speed, stacked on each other only
    let fastest = speed.iter().map(|&e| p.env.time[e]).fold(f64::INFINITY, f64::min);
    let rest: Vec<f64> = (0..=nonsplit.len())
        .map(|l| {
            let mut c = 0.0;
            let mut acc = 0.0;
            for &k in &nonsplit[l..] {
                c += p.w[k];
                acc += p.v[k] * fastest * c;
            }
            acc * (1.0 - 1e-12)
        })
        .collect();
    for (pos, &j) in nonsplit.iter().enumerate() {
        let prev = layers.last().expect("layer");
        let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut next = Layer { keys: Vec::new(), y: Vec::new(), fronts: Vec::new() };
        let mut cand: Vec<Vec<FEntry>> = Vec::new();
        for (si, y) in prev.y.iter().enumerate() {
            for i in 0..m {
                let ybar = y[i] + p.w[j];
                if ybar > cap[i] * (1.0 + 1e-12) + 1e-12 {
                    continue;
                }
                let x = p.v[j] * p.env.time[speed[i]];
                let de = p.v[j] * p.env.energy[speed[i]];
                let (k, yr) = key(ybar);
                let mut nk = prev.keys[si].clone();
                nk[i] = k;
                let slot = *index.entry(nk.clone()).or_insert_with(|| {
                    let mut ny = y.clone();
                    ny[i] = yr;
                    next.keys.push(nk);
                    next.y.push(ny);
                    cand.push(Vec::new());
                    cand.len() - 1
                });
                let bound = f64::from_bits(incumbent.load(AtomicOrdering::Relaxed)) - rest[pos + 1];
                for (ei, f) in prev.fronts[si].iter().enumerate() {
                    let e = f.e + de;
                    let z = rz(f.z + x * (lo[i] + y[i] + p.w[j]));
                    // costs only grow along a chain
                    if e > cap_e || z > bound {
                        continue;
                    }
                    cand[slot].push(FEntry {
                        z,
                        e,
                        pred_state: si as u32,
                        pred_entry: ei as u32,
                        interval: i as u8,
                    });
                }
            }
        }
        let mut keep = Layer { keys: Vec::new(), y: Vec::new(), fronts: Vec::new() };
        for (k, c) in cand.into_iter().enumerate() {
            let f = prune(c);
            if !f.is_empty() {
                keep.keys.push(std::mem::take(&mut next.keys[k]));
                keep.y.push(std::mem::take(&mut next.y[k]));
                keep.fronts.push(f);
            }
        }
        layers.push(keep);
        if layers.last().expect("layer").keys.is_empty() {
            break;
        }
    }
    RunOut { layers, start, nonsplit }
}

fn best_of(layers: &[Layer], n: usize, cap_e: f64) -> Option<(usize, usize, f64, f64)> {
    if layers.len() != n + 1 {
        return None;
    }
    let last = layers.last()?;
    let mut best: Option<(usize, usize, f64, f64)> = None;
    for (si, f) in last.fronts.iter().enumerate() {
        for (ei, x) in f.iter().enumerate() {
            if x.e > cap_e {
                continue;
            }
            let better = match best {
                None => true,
                Some((bs, _, bz, be)) => {
                    x.z < bz || (x.z == bz && (x.e < be || (x.e == be && last.keys[si] < last.keys[bs])))
                }
            };
            if better {
                best = Some((si, ei, x.z, x.e));
            }
        }
    }
    best
}

/// Runs the DP of one guess and reports every stored state.
pub fn run_guess(
    inst: &Instance,
    menu: &DiscreteSpeedMenu,
    budget: &Q,
    eps: &Q,
    guess: &SplitJobGuess,
    opts: DpOptions,
) -> Result<GuessRun> {
    check_eps(eps)?;
    let p = prepare(inst, menu, to_f64(eps));
    let b = to_f64(budget);
    let out = run(inst, &p, guess, b, opts, &AtomicU64::new(f64::INFINITY.to_bits()));
    let (best, assignment, split_energy) = match best_of(&out.layers, out.nonsplit.len(), b * (1.0 + 1e-9)) {
        Some((si, ei, z, e)) => {
            let (a, start) = backtrack(&out.layers, si, ei);
            (Some((z, e)), a, out.start[start].1)
        }
        None => (None, Vec::new(), 0.0),
    };
    let layers = out
        .layers
        .iter()
        .map(|l| {
            l.fronts
                .iter()
                .zip(&l.y)
                .flat_map(|(f, y)| f.iter().map(move |x| DpEntry { y: y.clone(), z: x.z, e: x.e }))
                .collect()
        })
        .collect();
    Ok(GuessRun { layers, best, assignment, split_energy })
}

/// Interval per placed job and the index of the starting split allocation.
fn backtrack(layers: &[Layer], mut si: usize, mut ei: usize) -> (Vec<usize>, usize) {
    let mut assignment = vec![0; layers.len() - 1];
    for l in (1..layers.len()).rev() {
        let x = layers[l].fronts[si][ei];
        assignment[l - 1] = x.interval as usize;
        si = x.pred_state as usize;
        ei = x.pred_entry as usize;
    }
    (assignment, layers[0].fronts[0][ei].pred_entry as usize)
}

/// Work per envelope point of each split job at the given extra energy over the all-slow start.
fn split_allocation(p: &Prep, curve: &SplitCurve, energy: f64) -> Vec<(usize, Vec<(usize, f64)>)> {
    let mut at: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for &(i, slow) in &curve.base {
        at.insert(i, vec![(slow, p.v[i])]);
    }
    let mut left = energy - curve.points[0].1;
    for &(i, from, to) in &curve.segments {
        if left <= 0.0 {
            break;
        }
        let de = p.v[i] * (p.env.energy[to] - p.env.energy[from]);
        let frac = if de <= left { 1.0 } else { left / de };
        left -= de * frac;
        let parts = at.get_mut(&i).expect("split job");
        let moved = p.v[i] * frac;
        if let Some(x) = parts.iter_mut().find(|x| x.0 == from) {
            x.1 -= moved;
        }
        parts.push((to, moved));
        parts.retain(|x| x.1 > 1e-15 * p.v[i]);
    }
    let mut out: Vec<_> = at.into_iter().collect();
    out.sort_by_key(|x| x.0);
    out
}

/// `(1+eps)^3`-approximate order and speeds when the menu has at most `max_kappa` useful speeds.
pub fn fptas(inst: &Instance, menu: &DiscreteSpeedMenu, budget: &Q, cfg: &FptasConfig) -> Result<FptasSolution> {
    check_eps(&cfg.eps)?;
    check_budget(inst, menu, budget)?;
    let p = prepare(inst, menu, to_f64(&cfg.eps));
    if p.env.speeds.len() > cfg.max_kappa {
        return Err(Error::InvalidParameter(format!(
            "menu has {} useful speeds, more than the supported {}",
            p.env.speeds.len(),
            cfg.max_kappa
        )));
    }
    let b = to_f64(budget);
    let cap_e = b * (1.0 + 1e-9);
    let guesses = guesses_for(inst, menu, &p, cfg.max_guesses)?;
    let n_guesses = guesses.len();
    let incumbent = AtomicU64::new(f64::INFINITY.to_bits());
    let best = guesses
        .par_iter()
        .enumerate()
        .filter_map(|(gi, g)| {
            let out = run(inst, &p, g, b, DpOptions { round_y: true, round_z: true }, &incumbent);
            best_of(&out.layers, out.nonsplit.len(), cap_e).map(|(si, ei, z, e)| {
                incumbent.fetch_min(z.to_bits(), AtomicOrdering::Relaxed);
                let (assignment, start) = backtrack(&out.layers, si, ei);
                (z, e, gi, assignment, out.start[start].1, out.nonsplit)
            })
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let Some((dp_cost, dp_energy, gi, assignment, split_energy, nonsplit)) = best else {
        return Err(Error::InfeasibleBudget("no split-job guess fits the budget".into()));
    };
    let g = guesses[gi].clone();
    let (order, realized_cost, realized_energy) = reconstruct(inst, &p, &g, &nonsplit, &assignment, split_energy);
    let solution = discrete_order_optimum(inst, &order, menu, budget)?;
    Ok(FptasSolution {
        result: DiscreteSolution { solution, dp_cost, dp_energy },
        guess: g,
        realized_cost,
        realized_energy,
        guesses: n_guesses,
        beta: p.beta,
        delta: p.delta,
    })
}

/// Places the jobs in weight-space, pushing split jobs up where an interval overflows.
fn reconstruct(
    inst: &Instance,
    p: &Prep,
    g: &SplitJobGuess,
    nonsplit: &[usize],
    assignment: &[usize],
    split_energy: f64,
) -> (Vec<JobId>, f64, f64) {
    let m = g.speeds.len();
    let speed: Vec<usize> = g.speeds.iter().map(|&s| env_pos(p, s)).collect();
    let curve = split_curve(inst, p, g);
    let alloc: HashMap<usize, Vec<(usize, f64)>> = split_allocation(p, &curve, split_energy).into_iter().collect();
    let mut placed: Vec<(f64, usize, f64, f64)> = Vec::new(); // (C^w, job, x, energy)
    let mut top = 0.0f64;
    for i in 0..m {
        let mut y = top;
        for (pos, &j) in nonsplit.iter().enumerate() {
            if assignment[pos] != i {
                continue;
            }
            y += p.w[j];
            let x = p.v[j] * p.env.time[speed[i]];
            placed.push((y, j, x, p.v[j] * p.env.energy[speed[i]]));
        }
        if i + 1 < m {
            let c = g.completion[i];
            match g.split[i] {
                Some(id) => {
                    let j = inst.index_of(id).expect("id");
                    let c = c.max(y + p.w[j]);
                    let parts = &alloc[&j];
                    let x: f64 = parts.iter().map(|&(e, work)| work * p.env.time[e]).sum();
                    let en: f64 = parts.iter().map(|&(e, work)| work * p.env.energy[e]).sum();
                    placed.push((c, j, x, en));
                    top = c;
                }
                None => top = c.max(y),
            }
        }
    }
    let cost = placed.iter().map(|x| x.0 * x.2).sum();
    let energy = placed.iter().map(|x| x.3).sum();
    placed.sort_by(|a, b| b.0.total_cmp(&a.0).then(inst.jobs()[a.1].id.cmp(&inst.jobs()[b.1].id)));
    (placed.iter().map(|x| inst.jobs()[x.1].id).collect(), cost, energy)
}
