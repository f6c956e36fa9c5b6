//! Approximation scheme for a discrete speed menu under an energy budget.
//!
//! Reuses the speed-independent localization and compact families of the given-speed
//! scheme. Each DP state `(u, S)` keeps a Pareto front of (rounded cost, energy) pairs;
//! the jobs completing in interval `u` get the cheapest speed mix that meets their share of
//! the cost, charged at completion weight `(1+eps)^u`.

use num::traits::Signed;
use serde::{Deserialize, Serialize};

use crate::discrete::envelope::Envelope;
use crate::discrete::lp::min_energy_within;
use crate::error::{Error, Result};
use crate::grid::check_eps;
use crate::model::{DiscreteSpeedMenu, Instance};
use crate::oracle::{discrete_order_optimum, min_energy, DiscreteOrderSolution};
use crate::ptas::dp::{enumerate, LayerShape};
use crate::ptas::{localize, order_from_path, run_localized, CompactFamilies, State};
use crate::rational::{format_q, to_f64, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretePtasConfig {
    pub eps: Q,
    pub dominance: bool,
    pub max_states: usize,
}

impl DiscretePtasConfig {
    pub fn new(eps: Q) -> Self {
        DiscretePtasConfig { eps, dominance: true, max_states: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteStats {
    pub s: i64,
    pub layers: i64,
    pub states: usize,
    pub front_entries: usize,
    pub delta: f64,
}

/// Result of the discrete-speed solvers: a time order with its exact optimal speeds.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub solution: DiscreteOrderSolution,
    /// Cost estimate of the DP for the chosen order (rounded completion weights).
    pub dp_cost: f64,
    /// Energy of the DP speed assignment.
    pub dp_energy: f64,
}

/// Rounds positive costs up to `anchor (1+delta)^k`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CostGrid {
    anchor: f64,
    log_base: f64,
    base: f64,
}

impl CostGrid {
    pub(crate) fn new(anchor: f64, delta: f64) -> Self {
        CostGrid { anchor, log_base: delta.ln_1p(), base: 1.0 + delta }
    }

    pub(crate) fn round_up(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z <= self.anchor {
            return self.anchor;
        }
        let mut k = ((z / self.anchor).ln() / self.log_base).ceil();
        let mut r = self.anchor * self.base.powf(k);
        // guard against the logarithm landing one step low
        while r < z {
            k += 1.0;
            r = self.anchor * self.base.powf(k);
        }
        r
    }

    /// Grid points strictly between `lo` and `hi`.
    pub(crate) fn between(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut z = self.round_up(lo.max(self.anchor));
        if z <= lo {
            z *= self.base;
        }
        while z < hi {
            out.push(z);
            z *= self.base;
        }
        out
    }
}

/// Smallest positive cost any schedule can have: one job run at the fastest speed.
pub(crate) fn cost_anchor(inst: &Instance, menu: &DiscreteSpeedMenu) -> f64 {
    let s1 = to_f64(&menu.speeds()[0]);
    inst.jobs()
        .iter()
        .filter(|j| j.volume.is_positive() && j.weight.is_positive())
        .map(|j| to_f64(&j.weight) * to_f64(&j.volume) / s1)
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
        .max(f64::MIN_POSITIVE)
}

pub(crate) fn check_budget(inst: &Instance, menu: &DiscreteSpeedMenu, budget: &Q) -> Result<()> {
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
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    z: f64,
    e: f64,
    pred_state: u32,
    pred_entry: u32,
}

/// Keeps entries with strictly decreasing energy as the cost grows.
fn prune(mut v: Vec<Entry>, cap: f64) -> Vec<Entry> {
    v.retain(|x| x.e <= cap);
    v.sort_by(|a, b| a.z.total_cmp(&b.z).then(a.e.total_cmp(&b.e)));
    let mut out: Vec<Entry> = Vec::with_capacity(v.len());
    for x in v {
        if out.last().map_or(true, |l| x.e < l.e) {
            out.push(x);
        }
    }
    out
}

struct DLayer {
    states: Vec<State>,
    fronts: Vec<Vec<Entry>>,
}

struct Speeds {
    speeds: Vec<f64>,
    power: Vec<f64>,
    /// time per unit work of envelope points, fastest first
    env_time: Vec<f64>,
}

fn volume_of(fam: &CompactFamilies, st: &[u16]) -> f64 {
    st.iter().enumerate().map(|(c, &k)| fam.prefix_volume[c][k as usize]).sum()
}

/// Candidate durations for `volume`: envelope vertices and a geometric subdivision between them.
fn durations(sp: &Speeds, volume: f64, ratio: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for w in sp.env_time.windows(2) {
        let mut t = volume * w[0];
        let end = volume * w[1];
        while t < end {
            out.push(t);
            t *= ratio;
        }
    }
    out.push(volume * sp.env_time.last().copied().expect("envelope point"));
    out
}

#[allow(clippy::too_many_arguments)]
fn run_dp(
    fam: &CompactFamilies,
    closure: &crate::ptas::Closure,
    sp: &Speeds,
    grid: CostGrid,
    top: i64,
    scale: f64,
    base: f64,
    budget: f64,
    max_states: usize,
) -> Result<Option<(f64, f64, Vec<State>, usize, usize)>> {
    let cap = budget * (1.0 + 1e-9);
    let zero: State = vec![0; fam.len()];
    let mut layers = vec![DLayer { states: vec![zero], fronts: vec![vec![Entry { z: 0.0, e: 0.0, pred_state: 0, pred_entry: 0 }]] }];
    let ratio = grid.base;
    let mut total = 1usize;
    let mut entries = 1usize;
    for u in 1..=top {
        let cu = base.powi(u as i32);
        let shape = LayerShape { forced_class: u + 1 - fam.s, closed_class: u + 1, weight_cap: cu * (1.0 + 1e-12), layer: u };
        let domain = enumerate(fam, closure, shape, max_states)?;
        let prev = layers.last().expect("layer");
        let prev_vol: Vec<f64> = prev.states.iter().map(|s| volume_of(fam, s)).collect();
        let mut layer = DLayer { states: Vec::new(), fronts: Vec::new() };
        let weight = cu * scale;
        for st in domain {
            let vol = volume_of(fam, &st);
            let mut cand: Vec<Entry> = Vec::new();
            for (pi, ps) in prev.states.iter().enumerate() {
                if ps.iter().zip(&st).any(|(a, b)| a > b) {
                    continue;
                }
                let dv = (vol - prev_vol[pi]).max(0.0);
                let front = &prev.fronts[pi];
                if dv == 0.0 {
                    cand.extend(front.iter().enumerate().map(|(k, x)| Entry { z: x.z, e: x.e, pred_state: pi as u32, pred_entry: k as u32 }));
                    continue;
                }
                for t in durations(sp, dv, ratio) {
                    let Some(lp) = min_energy_within(&sp.speeds, &sp.power, &dv, &(t * (1.0 + 1e-12))) else { continue };
                    for (k, x) in front.iter().enumerate() {
                        cand.push(Entry {
                            z: grid.round_up(x.z + weight * t),
                            e: x.e + lp.energy,
                            pred_state: pi as u32,
                            pred_entry: k as u32,
                        });
                    }
                }
            }
            let front = prune(cand, cap);
            if !front.is_empty() {
                entries += front.len();
                layer.states.push(st);
                layer.fronts.push(front);
            }
        }
        total += layer.states.len();
        if total > max_states {
            return Err(Error::StateLimit(format!("more than {max_states} states in total")));
        }
        if layer.states.is_empty() {
            return Ok(None);
        }
        layers.push(layer);
    }
    let full: State = fam.chains.iter().map(|c| c.len() as u16).collect();
    let last = layers.last().expect("layer");
    let Some(end) = last.states.iter().position(|s| *s == full) else { return Ok(None) };
    let Some(best) = last.fronts[end].iter().position(|x| x.e <= cap) else { return Ok(None) };
    let (z, e) = (last.fronts[end][best].z, last.fronts[end][best].e);
    let mut path = vec![full];
    let (mut si, mut ei) = (end, best);
    for l in (1..layers.len()).rev() {
        let x = layers[l].fronts[si][ei];
        si = x.pred_state as usize;
        ei = x.pred_entry as usize;
        path.push(layers[l - 1].states[si].clone());
    }
    path.reverse();
    Ok(Some((z, e, path, total, entries)))
}

/// `(1 + O(eps))`-approximate order and speeds for a discrete menu and an energy budget.
pub fn ptas(inst: &Instance, menu: &DiscreteSpeedMenu, budget: &Q, cfg: &DiscretePtasConfig) -> Result<(DiscreteSolution, DiscreteStats)> {
    check_eps(&cfg.eps)?;
    check_budget(inst, menu, budget)?;
    let loc = localize(inst, &cfg.eps)?;
    let env: Envelope<f64> = Envelope::new(menu);
    let sp = Speeds {
        speeds: menu.speeds().iter().map(to_f64).collect(),
        power: menu.power().iter().map(to_f64).collect(),
        env_time: env.time.clone(),
    };
    let base = to_f64(loc.base());
    let scale = base.powi(loc.shift as i32);
    let budget_f = to_f64(budget);
    if loc.is_empty() {
        let mut ids = inst.ids();
        ids.sort();
        let solution = discrete_order_optimum(inst, &ids, menu, budget)?;
        let stats = DiscreteStats { s: 0, layers: 0, states: 1, front_entries: 1, delta: 0.0 };
        let dp_energy = to_f64(&solution.energy);
        return Ok((DiscreteSolution { solution, dp_cost: 0.0, dp_energy }, stats));
    }
    let mut meta = (0.0, 0.0, 0usize, 0usize, 0.0f64, 0i64);
    let (loc, fam, _, path, _, _, _) = run_localized(&loc, cfg.dominance, |l, fam, closure| {
        let top = l.nu().max(l.max_class() - 1 + l.s);
        let one_plus_eps = 1.0 + to_f64(l.eps());
        // costs are rounded only on layers where jobs complete
        let steps = top.min(l.len() as i64).max(1);
        let delta = one_plus_eps.powf(1.0 / steps as f64) - 1.0;
        let grid = CostGrid::new(cost_anchor(inst, menu), delta);
        let out = run_dp(fam, closure, &sp, grid, top, scale, base, budget_f, cfg.max_states)?;
        Ok(out.map(|(z, e, path, states, entries)| {
            meta = (z, e, states, entries, delta, top);
            (z, path, states, 0)
        }))
    })?;
    let (order, _) = order_from_path(inst, &loc, &fam, &path);
    let solution = discrete_order_optimum(inst, &order, menu, budget)?;
    let stats = DiscreteStats { s: loc.s, layers: meta.5, states: meta.2, front_entries: meta.3, delta: meta.4 };
    Ok((DiscreteSolution { solution, dp_cost: meta.0, dp_energy: meta.1 }, stats))
}
