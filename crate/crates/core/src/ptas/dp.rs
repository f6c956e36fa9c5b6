//! Layered dynamic program over compact families.

use std::collections::HashMap;

use super::families::{ChainKind, CompactFamilies};
use super::localize::Localization;
use crate::error::{Error, Result};
use crate::speed::SpeedOracle;

/// Count vector over chains.
pub type State = Vec<u16>;

/// Precedence between heavy jobs: job `a` runs before job `b` whenever `w_a >= w_b`,
/// `v_a <= v_b` and the pair is not identical; the completed set is then closed under `b`.
#[derive(Debug, Clone)]
pub struct Closure {
    /// `need[c][k][c2]`: count chain `c2` must reach once element `k` of chain `c` is completed.
    need: Vec<Vec<Vec<u16>>>,
}

impl Closure {
    pub fn new(loc: &Localization, fam: &CompactFamilies, enabled: bool) -> Self {
        let m = fam.len();
        let mut need = Vec::with_capacity(m);
        for c in 0..m {
            let mut per = Vec::with_capacity(fam.chains[c].len());
            for item in &fam.chains[c].items {
                let mut row = vec![0u16; m];
                if enabled && matches!(fam.chains[c].kind, ChainKind::Heavy { .. }) {
                    let a = item[0];
                    for (c2, ch) in fam.chains.iter().enumerate() {
                        if c2 == c || !matches!(ch.kind, ChainKind::Heavy { .. }) {
                            continue;
                        }
                        let cnt = ch
                            .items
                            .iter()
                            .take_while(|it| {
                                let b = it[0];
                                let wa = loc.weight_exp[a];
                                let wb = loc.weight_exp[b];
                                wa >= wb
                                    && loc.volume[a] <= loc.volume[b]
                                    && (wa > wb || loc.volume[a] < loc.volume[b] || loc.ids[a] < loc.ids[b])
                            })
                            .count();
                        row[c2] = cnt as u16;
                    }
                }
                per.push(row);
            }
            need.push(per);
        }
        Closure { need }
    }

    fn need(&self, c: usize, k: u16, c2: usize) -> u16 {
        if k == 0 {
            0
        } else {
            self.need[c][k as usize - 1][c2]
        }
    }

    /// Whether a full count vector is closed.
    pub fn closed(&self, st: &[u16]) -> bool {
        (0..st.len()).all(|c| (0..st.len()).all(|c2| st[c2] >= self.need(c, st[c], c2)))
    }
}

/// Layer bounds: chains at or below `forced_class` are complete, chains at or above
/// `closed_class` are empty, the rest are free.
#[derive(Debug, Clone, Copy)]
pub struct LayerShape {
    pub forced_class: i64,
    pub closed_class: i64,
    pub weight_cap: f64,
    pub layer: i64,
}

/// Enumerates count vectors of a layer shape that are closed and respect release layers.
pub fn enumerate(fam: &CompactFamilies, closure: &Closure, shape: LayerShape, limit: usize) -> Result<Vec<State>> {
    let m = fam.len();
    let mut cur = vec![0u16; m];
    let mut decided = Vec::new();
    let mut free = Vec::new();
    let mut w = 0.0;
    for c in 0..m {
        let class = fam.chains[c].class;
        if class <= shape.forced_class {
            let len = fam.chains[c].len();
            if len > 0 && fam.earliest[c][len - 1] > shape.layer {
                return Ok(Vec::new());
            }
            cur[c] = len as u16;
            w += fam.prefix_weight[c][len];
            decided.push(c);
        } else if class >= shape.closed_class {
            decided.push(c);
        } else {
            free.push(c);
        }
    }
    if w > shape.weight_cap {
        return Ok(Vec::new());
    }
    for &c in &decided {
        for &c2 in &decided {
            if cur[c2] < closure.need(c, cur[c], c2) {
                return Ok(Vec::new());
            }
        }
    }
    struct Ctx<'a> {
        fam: &'a CompactFamilies,
        closure: &'a Closure,
        free: Vec<usize>,
        shape: LayerShape,
        limit: usize,
        out: Vec<State>,
    }
    fn rec(ctx: &mut Ctx, pos: usize, w: f64, cur: &mut Vec<u16>, decided: &mut Vec<usize>) -> Result<()> {
        if pos == ctx.free.len() {
            if ctx.out.len() >= ctx.limit {
                return Err(Error::StateLimit(format!("more than {} states in one layer", ctx.limit)));
            }
            ctx.out.push(cur.clone());
            return Ok(());
        }
        let c = ctx.free[pos];
        for k in 0..=ctx.fam.chains[c].len() {
            if k > 0 && ctx.fam.earliest[c][k - 1] > ctx.shape.layer {
                break;
            }
            let nw = w + ctx.fam.prefix_weight[c][k];
            if nw > ctx.shape.weight_cap {
                break;
            }
            let k16 = k as u16;
            let ok = decided.iter().all(|&d| {
                cur[d] >= ctx.closure.need(c, k16, d) && k16 >= ctx.closure.need(d, cur[d], c)
            });
            if !ok {
                continue;
            }
            cur[c] = k16;
            decided.push(c);
            rec(ctx, pos + 1, nw, cur, decided)?;
            decided.pop();
        }
        cur[c] = 0;
        Ok(())
    }
    let mut ctx = Ctx { fam, closure, free, shape, limit, out: Vec::new() };
    rec(&mut ctx, 0, w, &mut cur, &mut decided)?;
    Ok(ctx.out)
}

/// One DP layer: states, values and predecessor indices into the previous layer.
#[derive(Debug, Clone, Default)]
pub struct Layer {
    pub states: Vec<State>,
    pub value: Vec<f64>,
    pub pred: Vec<u32>,
    pub index: HashMap<State, u32>,
}

impl Layer {
    fn push(&mut self, s: State, value: f64, pred: u32) {
        self.index.insert(s.clone(), self.states.len() as u32);
        self.states.push(s);
        self.value.push(value);
        self.pred.push(pred);
    }
}

/// Result of the given-speed dynamic program.
#[derive(Debug, Clone)]
pub struct DpOutcome {
    /// Completed sets per layer `0..=top`, from the backtracked optimum.
    pub path: Vec<State>,
    /// Optimal table value in rescaled weight units.
    pub value: f64,
    pub layers: Vec<Layer>,
    pub first_layer: i64,
}

pub struct DpParams {
    pub base: f64,
    pub top: i64,
    pub total_volume: f64,
    pub max_states: usize,
}

fn volume_of(fam: &CompactFamilies, st: &[u16]) -> f64 {
    st.iter().enumerate().map(|(c, &k)| fam.prefix_volume[c][k as usize]).sum()
}

fn weight_of(fam: &CompactFamilies, st: &[u16]) -> f64 {
    st.iter().enumerate().map(|(c, &k)| fam.prefix_weight[c][k as usize]).sum()
}

/// `T(u,S) = min over S' <= S of T(u-1,S') + (1+eps)^u [f(V - V(S')) - f(V - V(S))]`,
/// evaluated with a subset-minimum sweep over the layer lattice.
pub fn run(fam: &CompactFamilies, closure: &Closure, oracle: &dyn SpeedOracle, p: &DpParams) -> Result<Option<DpOutcome>> {
    let f = |st: &[u16]| oracle.time_f64((p.total_volume - volume_of(fam, st)).max(0.0));
    let zero: State = vec![0; fam.len()];
    let mut layers: Vec<Layer> = Vec::new();
    let mut first = Layer::default();
    first.push(zero.clone(), 0.0, u32::MAX);
    layers.push(first);
    let mut f_prev: Vec<f64> = vec![f(&zero)?];
    let mut total = 1usize;
    for u in 1..=p.top {
        let cu = p.base.powi(u as i32);
        let cap = cu * (1.0 + 1e-12);
        let prev = layers.last().expect("layer");
        let shape = LayerShape { forced_class: u - fam.s, closed_class: u + 1, weight_cap: cap, layer: u };
        let mut domain = enumerate(fam, closure, shape, p.max_states)?;
        domain.sort_by_key(|s| s.iter().map(|&k| k as u32).sum::<u32>());
        let index: HashMap<&State, usize> = domain.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut h = vec![f64::INFINITY; domain.len()];
        let mut arg = vec![u32::MAX; domain.len()];
        for i in 0..domain.len() {
            if let Some(&pi) = prev.index.get(&domain[i]) {
                let g = prev.value[pi as usize] + cu * f_prev[pi as usize];
                if g < h[i] {
                    h[i] = g;
                    arg[i] = pi;
                }
            }
            let mut x = domain[i].clone();
            for c in 0..x.len() {
                if x[c] == 0 {
                    continue;
                }
                x[c] -= 1;
                if let Some(&j) = index.get(&x) {
                    if h[j] < h[i] || (h[j] == h[i] && arg[j] < arg[i]) {
                        h[i] = h[j];
                        arg[i] = arg[j];
                    }
                }
                x[c] += 1;
            }
        }
        let mut layer = Layer::default();
        let mut f_cur = Vec::new();
        for i in 0..domain.len() {
            if !h[i].is_finite() {
                continue;
            }
            let st = &domain[i];
            let forced_ok = (0..st.len()).all(|c| !fam.forced(c, u) || st[c] as usize == fam.chains[c].len());
            if !forced_ok || weight_of(fam, st) > cap {
                continue;
            }
            let fx = f(st)?;
            layer.push(st.clone(), h[i] - cu * fx, arg[i]);
            f_cur.push(fx);
        }
        total += layer.states.len();
        if total > p.max_states {
            return Err(Error::StateLimit(format!("more than {} states in total", p.max_states)));
        }
        if layer.states.is_empty() {
            return Ok(None);
        }
        layers.push(layer);
        f_prev = f_cur;
    }
    let last = layers.last().expect("layer");
    let full: State = fam.chains.iter().map(|c| c.len() as u16).collect();
    let Some(&end) = last.index.get(&full) else { return Ok(None) };
    let value = last.value[end as usize];
    let mut path = vec![full];
    let mut idx = end;
    for l in (1..layers.len()).rev() {
        idx = layers[l].pred[idx as usize];
        path.push(layers[l - 1].states[idx as usize].clone());
    }
    path.reverse();
    Ok(Some(DpOutcome { path, value, layers, first_layer: 0 }))
}
