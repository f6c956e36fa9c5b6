//! Compact candidate families for the sets of jobs completed by `(1+eps)^u` in weight-space.
//!
//! Each release class splits into chains. A heavy chain holds the jobs of one weight,
//! entering the completed set largest volume first. The light chain holds groups of light
//! jobs in Reverse Smith order (largest `v/w` first). A family member is described by the
//! number of chain elements already completed.

use num::traits::Zero;

use super::localize::Localization;
use crate::rational::{to_f64, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainKind {
    Heavy { weight_exp: i64 },
    Light,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub class: i64,
    pub kind: ChainKind,
    /// Elements in the order they join the completed set; each element lists local job indices.
    pub items: Vec<Vec<usize>>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Chains of all release classes plus per-element data used by the dynamic programs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactFamilies {
    pub chains: Vec<Chain>,
    /// Prefix weights (rounded, rescaled) per chain: `prefix_weight[c][k]` for the first `k` elements.
    pub prefix_weight: Vec<Vec<f64>>,
    /// Prefix volumes per chain.
    pub prefix_volume: Vec<Vec<f64>>,
    /// Exact prefix volumes per chain.
    pub prefix_volume_q: Vec<Vec<Q>>,
    /// Smallest layer at which each element may be completed (`release + weight <= (1+eps)^u`).
    pub earliest: Vec<Vec<i64>>,
    /// Window length from the localization.
    pub s: i64,
}

impl CompactFamilies {
    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    /// Whether chain `c` must be complete at layer `u`.
    pub fn forced(&self, c: usize, u: i64) -> bool {
        self.chains[c].class <= u + 1 - self.s
    }

    /// Whether chain `c` must be untouched at layer `u`.
    pub fn closed(&self, c: usize, u: i64) -> bool {
        self.chains[c].class >= u + 1
    }

    /// Enumerates all members at layer `u`: count vectors with forced chains complete,
    /// closed chains empty, total weight at most `(1+eps)^u` and every element released.
    pub fn members(&self, u: i64, base: f64) -> Vec<Vec<u16>> {
        let cap = base.powi(u as i32) * (1.0 + 1e-12);
        let mut out = Vec::new();
        let mut cur = vec![0u16; self.len()];
        let mut fixed_w = 0.0;
        let mut free = Vec::new();
        for c in 0..self.len() {
            if self.forced(c, u) {
                cur[c] = self.chains[c].len() as u16;
                fixed_w += self.prefix_weight[c][self.chains[c].len()];
            } else if !self.closed(c, u) {
                free.push(c);
            }
        }
        for c in 0..self.len() {
            if self.forced(c, u) && self.chains[c].len() > 0 && self.earliest[c][self.chains[c].len() - 1] > u {
                return out;
            }
        }
        if fixed_w > cap {
            return out;
        }
        fn rec(
            f: &CompactFamilies,
            free: &[usize],
            pos: usize,
            w: f64,
            cap: f64,
            u: i64,
            cur: &mut Vec<u16>,
            out: &mut Vec<Vec<u16>>,
        ) {
            if pos == free.len() {
                out.push(cur.clone());
                return;
            }
            let c = free[pos];
            for k in 0..=f.chains[c].len() {
                if k > 0 && f.earliest[c][k - 1] > u {
                    break;
                }
                let nw = w + f.prefix_weight[c][k];
                if nw > cap {
                    break;
                }
                cur[c] = k as u16;
                rec(f, free, pos + 1, nw, cap, u, cur, out);
            }
            cur[c] = 0;
        }
        rec(self, &free, 0, fixed_w, cap, u, &mut cur, &mut out);
        out
    }

    /// Local job indices completed in a member.
    pub fn jobs_of(&self, state: &[u16]) -> Vec<usize> {
        let mut out = Vec::new();
        for (c, &k) in state.iter().enumerate() {
            for item in &self.chains[c].items[..k as usize] {
                out.extend_from_slice(item);
            }
        }
        out
    }
}

/// Splits every release class into heavy chains and one chain of light groups.
pub fn build_families(loc: &Localization) -> CompactFamilies {
    let eps = loc.eps().clone();
    let mut chains = Vec::new();
    let mut classes: Vec<i64> = loc.class.clone();
    classes.sort();
    classes.dedup();
    for &v in &classes {
        for (e, mut group) in loc.heavy_groups(v) {
            group.sort_by(|&a, &b| loc.volume[b].cmp(&loc.volume[a]).then(loc.ids[b].cmp(&loc.ids[a])));
            chains.push(Chain {
                class: v,
                kind: ChainKind::Heavy { weight_exp: e },
                items: group.into_iter().map(|k| vec![k]).collect(),
            });
        }
        let mut light = loc.light_members(v);
        if light.is_empty() {
            continue;
        }
        light.sort_by(|&a, &b| loc.ratio(b).cmp(&loc.ratio(a)).then(loc.ids[b].cmp(&loc.ids[a])));
        let floor = &eps * &eps * loc.grid.len(v);
        let mut items: Vec<Vec<usize>> = Vec::new();
        let mut cur: Vec<usize> = Vec::new();
        let mut w = Q::zero();
        for k in light {
            cur.push(k);
            w += loc.weight(k);
            if w >= floor {
                items.push(std::mem::take(&mut cur));
                w = Q::zero();
            }
        }
        if !cur.is_empty() {
            items.push(cur);
        }
        chains.push(Chain { class: v, kind: ChainKind::Light, items });
    }

    let weight_f: Vec<f64> = (0..loc.len()).map(|k| to_f64(&loc.weight(k))).collect();
    let mut prefix_weight = Vec::with_capacity(chains.len());
    let mut prefix_volume = Vec::with_capacity(chains.len());
    let mut prefix_volume_q = Vec::with_capacity(chains.len());
    let mut earliest = Vec::with_capacity(chains.len());
    for ch in &chains {
        let mut pw = vec![0.0];
        let mut pv = vec![0.0];
        let mut pq = vec![Q::zero()];
        let mut ea = Vec::new();
        for item in &ch.items {
            let w: f64 = item.iter().map(|&k| weight_f[k]).sum();
            let vq = item.iter().fold(Q::zero(), |a, &k| a + &loc.volume[k]);
            pw.push(pw.last().unwrap() + w);
            pv.push(pv.last().unwrap() + to_f64(&vq));
            pq.push(pq.last().unwrap() + &vq);
            let need = item
                .iter()
                .map(|&k| loc.release(k) + loc.weight(k))
                .max()
                .expect("nonempty item");
            // smallest u with (1+eps)^u >= need
            let u = crate::rational::ceil_log(loc.base(), &need);
            let prev = ea.last().copied().unwrap_or(i64::MIN);
            ea.push(u.max(prev));
        }
        prefix_weight.push(pw);
        prefix_volume.push(pv);
        prefix_volume_q.push(pq);
        earliest.push(ea);
    }
    CompactFamilies { chains, prefix_weight, prefix_volume, prefix_volume_q, earliest, s: loc.s }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, InstanceKind, Job, JobId};
    use crate::ptas::localize::localize;
    use crate::rational::{q, qi};

    #[test]
    fn heavy_chain_follows_volume_order() {
        let inst = Instance::new(
            [5, 2, 9].iter().enumerate().map(|(i, &v)| Job::new(i as JobId + 1, qi(v), qi(4))).collect(),
            InstanceKind::GivenSpeed,
        )
        .unwrap();
        let mut loc = localize(&inst, &q(1, 4)).unwrap();
        // place all three jobs in one heavy class
        loc.class = vec![1; 3];
        loc.light = vec![false; 3];
        let fam = build_families(&loc);
        assert_eq!(fam.len(), 1);
        let chain = &fam.chains[0];
        let volumes: Vec<i64> =
            chain.items.iter().map(|it| loc.volume[it[0]].to_integer().try_into().unwrap()).collect();
        assert_eq!(volumes, vec![9, 5, 2]);
        // complements of the completed prefixes are the volume-sorted prefixes of (2, 5, 9)
        let complements: Vec<Vec<i64>> = (0..=3)
            .map(|k| {
                let mut rest = volumes[k..].to_vec();
                rest.sort();
                rest
            })
            .collect();
        assert_eq!(complements, vec![vec![2, 5, 9], vec![2, 5], vec![2], vec![]]);
    }

    #[test]
    fn light_groups_respect_weight_band() {
        let eps = q(1, 4);
        let n = 40;
        let inst = Instance::new(
            (0..n).map(|i| Job::new(i + 1, qi(1 + (i as i64 * 7) % 5), qi(1))).collect(),
            InstanceKind::GivenSpeed,
        )
        .unwrap();
        let mut loc = localize(&inst, &eps).unwrap();
        // one class whose interval is long enough for every job to be light
        let class = 40;
        loc.class = vec![class; n as usize];
        loc.light = vec![true; n as usize];
        let fam = build_families(&loc);
        let chain = fam.chains.iter().find(|c| c.kind == ChainKind::Light).unwrap();
        let floor = &eps * &eps * loc.grid.len(class);
        for (i, item) in chain.items.iter().enumerate() {
            let w = item.iter().fold(Q::zero(), |a, &k| a + loc.weight(k));
            assert!(w <= &floor * qi(2));
            if i + 1 < chain.items.len() {
                assert!(w >= floor);
            }
        }
        // groups follow Reverse Smith order
        let flat: Vec<usize> = chain.items.concat();
        for w in flat.windows(2) {
            assert!(loc.ratio(w[0]) >= loc.ratio(w[1]));
        }
    }
}
