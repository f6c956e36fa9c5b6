//! Release- and deadline-weights for the positive-weight jobs of an instance.

use std::collections::BTreeMap;

use num::traits::{One, Signed, Zero};

use crate::error::Result;
use crate::grid::{check_eps, WeightIntervalGrid};
use crate::model::{Instance, JobId};
use crate::rational::{ceil_log, pow, Q};

/// Rounded weights, release classes and the window length `s`.
///
/// Job `k` has rounded weight `(1+eps)^weight_exp[k]` after a common rescaling that puts the
/// smallest release class at 1, release-weight `(1+eps)^(class[k]-1)` and deadline-weight
/// `(1+eps)^(class[k]-1+s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Localization {
    pub(crate) grid: WeightIntervalGrid,
    /// Instance indices of the positive-weight jobs.
    pub jobs: Vec<usize>,
    pub ids: Vec<JobId>,
    pub volume: Vec<Q>,
    pub weight_exp: Vec<i64>,
    pub class: Vec<i64>,
    pub light: Vec<bool>,
    pub s: i64,
    /// Exponent subtracted from every rounded weight.
    pub shift: i64,
    pub promotions: usize,
}

impl Localization {
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn eps(&self) -> &Q {
        self.grid.eps()
    }

    pub fn base(&self) -> &Q {
        self.grid.base()
    }

    /// `nu` for the rescaled rounded weights.
    pub fn nu(&self) -> i64 {
        self.grid.nu()
    }

    pub fn weight(&self, k: usize) -> Q {
        pow(self.base(), self.weight_exp[k])
    }

    pub fn release(&self, k: usize) -> Q {
        pow(self.base(), self.class[k] - 1)
    }

    pub fn deadline(&self, k: usize) -> Q {
        pow(self.base(), self.deadline_layer(k))
    }

    /// Layer `u` with `(1+eps)^u` equal to the deadline-weight.
    pub fn deadline_layer(&self, k: usize) -> i64 {
        self.class[k] - 1 + self.s
    }

    pub fn min_class(&self) -> i64 {
        self.class.iter().copied().min().unwrap_or(1)
    }

    pub fn max_class(&self) -> i64 {
        self.class.iter().copied().max().unwrap_or(1)
    }

    /// Jobs of release class `u`.
    pub fn members(&self, u: i64) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.class[k] == u).collect()
    }

    /// Heavy jobs of class `u` grouped by weight exponent.
    pub fn heavy_groups(&self, u: i64) -> BTreeMap<i64, Vec<usize>> {
        let mut g: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for k in self.members(u) {
            if !self.light[k] {
                g.entry(self.weight_exp[k]).or_default().push(k);
            }
        }
        g
    }

    /// Light jobs of class `u`.
    pub fn light_members(&self, u: i64) -> Vec<usize> {
        self.members(u).into_iter().filter(|&k| self.light[k]).collect()
    }

    /// Total rounded weight of class `u`.
    pub fn class_weight(&self, u: i64) -> Q {
        self.members(u).iter().fold(Q::zero(), |a, &k| a + self.weight(k))
    }

    /// Same localization with a longer window.
    pub fn with_s(&self, s: i64) -> Self {
        Localization { s, ..self.clone() }
    }

    /// `v_k / w_k` with rounded weights.
    pub fn ratio(&self, k: usize) -> Q {
        &self.volume[k] / self.weight(k)
    }
}

fn is_light(grid: &WeightIntervalGrid, weight_exp: i64, class: i64) -> bool {
    let e = grid.eps();
    grid.power(weight_exp) <= e * e * grid.len(class)
}

/// Rounds weights, assigns release classes, promotes jobs out of overloaded classes and
/// picks the smallest window `s` with `w(J_u) <= eps |I_(u+s-1)| / (1+eps)` for every class.
pub fn localize(inst: &Instance, eps: &Q) -> Result<Localization> {
    check_eps(eps)?;
    let base = Q::one() + eps;
    let jobs: Vec<usize> = (0..inst.len()).filter(|&i| inst.jobs()[i].weight.is_positive()).collect();
    let raw_exp: Vec<i64> = jobs.iter().map(|&i| ceil_log(&base, &inst.jobs()[i].weight)).collect();
    let offset = ceil_log(&base, eps);
    let shift = raw_exp.iter().map(|e| e + offset).min().unwrap_or(0);
    let weight_exp: Vec<i64> = raw_exp.iter().map(|e| e - shift).collect();
    let total = weight_exp.iter().fold(Q::zero(), |a, &e| a + pow(&base, e));
    let grid = WeightIntervalGrid::new(eps, &if total.is_positive() { total } else { Q::one() })?;
    let mut class: Vec<i64> = weight_exp.iter().map(|e| e + offset + 1).collect();
    let volume: Vec<Q> = jobs.iter().map(|&i| inst.jobs()[i].volume.clone()).collect();
    let ids: Vec<JobId> = jobs.iter().map(|&i| inst.jobs()[i].id).collect();
    let eps2 = eps * eps;
    let mut promotions = 0;

    let mut u = class.iter().copied().min().unwrap_or(1);
    while u <= class.iter().copied().max().unwrap_or(0) {
        let len = grid.len(u);
        // light jobs beyond (1+eps^2)|I_u|: promote the smallest v/w, ties to the lowest id
        loop {
            let light: Vec<usize> =
                (0..jobs.len()).filter(|&k| class[k] == u && is_light(&grid, weight_exp[k], u)).collect();
            let w = light.iter().fold(Q::zero(), |a, &k| a + grid.power(weight_exp[k]));
            if w <= (Q::one() + &eps2) * &len {
                break;
            }
            let pick = *light
                .iter()
                .min_by(|&&a, &&b| {
                    let ra = &volume[a] / grid.power(weight_exp[a]);
                    let rb = &volume[b] / grid.power(weight_exp[b]);
                    ra.cmp(&rb).then(ids[a].cmp(&ids[b]))
                })
                .expect("nonempty");
            class[pick] += 1;
            promotions += 1;
        }
        // heavy jobs of one weight beyond |I_u| + w: promote the smallest volume, ties to the lowest id
        let mut exps: Vec<i64> = (0..jobs.len())
            .filter(|&k| class[k] == u && !is_light(&grid, weight_exp[k], u))
            .map(|k| weight_exp[k])
            .collect();
        exps.sort();
        exps.dedup();
        for e in exps {
            let w = grid.power(e);
            loop {
                let group: Vec<usize> = (0..jobs.len())
                    .filter(|&k| class[k] == u && weight_exp[k] == e && !is_light(&grid, e, u))
                    .collect();
                if group.len() <= 1 || Q::from_integer((group.len() as i64).into()) * &w <= &len + &w {
                    break;
                }
                let pick = *group
                    .iter()
                    .min_by(|&&a, &&b| volume[a].cmp(&volume[b]).then(ids[a].cmp(&ids[b])))
                    .expect("nonempty");
                class[pick] += 1;
                promotions += 1;
            }
        }
        u += 1;
    }

    let light: Vec<bool> = (0..jobs.len()).map(|k| is_light(&grid, weight_exp[k], class[k])).collect();
    let mut s = 1i64;
    let mut per_class: BTreeMap<i64, Q> = BTreeMap::new();
    for k in 0..jobs.len() {
        *per_class.entry(class[k]).or_insert_with(Q::zero) += grid.power(weight_exp[k]);
    }
    for (&u, w) in &per_class {
        // eps^2 (1+eps)^(u+s-2) / (1+eps) >= w
        let need = w * &base * pow(&base, 2 - u) / &eps2;
        s = s.max(ceil_log(&base, &need));
    }
    Ok(Localization { grid, jobs, ids, volume, weight_exp, class, light, s, shift, promotions })
}
