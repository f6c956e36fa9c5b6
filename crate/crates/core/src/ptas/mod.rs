//! Approximation scheme for a machine with given speeds.
//!
//! Weights are rounded up to powers of `1+eps`, jobs get release- and deadline-weights,
//! and a dynamic program over compact families decides which jobs complete in each
//! weight interval `I_u`. Within an interval the jobs follow Smith's rule in time.

pub mod dp;
pub mod families;
pub mod localize;
pub mod smith;

use num::traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::check_eps;
use crate::model::{Instance, JobId};
use crate::rational::{to_f64, Q};
use crate::schedule::{order_cost, WeightSchedule};
use crate::speed::SpeedOracle;

pub use dp::{Closure, State};
pub use families::{build_families, Chain, ChainKind, CompactFamilies};
pub use localize::{localize, Localization};
pub use smith::classify_and_smith;


#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PtasConfig {
    pub eps: Q,
    /// Restrict completed sets to those closed under weight/volume dominance between heavy jobs.
    pub dominance: bool,
    /// Cap on the number of stored DP states.
    pub max_states: usize,
}

impl PtasConfig {
    pub fn new(eps: Q) -> Self {
        PtasConfig { eps, dominance: true, max_states: 4_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtasStats {
    pub s: i64,
    pub layers: i64,
    pub states: usize,
    pub max_layer_states: usize,
    pub promotions: usize,
    pub chains: usize,
    pub dominance: bool,
}

#[derive(Debug, Clone)]
pub struct PtasSolution {
    /// Time order of ids.
    pub order: Vec<JobId>,
    /// Weight-schedule without idle weight for `order`.
    pub schedule: WeightSchedule,
    /// Exact cost of `order`.
    pub cost: Q,
    /// DP table value in original weight units (rounded weights).
    pub dp_value: f64,
    /// Weight interval of completion per positive-weight job, keyed by id.
    pub blocks: Vec<(i64, Vec<JobId>)>,
    pub localization: Localization,
    pub stats: PtasStats,
}

/// Orders jobs by Smith's rule (`w/v` descending, zero volume first, ties by id).
pub(crate) fn smith_sort(inst: &Instance, ids: &mut [JobId]) {
    ids.sort_by(|&a, &b| {
        let ja = inst.job(a).expect("known id");
        let jb = inst.job(b).expect("known id");
        // w_a / v_a > w_b / v_b  <=>  w_a v_b > w_b v_a
        let lhs = &ja.weight * &jb.volume;
        let rhs = &jb.weight * &ja.volume;
        rhs.cmp(&lhs).then(a.cmp(&b))
    });
}

/// Runs the DP for a localization, growing the window when the restricted space is empty.
pub(crate) fn run_localized(
    loc: &Localization,
    dominance: bool,
    mut attempt: impl FnMut(&Localization, &CompactFamilies, &Closure) -> Result<Option<(f64, Vec<State>, usize, usize)>>,
) -> Result<(Localization, CompactFamilies, f64, Vec<State>, usize, usize, bool)> {
    let mut s = loc.s;
    let limit = loc.s + loc.nu().max(1) + loc.max_class() + 2;
    loop {
        let l = loc.with_s(s);
        let fam = build_families(&l);
        for &dom in if dominance { &[true, false][..] } else { &[false][..] } {
            let closure = Closure::new(&l, &fam, dom);
            if let Some((value, path, states, widest)) = attempt(&l, &fam, &closure)? {
                return Ok((l, fam, value, path, states, widest, dom));
            }
        }
        if s >= limit {
            return Err(Error::StateLimit("no feasible family chain found".into()));
        }
        s += 1;
    }
}

/// Time order from the completed sets per layer: later layers run first.
pub(crate) fn order_from_path(
    inst: &Instance,
    loc: &Localization,
    fam: &CompactFamilies,
    path: &[State],
) -> (Vec<JobId>, Vec<(i64, Vec<JobId>)>) {
    let mut blocks = Vec::new();
    for u in 1..path.len() {
        let before: std::collections::HashSet<usize> = fam.jobs_of(&path[u - 1]).into_iter().collect();
        let mut block: Vec<JobId> =
            fam.jobs_of(&path[u]).into_iter().filter(|k| !before.contains(k)).map(|k| loc.ids[k]).collect();
        if block.is_empty() {
            continue;
        }
        smith_sort(inst, &mut block);
        blocks.push((u as i64, block));
    }
    let mut order: Vec<JobId> = Vec::with_capacity(inst.len());
    for (_, b) in blocks.iter().rev() {
        order.extend_from_slice(b);
    }
    let mut zero: Vec<JobId> = inst.jobs().iter().filter(|j| j.weight.is_zero()).map(|j| j.id).collect();
    zero.sort();
    order.extend(zero);
    (order, blocks)
}

/// `(1 + Kε)`-approximate order for a given speed function.
pub fn solve(inst: &Instance, oracle: &dyn SpeedOracle, cfg: &PtasConfig) -> Result<PtasSolution> {
    check_eps(&cfg.eps)?;
    let loc = localize(inst, &cfg.eps)?;
    let base = to_f64(loc.base());
    let total_volume: f64 = loc.volume.iter().map(to_f64).sum();
    // the whole instance must fit on the machine
    oracle.time(&inst.total_volume())?;
    let (loc, fam, value, path, states, widest, dom) = if loc.is_empty() {
        let fam = build_families(&loc);
        (loc, fam, 0.0, vec![Vec::new()], 0, 0, false)
    } else {
        run_localized(&loc, cfg.dominance, |l, fam, closure| {
            let top = l.nu().max(l.max_class() - 1 + l.s);
            let params = dp::DpParams { base, top, total_volume, max_states: cfg.max_states };
            Ok(dp::run(fam, closure, oracle, &params)?.map(|out| {
                let states = out.layers.iter().map(|l| l.states.len()).sum();
                let widest = out.layers.iter().map(|l| l.states.len()).max().unwrap_or(0);
                (out.value, out.path, states, widest)
            }))
        })?
    };
    let (order, blocks) = order_from_path(inst, &loc, &fam, &path);
    let cost = order_cost(inst, &order, oracle)?;
    let schedule = WeightSchedule::from_order(inst, &order)?;
    let dp_value = value * base.powi(loc.shift as i32);
    let stats = PtasStats {
        s: loc.s,
        layers: path.len() as i64 - 1,
        states,
        max_layer_states: widest,
        promotions: loc.promotions,
        chains: fam.len(),
        dominance: dom,
    };
    Ok(PtasSolution { order, schedule, cost, dp_value, blocks, localization: loc, stats })
}
