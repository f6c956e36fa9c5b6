//! Seeded instance generators and the two-speed hardness gadget.

use num::traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteSpeedMenu, Instance, InstanceKind, Job, JobId};
use crate::rational::{from_f64, pow, q, qi, to_f64, Q};
use crate::speed::PiecewiseConstantSpeed;

/// Integer ranges (inclusive) for random instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomParams {
    pub volume: (u32, u32),
    pub weight: (u32, u32),
    pub release: Option<(u32, u32)>,
    pub kind: InstanceKind,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { volume: (1, 10), weight: (1, 10), release: None, kind: InstanceKind::GivenSpeed }
    }
}

fn check_range(name: &str, r: (u32, u32)) -> Result<()> {
    if r.0 > r.1 {
        return Err(Error::InvalidParameter(format!("{name} range [{}, {}] is empty", r.0, r.1)));
    }
    Ok(())
}

/// Deterministic random instance with `n` jobs and ids `1..=n`.
pub fn gen_random(n: usize, params: &RandomParams, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    check_range("volume", params.volume)?;
    check_range("weight", params.weight)?;
    if let Some(r) = params.release {
        check_range("release", r)?;
        if params.kind == InstanceKind::GivenSpeed && r.1 > 0 {
            return Err(Error::InvalidParameter("given-speed instances have no release dates".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs = (0..n)
        .map(|i| {
            let v = rng.gen_range(params.volume.0..=params.volume.1);
            let w = rng.gen_range(params.weight.0..=params.weight.1);
            let r = params.release.map_or(0, |r| rng.gen_range(r.0..=r.1));
            Job::new(i as JobId + 1, qi(v as i64), qi(w as i64)).with_release(qi(r as i64))
        })
        .collect();
    Instance::new(jobs, params.kind)
}

/// Random piecewise-constant speed with `segments` segments and a positive final speed.
pub fn gen_random_speed(segments: usize, seed: u64) -> Result<PiecewiseConstantSpeed> {
    if segments == 0 {
        return Err(Error::InvalidParameter("speed needs at least one segment".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut breakpoints = vec![Q::zero()];
    let mut speeds = Vec::with_capacity(segments);
    for i in 0..segments {
        if i > 0 {
            let gap = qi(rng.gen_range(1..=6)) / qi(rng.gen_range(1..=2));
            let next = breakpoints.last().unwrap() + gap;
            breakpoints.push(next);
        }
        let last = i + 1 == segments;
        let lo = if last { 1 } else { 0 };
        speeds.push(q(rng.gen_range(lo..=8), rng.gen_range(1..=2)));
    }
    PiecewiseConstantSpeed::new(breakpoints, speeds)
}

/// Random menu of `kappa` distinct speeds with `P(s) = s^alpha`.
pub fn gen_random_menu(kappa: usize, alpha: u32, seed: u64) -> Result<DiscreteSpeedMenu> {
    if kappa == 0 {
        return Err(Error::InvalidParameter("menu needs at least one speed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut speeds: Vec<Q> = Vec::new();
    while speeds.len() < kappa {
        let s = q(rng.gen_range(1..=12), 4);
        if !speeds.contains(&s) {
            speeds.push(s);
        }
    }
    speeds.sort_by(|a, b| b.cmp(a));
    DiscreteSpeedMenu::power_law(speeds, alpha)
}

/// Budget between the minimum feasible energy and the all-fastest energy.
pub fn gen_budget(inst: &Instance, menu: &DiscreteSpeedMenu, seed: u64) -> Q {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = inst.total_volume();
    let lo = &v * menu.min_energy_per_work();
    let hi = &v * menu.energy_per_work(0);
    let t = q(rng.gen_range(1..=9), 10);
    if hi > lo {
        &lo + (hi - &lo) * t
    } else {
        lo
    }
}

/// Tardiness-style source instance of the reduction: integer volumes, weights and a common due date.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TardinessInstance {
    pub volumes: Vec<u64>,
    pub weights: Vec<u64>,
    pub due: u64,
}

/// Two-speed energy instance equivalent to a convex piecewise-linear cost with one breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HardnessGadget {
    pub instance: Instance,
    pub menu: DiscreteSpeedMenu,
    pub budget: Q,
    pub eps: Q,
    pub due: Q,
    /// Speed `1/eps` on `[0, eps d)` and `1` afterwards.
    pub profile: PiecewiseConstantSpeed,
    /// Whether powers and budget are exact (integer exponent) or rounded from binary64.
    pub exact: bool,
}

impl HardnessGadget {
    /// `f_eps(x) = eps x` for `x < d` and `x - d + eps d` otherwise.
    pub fn cost_map(&self, x: &Q) -> Q {
        if *x < self.due {
            &self.eps * x
        } else {
            x - &self.due + &self.eps * &self.due
        }
    }
}

fn rational_power(base: &Q, alpha: &Q) -> Result<(Q, bool)> {
    if alpha.is_integer() {
        let e = alpha.to_integer().to_i64().ok_or_else(|| Error::InvalidParameter("alpha too large".into()))?;
        Ok((pow(base, e), true))
    } else {
        Ok((from_f64(to_f64(base).powf(to_f64(alpha)))?, false))
    }
}

/// Builds the two-speed instance with `eps = 1 / (d sum w)`, speeds `(1/eps, 1)` and
/// budget `V + d (1/eps^(alpha-1) - 1)`.
pub fn gen_hardness_gadget(t: &TardinessInstance, alpha: &Q) -> Result<HardnessGadget> {
    if t.due == 0 {
        return Err(Error::InvalidParameter("due date must be positive".into()));
    }
    if t.volumes.is_empty() || t.volumes.len() != t.weights.len() {
        return Err(Error::InvalidParameter("need matching nonempty volumes and weights".into()));
    }
    if alpha <= &Q::one() {
        return Err(Error::InvalidParameter("alpha must exceed 1".into()));
    }
    let total_w: u64 = t.weights.iter().sum();
    if total_w == 0 {
        return Err(Error::InvalidParameter("total weight must be positive".into()));
    }
    let d = Q::from_integer((t.due as i64).into());
    let eps = Q::one() / (&d * Q::from_integer((total_w as i64).into()));
    let fast = Q::one() / &eps;
    let (p_fast, exact1) = rational_power(&fast, alpha)?;
    let (scale, exact2) = rational_power(&fast, &(alpha - Q::one()))?;
    let jobs: Vec<Job> = t
        .volumes
        .iter()
        .zip(&t.weights)
        .enumerate()
        .map(|(i, (&v, &w))| Job::new(i as JobId + 1, qi(v as i64), qi(w as i64)))
        .collect();
    let instance = Instance::new(jobs, InstanceKind::DiscreteEnergy)?;
    let volume = instance.total_volume();
    let budget = volume + &d * (scale - Q::one());
    let menu = DiscreteSpeedMenu::new(vec![fast.clone(), Q::one()], vec![p_fast, Q::one()])?;
    let profile = PiecewiseConstantSpeed::new(vec![Q::zero(), &eps * &d], vec![fast, Q::one()])?;
    debug_assert!(budget.is_positive());
    Ok(HardnessGadget { instance, menu, budget, eps, due: d, profile, exact: exact1 && exact2 })
}
