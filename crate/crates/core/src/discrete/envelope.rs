//! Optimal speed allocation for a fixed job order on a discrete speed menu.
//!
//! Each unit of work run at speed `s_i` costs `1/s_i` time and `P(s_i)/s_i` energy. Only
//! points on the lower convex envelope between the fastest speed and the most
//! energy-efficient speed are useful. Starting from the cheapest point, extra energy is
//! spent greedily on the (job, envelope segment) pair with the largest time saving
//! weighted by the job's coefficient per unit of energy.

use std::cmp::Ordering;

use num::traits::{Num, Signed};

use crate::model::DiscreteSpeedMenu;
use crate::rational::{to_f64, Q};

/// Scalar type usable by the allocator.
pub trait Scalar: Num + Signed + Clone + PartialOrd + std::fmt::Debug {
    fn from_q(x: &Q) -> Self;
}

impl Scalar for Q {
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
}

impl Scalar for f64 {
    fn from_q(x: &Q) -> Self {
        to_f64(x)
    }
}

/// Lower convex envelope of the per-unit-work points `(1/s_i, P(s_i)/s_i)`.
#[derive(Debug, Clone)]
pub struct Envelope<T> {
    /// Menu indices on the envelope, fastest first, ending at the cheapest point.
    pub speeds: Vec<usize>,
    /// Time per unit work at each envelope point.
    pub time: Vec<T>,
    /// Energy per unit work at each envelope point.
    pub energy: Vec<T>,
}

impl<T: Scalar> Envelope<T> {
    pub fn new(menu: &DiscreteSpeedMenu) -> Self {
        let pts: Vec<(usize, T, T)> = (0..menu.len())
            .map(|i| {
                let s = &menu.speeds()[i];
                let t = T::from_q(&(Q::from_integer(1.into()) / s));
                let e = T::from_q(&menu.energy_per_work(i));
                (i, t, e)
            })
            .collect();
        // drop points that a faster point beats on energy
        let mut kept: Vec<usize> = Vec::new();
        for (k, p) in pts.iter().enumerate() {
            if kept.last().map_or(true, |&l| p.2 < pts[l].2) {
                kept.push(k);
            }
        }
        let mut hull: Vec<usize> = Vec::new();
        for &k in &kept {
            while hull.len() >= 2 {
                let a = &pts[hull[hull.len() - 2]];
                let b = &pts[hull[hull.len() - 1]];
                let c = &pts[k];
                let cross = (b.1.clone() - a.1.clone()) * (c.2.clone() - a.2.clone())
                    - (b.2.clone() - a.2.clone()) * (c.1.clone() - a.1.clone());
                if cross <= T::zero() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(k);
        }
        Envelope {
            speeds: hull.iter().map(|&k| pts[k].0).collect(),
            time: hull.iter().map(|&k| pts[k].1.clone()).collect(),
            energy: hull.iter().map(|&k| pts[k].2.clone()).collect(),
        }
    }

    /// Index of the cheapest envelope point.
    pub fn cheapest(&self) -> usize {
        self.speeds.len() - 1
    }
}

/// Speed allocation for each job: amounts of work per menu speed.
#[derive(Debug, Clone)]
pub struct Allocation<T> {
    /// `work[j]` lists `(menu index, work units)` with positive work.
    pub work: Vec<Vec<(usize, T)>>,
    /// Execution time of each job.
    pub x: Vec<T>,
    pub energy: T,
    /// `sum_j coeff_j x_j`.
    pub objective: T,
}

/// Minimizes `sum_j coeff_j x_j` subject to total energy at most `budget`.
/// Returns `None` when even the cheapest speed exceeds the budget.
pub fn allocate<T: Scalar>(
    env: &Envelope<T>,
    volumes: &[T],
    coeff: &[T],
    budget: &T,
) -> Option<Allocation<T>> {
    let n = volumes.len();
    let last = env.cheapest();
    let base: T = volumes.iter().fold(T::zero(), |a, v| a + v.clone()) * env.energy[last].clone();
    if base > *budget {
        return None;
    }
    // fraction of each job moved across envelope segments k -> k-1
    let mut pairs: Vec<(usize, usize, T)> = Vec::new();
    for j in 0..n {
        if volumes[j].is_zero() || !coeff[j].is_positive() {
            continue;
        }
        for k in (1..=last).rev() {
            let dt = env.time[k].clone() - env.time[k - 1].clone();
            let de = env.energy[k - 1].clone() - env.energy[k].clone();
            pairs.push((j, k, coeff[j].clone() * dt / de));
        }
    }
    pairs.sort_by(|a, b| {
        b.2.partial_cmp(&a.2).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)).then(b.1.cmp(&a.1))
    });
    let mut left = budget.clone() - base.clone();
    // position[j] = envelope point reached, frac = fraction moved to point position-1
    let mut level = vec![last; n];
    let mut frac: Vec<T> = vec![T::zero(); n];
    for (j, k, _) in pairs {
        if !left.is_positive() {
            break;
        }
        if level[j] != k || !frac[j].is_zero() {
            continue;
        }
        let de = env.energy[k - 1].clone() - env.energy[k].clone();
        let need = volumes[j].clone() * de;
        if need <= left {
            left = left - need;
            level[j] = k - 1;
        } else {
            frac[j] = left.clone() / need;
            left = T::zero();
        }
    }
    let mut work = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut energy = T::zero();
    let mut objective = T::zero();
    for j in 0..n {
        let k = level[j];
        let v = volumes[j].clone();
        let mut parts = Vec::new();
        let mut xj = T::zero();
        if v.is_positive() {
            if frac[j].is_zero() {
                parts.push((env.speeds[k], v.clone()));
                xj = v.clone() * env.time[k].clone();
                energy = energy + v.clone() * env.energy[k].clone();
            } else {
                let fast = v.clone() * frac[j].clone();
                let slow = v.clone() - fast.clone();
                parts.push((env.speeds[k - 1], fast.clone()));
                parts.push((env.speeds[k], slow.clone()));
                xj = fast.clone() * env.time[k - 1].clone() + slow.clone() * env.time[k].clone();
                energy = energy + fast * env.energy[k - 1].clone() + slow * env.energy[k].clone();
            }
        }
        objective = objective + coeff[j].clone() * xj.clone();
        work.push(parts);
        x.push(xj);
    }
    Some(Allocation { work, x, energy, objective })
}
