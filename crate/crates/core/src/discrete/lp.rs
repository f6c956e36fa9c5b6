//! Minimum energy to process a volume within a cost allowance in one weight interval.

use num::traits::Signed;
use serde::{Deserialize, Serialize};

use crate::discrete::envelope::Scalar;
use crate::model::DiscreteSpeedMenu;
use crate::rational::Q;

/// Optimal durations per menu speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalLp<T> {
    pub energy: T,
    pub durations: Vec<T>,
}

/// Minimizes `sum_i l_i P_i` subject to `sum_i l_i s_i = volume` and `sum_i l_i <= time`
/// by enumerating basic solutions with at most two positive durations.
/// Returns `None` when the fastest speed cannot finish the volume in time.
pub fn min_energy_within<T: Scalar>(speeds: &[T], power: &[T], volume: &T, time: &T) -> Option<IntervalLp<T>> {
    let k = speeds.len();
    if volume.is_zero() {
        return Some(IntervalLp { energy: T::zero(), durations: vec![T::zero(); k] });
    }
    let mut best: Option<IntervalLp<T>> = None;
    let mut consider = |durations: Vec<T>| {
        let energy = durations.iter().zip(power).fold(T::zero(), |a, (l, p)| a + l.clone() * p.clone());
        if best.as_ref().map_or(true, |b| energy < b.energy) {
            best = Some(IntervalLp { energy, durations });
        }
    };
    for i in 0..k {
        let l = volume.clone() / speeds[i].clone();
        if l <= *time {
            let mut d = vec![T::zero(); k];
            d[i] = l;
            consider(d);
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            // l_i + l_j = time, l_i s_i + l_j s_j = volume
            let denom = speeds[i].clone() - speeds[j].clone();
            if denom.is_zero() {
                continue;
            }
            let li = (volume.clone() - time.clone() * speeds[j].clone()) / denom;
            let lj = time.clone() - li.clone();
            if li.is_negative() || lj.is_negative() {
                continue;
            }
            let mut d = vec![T::zero(); k];
            d[i] = li;
            d[j] = lj;
            consider(d);
        }
    }
    best
}

/// `APX_u`: energy for `volume` whose cost `(1+eps)^u * sum_i l_i` must not exceed `allowance`.
pub fn interval_energy_lp(volume: &Q, interval_weight: &Q, allowance: &Q, menu: &DiscreteSpeedMenu) -> Option<IntervalLp<Q>> {
    if allowance.is_negative() || !interval_weight.is_positive() {
        return None;
    }
    let time = allowance / interval_weight;
    min_energy_within(menu.speeds(), menu.power(), volume, &time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use num::traits::Zero;

    fn menu() -> DiscreteSpeedMenu {
        DiscreteSpeedMenu::new(vec![qi(2), qi(1)], vec![qi(4), qi(1)]).unwrap()
    }

    #[test]
    fn zero_volume_costs_nothing() {
        let r = interval_energy_lp(&qi(0), &qi(1), &qi(0), &menu()).unwrap();
        assert!(r.energy.is_zero());
        assert!(r.durations.iter().all(|d| d.is_zero()));
    }

    #[test]
    fn binding_vertex_mixes_two_speeds() {
        let r = interval_energy_lp(&qi(2), &qi(2), &qi(3), &menu()).unwrap();
        assert_eq!(r.durations, vec![q(1, 2), qi(1)]);
        assert_eq!(r.energy, qi(3));
    }

    #[test]
    fn too_little_time_is_infeasible() {
        assert!(interval_energy_lp(&qi(2), &qi(1), &q(1, 2), &menu()).is_none());
    }
}
