use std::collections::BTreeMap;

use num::traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varispeed::continuous::optimal_energy_split;
use varispeed::generate::{gen_hardness_gadget, gen_random, gen_random_menu, gen_random_speed, RandomParams, TardinessInstance};
use varispeed::oracle::{
    discrete_order_optimum, exact_continuous, exact_given_speed, numeric_energy_minimum, numeric_kkt_check, OracleConfig,
};
use varispeed::rational::{q, qi, to_f64};
use varispeed::schedule::{order_cost, remaining_weight_integral, time_cost, time_schedule, to_time_schedule, weight_cost};
use varispeed::stretch::{stretch_intervals, weight_stretch};
use varispeed::{
    DiscreteSpeedMenu, EnergyAssignment, Instance, InstanceKind, Job, JobId, PiecewiseConstantSpeed, PowerLaw, SpeedOracle,
    WeightSchedule, Q,
};

fn shuffled(inst: &Instance, seed: u64) -> Vec<JobId> {
    let mut ids = inst.ids();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids
}

/// Weight-schedule for `order` with random idle gaps below some jobs.
fn with_idle(inst: &Instance, order: &[JobId], seed: u64) -> WeightSchedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut acc = Q::zero();
    let mut c = BTreeMap::new();
    for &id in order.iter().rev() {
        if rng.gen_bool(0.4) {
            acc += q(rng.gen_range(1..=4), rng.gen_range(1..=3));
        }
        acc += &inst.job(id).unwrap().weight;
        c.insert(id, acc.clone());
    }
    WeightSchedule::new(c)
}

fn permutations(ids: &[JobId]) -> Vec<Vec<JobId>> {
    if ids.len() <= 1 {
        return vec![ids.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..ids.len() {
        let mut rest = ids.to_vec();
        let x = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

#[test]
fn oracle_examples() {
    let s = PiecewiseConstantSpeed::new(vec![qi(0), qi(5)], vec![qi(2), qi(1)]).unwrap();
    assert_eq!(s.time(&qi(4)).unwrap(), qi(2));
    assert_eq!(s.time(&qi(12)).unwrap(), qi(7));
    assert_eq!(s.time(&qi(0)).unwrap(), qi(0));
    let inst = Instance::new(vec![Job::new(1, qi(12), qi(1))], InstanceKind::GivenSpeed).unwrap();
    assert_eq!(order_cost(&inst, &[1], &s).unwrap(), qi(7));
}

#[test]
fn stretch_examples() {
    let inst = Instance::new(vec![Job::new(1, qi(1), qi(10))], InstanceKind::GivenSpeed).unwrap();
    let ws = WeightSchedule::from_order(&inst, &[1]).unwrap();
    assert_eq!(weight_stretch(&ws, &q(1, 4)).unwrap().completion(1), Some(&q(25, 2)));
    assert!(weight_stretch(&WeightSchedule::default(), &q(1, 4)).unwrap().is_empty());
    // C^w = (1+eps)^(u-1) moves to (1+eps)^u
    let eps = q(1, 4);
    let inst = Instance::new(vec![Job::new(1, qi(1), q(25, 16))], InstanceKind::GivenSpeed).unwrap();
    let ws = WeightSchedule::from_order(&inst, &[1]).unwrap();
    let out = stretch_intervals(&inst, &ws, &eps).unwrap();
    assert_eq!(out.schedule.completion(1), Some(&q(125, 64)));
}

#[test]
fn gadget_example() {
    let t = TardinessInstance { volumes: vec![1, 1], weights: vec![1, 1], due: 2 };
    let g = gen_hardness_gadget(&t, &qi(2)).unwrap();
    assert_eq!(g.eps, q(1, 4));
    assert_eq!(g.menu.speeds(), &[qi(4), qi(1)]);
    assert_eq!(g.budget, qi(8));
}

#[test]
fn gadget_maps_unit_speed_completions() {
    for seed in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1 + seed as usize % 6;
        let t = TardinessInstance {
            volumes: (0..n).map(|_| rng.gen_range(1..=5)).collect(),
            weights: (0..n).map(|_| rng.gen_range(1..=5)).collect(),
            due: rng.gen_range(1..=8),
        };
        let g = gen_hardness_gadget(&t, &qi(2)).unwrap();
        for perm in permutations(&g.instance.ids()) {
            let mut prefix = Q::zero();
            for id in perm {
                prefix += &g.instance.job(id).unwrap().volume;
                assert_eq!(g.cost_map(&prefix), g.profile.time(&prefix).unwrap());
            }
        }
    }
}

#[test]
fn decreasing_a_completion_weight_never_hurts() {
    for seed in 0..40u64 {
        let n = 1 + seed as usize % 5;
        let inst = gen_random(n, &RandomParams::default(), seed).unwrap();
        let speed = gen_random_speed(3, seed).unwrap();
        let ws = with_idle(&inst, &shuffled(&inst, seed), seed);
        let base = weight_cost(&inst, &ws, &speed).unwrap();
        for j in inst.jobs() {
            let c = ws.completion(j.id).unwrap().clone();
            let mut lower = &c - qi(1) / qi(3);
            while lower >= j.weight {
                let moved = ws.with_completion(j.id, lower.clone());
                if moved.validate(&inst).is_ok() && moved.time_order(&inst).unwrap() == ws.time_order(&inst).unwrap() {
                    assert!(weight_cost(&inst, &moved, &speed).unwrap() <= base);
                }
                lower -= qi(1) / qi(3);
            }
        }
    }
}

#[test]
fn exact_given_speed_beats_heuristics() {
    for seed in 0..10u64 {
        let inst = gen_random(6, &RandomParams::default(), seed).unwrap();
        let speed = gen_random_speed(4, seed).unwrap();
        let ex = exact_given_speed(&inst, &speed, &OracleConfig::default()).unwrap();
        for k in 0..20 {
            assert!(ex.cost <= order_cost(&inst, &shuffled(&inst, k), &speed).unwrap());
        }
        for p in &ex.best_permutations {
            assert_eq!(order_cost(&inst, p, &speed).unwrap(), ex.cost);
        }
    }
}

#[test]
fn exact_given_speed_unit_example() {
    let inst = Instance::new(vec![Job::new(1, qi(1), qi(2)), Job::new(2, qi(2), qi(1))], InstanceKind::GivenSpeed).unwrap();
    let ex = exact_given_speed(&inst, &PiecewiseConstantSpeed::unit(), &OracleConfig::default()).unwrap();
    assert_eq!(ex.cost, qi(5));
    assert_eq!(ex.best_permutations, vec![vec![1, 2]]);
}

#[test]
fn continuous_two_unit_jobs_match_numeric_minimum() {
    let inst = Instance::new(vec![Job::new(1, qi(1), qi(1)), Job::new(2, qi(1), qi(1))], InstanceKind::ContinuousEnergy).unwrap();
    let law = PowerLaw::new(qi(2)).unwrap();
    let ex = exact_continuous(&inst, &law, 1.0, &OracleConfig::default()).unwrap();
    assert!((ex.cost - (3.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    assert_eq!(ex.best_permutations.len(), 2);
    let numeric = numeric_energy_minimum(&inst, &[1, 2], &law, 1.0).unwrap();
    assert!((numeric - ex.cost).abs() < 1e-6 * ex.cost);
}

#[test]
fn uniform_split_violates_stationarity() {
    let inst = Instance::new(vec![Job::new(1, qi(1), qi(3)), Job::new(2, qi(1), qi(1))], InstanceKind::ContinuousEnergy).unwrap();
    let law = PowerLaw::new(qi(2)).unwrap();
    let uniform = EnergyAssignment { energies: [(1, 0.5), (2, 0.5)].into_iter().collect(), budget: 1.0 };
    assert!(numeric_kkt_check(&inst, &[1, 2], &law, &uniform).unwrap().residual > 1e-3);
    let opt = optimal_energy_split(&inst, &[1, 2], &law, 1.0).unwrap();
    assert!(numeric_kkt_check(&inst, &[1, 2], &law, &opt).unwrap().residual < 1e-8);
    let single = Instance::new(vec![Job::new(1, qi(2), qi(3))], InstanceKind::ContinuousEnergy).unwrap();
    let a = EnergyAssignment { energies: [(1, 0.7)].into_iter().collect(), budget: 1.0 };
    assert_eq!(numeric_kkt_check(&single, &[1], &law, &a).unwrap().residual, 0.0);
}

#[test]
fn discrete_single_job_corners() {
    let inst = Instance::new(vec![Job::new(1, qi(2), qi(1))], InstanceKind::DiscreteEnergy).unwrap();
    let menu = DiscreteSpeedMenu::new(vec![qi(2), qi(1)], vec![qi(4), qi(1)]).unwrap();
    assert_eq!(discrete_order_optimum(&inst, &[1], &menu, &qi(4)).unwrap().cost, qi(1));
    assert_eq!(discrete_order_optimum(&inst, &[1], &menu, &qi(2)).unwrap().cost, qi(2));
    assert_eq!(discrete_order_optimum(&inst, &[1], &menu, &qi(3)).unwrap().cost, q(3, 2));
}

/// Direct LP per permutation: variables are the times each job spends at each speed.
#[test]
fn discrete_order_optimum_matches_direct_lp() {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    for seed in 0..6u64 {
        let p = RandomParams { kind: InstanceKind::DiscreteEnergy, ..Default::default() };
        let inst = gen_random(5, &p, seed).unwrap();
        let menu = gen_random_menu(2, 3, seed).unwrap();
        let budget = varispeed::generate::gen_budget(&inst, &menu, seed);
        for k in 0..8 {
            let order = shuffled(&inst, seed * 100 + k);
            let ours = discrete_order_optimum(&inst, &order, &menu, &budget).unwrap();
            let mut lp = Problem::new(OptimizationDirection::Minimize);
            let mut remaining: f64 = to_f64(&inst.total_weight());
            let mut energy = Vec::new();
            for &id in &order {
                let j = inst.job(id).unwrap();
                let vars: Vec<_> = (0..menu.len()).map(|_| lp.add_var(remaining, (0.0, f64::INFINITY))).collect();
                lp.add_constraint(
                    vars.iter().zip(menu.speeds()).map(|(&v, s)| (v, to_f64(s))).collect::<Vec<_>>(),
                    ComparisonOp::Eq,
                    to_f64(&j.volume),
                );
                energy.extend(vars.iter().zip(menu.power()).map(|(&v, pw)| (v, to_f64(pw))));
                remaining -= to_f64(&j.weight);
            }
            lp.add_constraint(energy, ComparisonOp::Le, to_f64(&budget));
            let obj = lp.solve().unwrap().objective();
            let c = to_f64(&ours.cost);
            assert!((c - obj).abs() <= 1e-9 * c.max(1.0), "seed {seed}: {c} vs {obj}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn time_cost_equals_remaining_weight_integral(seed in 0u64..1_000_000, n in 1usize..=10, segs in 1usize..=5) {
        let inst = gen_random(n, &RandomParams::default(), seed).unwrap();
        let speed = gen_random_speed(segs, seed).unwrap();
        let ts = time_schedule(&inst, &shuffled(&inst, seed), &speed).unwrap();
        prop_assert_eq!(time_cost(&inst, &ts), remaining_weight_integral(&inst, &ts));
    }

    #[test]
    fn weight_cost_bounds_time_cost(seed in 0u64..1_000_000, n in 1usize..=6) {
        let inst = gen_random(n, &RandomParams::default(), seed).unwrap();
        let speed = gen_random_speed(3, seed).unwrap();
        let ws = with_idle(&inst, &shuffled(&inst, seed), seed);
        let wc = weight_cost(&inst, &ws, &speed).unwrap();
        let tc = time_cost(&inst, &to_time_schedule(&inst, &ws, &speed).unwrap());
        prop_assert!(wc >= tc);
        prop_assert_eq!(wc == tc, ws.idle_weight(&inst).is_zero());
    }

    #[test]
    fn oracle_is_monotone_and_piecewise_linear(seed in 0u64..1_000_000, segs in 1usize..=6) {
        let speed = gen_random_speed(segs, seed).unwrap();
        prop_assert_eq!(speed.time(&Q::zero()).unwrap(), Q::zero());
        let caps = speed.capacities_at_breakpoints().to_vec();
        let mut knots: Vec<Q> = caps.clone();
        knots.push(caps.last().unwrap() + qi(5));
        knots.dedup();
        for w in knots.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (fa, fb) = (speed.time(a).unwrap(), speed.time(b).unwrap());
            prop_assert!(fb >= fa);
            for k in 1..4 {
                let t = q(k, 4);
                let x = a + (b - a) * &t;
                let fx = speed.time(&x).unwrap();
                // linear inside a segment of positive speed
                prop_assert_eq!(fx, &fa + (&fb - &fa) * &t + gap_correction(&speed, a, b, &t));
            }
        }
    }

    #[test]
    fn weight_stretch_cost_factor(seed in 0u64..1_000_000, n in 1usize..=6, k in 1i64..=9) {
        let inst = gen_random(n, &RandomParams::default(), seed).unwrap();
        let speed = gen_random_speed(3, seed).unwrap();
        let eps = q(k, 20);
        let ws = with_idle(&inst, &shuffled(&inst, seed), seed);
        let before = weight_cost(&inst, &ws, &speed).unwrap();
        let after = weight_cost(&inst, &weight_stretch(&ws, &eps).unwrap(), &speed).unwrap();
        prop_assert!(after >= before);
        prop_assert!(after <= before * (Q::one() + eps));
    }

    #[test]
    fn stretch_intervals_cost_factor(seed in 0u64..1_000_000, n in 1usize..=6) {
        let inst = gen_random(n, &RandomParams::default(), seed).unwrap();
        let speed = gen_random_speed(3, seed).unwrap();
        let eps = q(1, 4);
        let ws = with_idle(&inst, &shuffled(&inst, seed), seed);
        let out = stretch_intervals(&inst, &ws, &eps).unwrap();
        prop_assert!(out.schedule.validate(&inst).is_ok());
        let before = weight_cost(&inst, &ws, &speed).unwrap();
        let after = weight_cost(&inst, &out.schedule, &speed).unwrap();
        prop_assert!(after >= before);
        prop_assert!(after <= before * (Q::one() + &eps) * (Q::one() + &eps));
    }

    #[test]
    fn discrete_order_optimum_is_nonincreasing_in_budget(seed in 0u64..1_000_000, n in 1usize..=5, kappa in 1usize..=3) {
        let p = RandomParams { kind: InstanceKind::DiscreteEnergy, ..Default::default() };
        let inst = gen_random(n, &p, seed).unwrap();
        let menu = gen_random_menu(kappa, 2, seed).unwrap();
        let lo = varispeed::oracle::min_energy(&inst, &menu);
        let order = shuffled(&inst, seed);
        let mut last: Option<Q> = None;
        for k in 0..6 {
            let b = &lo * (Q::one() + q(k, 2));
            let c = discrete_order_optimum(&inst, &order, &menu, &b).unwrap().cost;
            if let Some(l) = &last {
                prop_assert!(c <= *l);
            }
            last = Some(c);
        }
    }
}

/// Between consecutive capacity knots the oracle is linear; the only exception is the jump
/// across a zero-speed segment, which happens at the left knot and shifts every interior point.
fn gap_correction(speed: &PiecewiseConstantSpeed, a: &Q, b: &Q, t: &Q) -> Q {
    let eps_left = speed.time(a).unwrap();
    let just_after = speed.time(&(a + (b - a) / qi(1_000_000))).unwrap();
    let slope = (speed.time(b).unwrap() - &just_after) * qi(1_000_000) / qi(999_999);
    let jump = &just_after - &eps_left - &slope / qi(1_000_000);
    jump * (Q::one() - t)
}
