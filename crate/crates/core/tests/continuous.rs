use proptest::prelude::*;
use varispeed::continuous::{optimal_energy_split, order_cost, pareto, universal_sequence, ParetoCurve};
use varispeed::generate::{gen_random, RandomParams};
use varispeed::oracle::{exact_continuous, numeric_energy_minimum, numeric_kkt_check, OracleConfig};
use varispeed::rational::{q, qi};
use varispeed::speed::PowerOracle;
use varispeed::{Instance, InstanceKind, PowerLaw, SpeedOracle};

fn params() -> RandomParams {
    RandomParams { kind: InstanceKind::ContinuousEnergy, ..Default::default() }
}

fn instance(n: usize, seed: u64) -> Instance {
    gen_random(n, &params(), seed).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn two_identical_jobs_tie() {
    let inst = Instance::new(
        vec![varispeed::Job::new(1, qi(2), qi(3)), varispeed::Job::new(2, qi(2), qi(3))],
        InstanceKind::ContinuousEnergy,
    )
    .unwrap();
    let law = PowerLaw::new(qi(2)).unwrap();
    let ex = exact_continuous(&inst, &law, 1.0, &OracleConfig { max_n: 9 }).unwrap();
    assert_eq!(ex.best_permutations.len(), 2);
}

#[test]
fn universal_sequence_near_optimal() {
    for seed in 0..8 {
        let inst = instance(2 + seed as usize % 6, seed);
        let law = PowerLaw::new(qi(2)).unwrap();
        let order = universal_sequence(&inst, &law, &q(1, 20)).unwrap();
        let ex = exact_continuous(&inst, &law, 1.0, &OracleConfig { max_n: 9 }).unwrap();
        let r = order_cost(&inst, &order, &law, 1.0).unwrap() / ex.cost;
        assert!(r >= 1.0 - 1e-9 && r <= (1.0 + 0.05f64).powi(2), "seed {seed}: {r}");
    }
}

#[test]
fn pareto_tracks_per_budget_optima() {
    let law = PowerLaw::new(qi(3)).unwrap();
    for seed in 0..5 {
        let inst = instance(5, seed);
        let budgets = [0.25, 1.0, 4.0, 16.0];
        let (curve, points) = pareto(&inst, &law, &q(1, 10), &budgets).unwrap();
        for p in &points {
            let ex = exact_continuous(&inst, &law, p.budget, &OracleConfig { max_n: 9 }).unwrap();
            assert!(p.cost >= ex.cost * (1.0 - 1e-9));
            assert!(p.cost <= ex.cost * 1.1f64.powf(1.5));
            assert!(rel(p.cost, curve.cost(p.budget)) < 1e-12);
            assert!(rel(p.split.assignment.total(), p.budget) < 1e-12);
        }
    }
}

#[test]
fn power_oracle_is_monotone_on_a_grid() {
    for (a, b) in [(1, 2), (2, 3), (1, 3)] {
        let o = PowerOracle::new(&q(a, b)).unwrap();
        let mut prev = 0.0;
        for k in 1..2000 {
            let y = o.time_f64(k as f64 * 0.37).unwrap();
            assert!(y >= prev);
            prev = y;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_split_is_stationary(
        seed in 0u64..10_000,
        n in 1usize..=8,
        alpha in prop::sample::select(vec![(2i64, 1i64), (3, 1), (5, 2)]),
        budget in 0.05f64..50.0,
        perm_seed in any::<u64>(),
    ) {
        let inst = instance(n, seed);
        let law = PowerLaw::new(q(alpha.0, alpha.1)).unwrap();
        let mut order: Vec<u32> = inst.ids();
        let mut s = perm_seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = optimal_energy_split(&inst, &order, &law, budget).unwrap();
        let k = numeric_kkt_check(&inst, &order, &law, &a).unwrap();
        prop_assert!(k.residual < 1e-8, "{:?}", k);
        prop_assert!(k.budget_gap < 1e-12, "{:?}", k);
        let closed = order_cost(&inst, &order, &law, budget).unwrap();
        let numeric = numeric_energy_minimum(&inst, &order, &law, budget).unwrap();
        prop_assert!(rel(numeric, closed) < 1e-6, "{} vs {}", numeric, closed);
    }

    #[test]
    fn argmin_set_is_budget_independent(seed in 0u64..10_000, n in 1usize..=6, alpha in 2i64..=3) {
        let inst = instance(n, seed);
        let law = PowerLaw::new(qi(alpha)).unwrap();
        let cfg = OracleConfig { max_n: 9 };
        let sets: Vec<_> = [0.5, 1.0, 10.0]
            .iter()
            .map(|&e| exact_continuous(&inst, &law, e, &cfg).unwrap())
            .collect();
        prop_assert_eq!(&sets[0].best_permutations, &sets[1].best_permutations);
        prop_assert_eq!(&sets[0].best_permutations, &sets[2].best_permutations);
        let scaled: Vec<f64> = sets
            .iter()
            .zip([0.5f64, 1.0, 10.0])
            .map(|(s, e)| s.cost * e.powf(1.0 / (alpha as f64 - 1.0)))
            .collect();
        prop_assert!(rel(scaled[0], scaled[1]) < 1e-9 && rel(scaled[2], scaled[1]) < 1e-9);
    }

    #[test]
    fn curve_scaling_law(seed in 0u64..10_000, n in 1usize..=8, e in 0.01f64..100.0) {
        let inst = instance(n, seed);
        let law = PowerLaw::new(q(5, 2)).unwrap();
        let c = ParetoCurve::new(&inst, inst.ids(), &law).unwrap();
        let k = 1.0 / (law.alpha_f64() - 1.0);
        prop_assert!(rel(c.cost(e) * e.powf(k), c.cost(1.0)) < 1e-9);
    }
}
