use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;
use routedist::cost::{DistrictCost, TableCost};
use routedist::exact::{enumerate_districts, solve_set_partitioning};
use routedist::geom::gen;
use routedist::ils::{solve_ils, IlsBudget, P_RM};
use routedist::partition::{initial_solution, validate_solution, InitBudget, InstanceConfig};
use routedist::rng;
use routedist::saa::{saa_district_cost, saa_district_cost_exact, sample_random_districts};
use routedist::scenario::{sample_scenarios, ScenarioSet, Split};
use routedist::tsp::{tsp_cost, tsp_exact};
use routedist::Point;

fn point() -> impl Strategy<Value = Point> {
    (0.0..10.0f64, 0.0..10.0f64).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heuristic_tour_is_a_permutation_never_below_exact(depot in point(), pts in prop::collection::vec(point(), 0..9), seed in any::<u64>()) {
        let h = tsp_cost(depot, &pts, seed);
        let mut order = h.order.clone();
        order.sort_unstable();
        prop_assert_eq!(order, (0..pts.len()).collect::<Vec<_>>());
        let e = tsp_exact(depot, &pts).unwrap();
        prop_assert!(h.length >= e.length - 1e-9);
        prop_assert!(h.length <= e.length * 1.1 + 1e-9);
    }

    #[test]
    fn saa_cost_ignores_scenario_order(seed in 0u64..1000) {
        let region = gen::grid(3, 2, 1.0, seed).unwrap();
        let s = sample_scenarios(&region, 0.004, 6, seed, Split::Test).unwrap();
        let mut perm: Vec<usize> = (0..s.count()).collect();
        perm.shuffle(&mut rng::rng(seed));
        let per_unit = (0..region.len())
            .map(|u| perm.iter().map(|&t| s.unit_scenario(u, t).to_vec()).collect())
            .collect();
        let shuffled = ScenarioSet::from_points(Split::Test, s.seed, s.kappa, per_unit).unwrap();
        let members: Vec<usize> = (0..region.len()).collect();
        let a = saa_district_cost(&region, &members, &s).unwrap();
        let b = saa_district_cost(&region, &members, &shuffled).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn removing_units_never_raises_exact_cost(seed in 0u64..1000) {
        let region = gen::grid(3, 3, 1.0, seed).unwrap().with_depot(Point::new(-1.0, 1.5));
        let kappa = 0.8 / (region.total_population() / region.len() as f64);
        let s = sample_scenarios(&region, kappa, 4, seed, Split::Train).unwrap();
        let mut r = rng::rng(seed);
        for d in sample_random_districts(&region, 2, 4, 5, seed).unwrap() {
            let mut sub = d.members().to_vec();
            sub.remove(r.random_range(0..sub.len()));
            if let (Ok(big), Ok(small)) = (saa_district_cost_exact(&region, d.members(), &s), saa_district_cost_exact(&region, &sub, &s)) {
                prop_assert!(small <= big + 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ils_stays_feasible_and_never_beats_the_exact_optimum(seed in 0u64..10_000) {
        let region = gen::grid(4, 3, 1.0, seed).unwrap();
        let cfg = InstanceConfig::custom(&region, 2, 4, 4).unwrap();
        let mut cat = enumerate_districts(&region, 2, 4, 100_000).unwrap();
        let mut r = rng::rng(seed);
        let table = TableCost::new(cat.districts.iter().map(|d| (d.clone(), r.random_range(1.0..5.0) * d.len() as f64)));
        cat.price(&table, "table").unwrap();
        let best = solve_set_partitioning(&cat, 4).unwrap().cost;
        let init = initial_solution(&region, &cfg, seed, InitBudget::default()).unwrap();
        let start: f64 = init.districts().iter().map(|d| table.cost(d).unwrap()).sum();
        let out = solve_ils(&region, &table, init, 2, 4, P_RM, seed, IlsBudget::iterations(20)).unwrap();
        prop_assert!(validate_solution(&out.solution, &region, 2, 4, 4).is_ok());
        let recomputed: f64 = out.solution.districts().iter().map(|d| table.cost(d).unwrap()).sum();
        assert_relative_eq!(recomputed, out.cost, max_relative = 1e-12);
        prop_assert!(out.cost <= start + 1e-9);
        prop_assert!(out.cost >= best - 1e-9);
    }
}
