//! Property tests for the structural invariants: packing monotonicity and
//! subadditivity, assignment-cost sanity, dual feasibility, weak duality on
//! sampled realizations, and oracle envelope behavior.

use loadcoord::contracts::{gen_er_bipartite, Family, LaneLevelFamily, RegionalFamily};
use loadcoord::dfw::run_dfw;
use loadcoord::dfw::DfwConfig;
use loadcoord::instance::{sample_realization, Instance};
use loadcoord::lp::solve_dual_lp;
use loadcoord::pricing::{Oracle, UniformStaticOracle};
use loadcoord::rng::neumaier_dot;
use proptest::prelude::*;

fn family_strategy() -> impl Strategy<Value = Family> {
    prop_oneof![
        (1usize..=10).prop_map(|l| Family::Lane(LaneLevelFamily { num_loads: l })),
        (1usize..=5, 1usize..=5, 0.0..1.0f64, any::<u64>()).prop_map(|(nl, nr, p, seed)| {
            Family::Bipartite(gen_er_bipartite(nl, nr, p, seed).unwrap())
        }),
        (1usize..=8, 2usize..=6, any::<u64>()).prop_map(|(l, t, seed)| {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (state >> 33) as usize
            };
            let colors: Vec<usize> = (0..l).map(|_| next() % 2).collect();
            let intervals: Vec<(usize, usize)> = (0..l)
                .map(|_| {
                    let s = 1 + next() % t;
                    let e = s + next() % (t - s + 1);
                    (s, e)
                })
                .collect();
            Family::Regional(RegionalFamily::new(t, colors, intervals).unwrap())
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pack_count_is_monotone_and_subadditive(
        family in family_strategy(),
        seed in any::<u64>(),
    ) {
        let l = family.num_loads();
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as u64
        };
        let x: Vec<u64> = (0..l).map(|_| next() % 3).collect();
        let y: Vec<u64> = (0..l).map(|_| next() % 3).collect();
        let xy: Vec<u64> = x.iter().zip(&y).map(|(&a, &b)| a + b).collect();
        let px = family.pack_count(&x);
        let py = family.pack_count(&y);
        prop_assert!(family.pack_count(&xy) <= px + py, "subadditivity violated");
        prop_assert!(px <= family.pack_count(&xy), "monotonicity violated (x <= x + y)");
        // pack is between the largest coordinate sum constraint and |X|.
        let total: u64 = x.iter().sum();
        prop_assert!(px <= total);
    }

    #[test]
    fn assignment_cost_bounds_and_capacity_monotonicity(
        family in family_strategy(),
        seed in any::<u64>(),
    ) {
        let l = family.num_loads();
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            state >> 33
        };
        let x: Vec<u64> = (0..l).map(|_| next() % 3).collect();
        let a: Vec<f64> = (0..l).map(|_| 50.0 + (next() % 350) as f64).collect();
        let total: f64 = x.iter().zip(&a).map(|(&xi, &ai)| xi as f64 * ai).sum();
        let mut prev = f64::INFINITY;
        for b in 0..=(x.iter().sum::<u64>() + 1) {
            let cost = family.assignment_cost(&x, b, &a);
            prop_assert!(cost >= -1e-9 && cost <= total + 1e-9);
            prop_assert!(cost <= prev + 1e-9, "cost must be nonincreasing in capacity");
            prev = cost;
        }
        // Full demand coverable once capacity reaches the packing number.
        let full = family.assignment_cost(&x, family.pack_count(&x), &a);
        prop_assert!(full.abs() < 1e-9, "pack_count contracts must cover everything");
    }

    #[test]
    fn dual_solutions_are_feasible(
        family in family_strategy(),
        seed in any::<u64>(),
    ) {
        let l = family.num_loads();
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (u32::MAX as f64 * 2.0)
        };
        let a: Vec<f64> = (0..l).map(|_| 100.0 + 300.0 * next()).collect();
        let q: Vec<f64> = (0..l).map(|_| next().min(1.0)).collect();
        let b = 1 + (seed % (l as u64 + 2));
        let oracles = vec![Oracle::Uniform(UniformStaticOracle::new(100.0, 200.0).unwrap()); l];
        let inst = Instance::new(a.clone(), b, family, oracles).unwrap();
        let sol = solve_dual_lp(&inst, &q).unwrap();
        for (load, &lam) in sol.prices.lambda.iter().enumerate() {
            prop_assert!(lam >= -1e-9 && lam <= a[load] + 1e-7);
        }
        prop_assert!(sol.prices.mu >= -1e-9);
        prop_assert!(inst.family.separation_oracle(&sol.prices.lambda, sol.prices.mu).is_none());
    }

    #[test]
    fn sampled_realization_is_weakly_dual(
        family in family_strategy(),
        seed in any::<u64>(),
    ) {
        // C(X) >= lambda . X - mu B for the converged dual point, per sample.
        let l = family.num_loads();
        let b = 1 + (seed % (l as u64 + 1));
        let a = vec![300.0; l];
        let oracles = vec![Oracle::Uniform(UniformStaticOracle::new(100.0, 200.0).unwrap()); l];
        let inst = Instance::new(a.clone(), b, family, oracles).unwrap();
        let dfw = run_dfw(&inst, &DfwConfig::new(25.0).unwrap()).unwrap();
        prop_assert!(dfw.converged);
        for s in 0..20 {
            let x = sample_realization(&dfw.residual, seed, s).unwrap();
            let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let cost = inst.family.assignment_cost(&x, inst.capacity, &a);
            let lower = neumaier_dot(&dfw.prices.lambda, &xf)
                - dfw.prices.mu * inst.capacity as f64;
            prop_assert!(cost >= lower - 1e-6, "C(X) = {cost} < {lower}");
        }
    }

    #[test]
    fn oracle_best_response_never_beats_terminal_cost(w in 0.0..500.0f64) {
        for oracle in [
            Oracle::Uniform(UniformStaticOracle::new(100.0, 200.0).unwrap()),
            Oracle::Uniform(UniformStaticOracle::new(50.0, 350.0).unwrap()),
        ] {
            let summary = oracle.best_response(w).unwrap();
            // Doing nothing is always available, so r(w) <= w; and no policy
            // can have negative spend.
            prop_assert!(summary.total <= w + 1e-9);
            prop_assert!(summary.spot_cost >= 0.0);
            prop_assert!((0.0..=1.0).contains(&summary.non_procurement));
        }
    }

    #[test]
    fn fluid_pack_interpolates_integer_packing(
        family in family_strategy(),
        seed in any::<u64>(),
    ) {
        let l = family.num_loads();
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (u32::MAX as f64 * 2.0)
        };
        let d: Vec<f64> = (0..l).map(|_| 3.0 * next()).collect();
        let est = family.fluid_pack(&d, 200, seed).unwrap();
        let floor: Vec<u64> = d.iter().map(|&v| v.floor() as u64).collect();
        let ceil: Vec<u64> = d.iter().map(|&v| v.ceil() as u64).collect();
        let lo = family.pack_count(&floor) as f64;
        let hi = family.pack_count(&ceil) as f64;
        prop_assert!(est.mean >= lo - 3.0 * est.stderr - 1e-9);
        prop_assert!(est.mean <= hi + 3.0 * est.stderr + 1e-9);
    }
}
