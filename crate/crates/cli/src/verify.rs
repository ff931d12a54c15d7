//! `loadcoord verify`: invariant battery over the built-in instance and
//! randomized cross-checks between the fast paths and the generic solvers.

use loadcoord::contracts::{gen_er_bipartite, sample_rounding, Family, LaneLevelFamily};
use loadcoord::dfw::{run_dfw, DfwConfig};
use loadcoord::eval::evaluate_policy;
use loadcoord::instance::{validate_instance, Instance};
use loadcoord::lba::run_lba;
use loadcoord::lp::{generic_pack_count, solve_dual_lp, solve_dual_lp_cutting};
use loadcoord::pricing::{Oracle, UniformStaticOracle};
use loadcoord::rng::{mix, neumaier_dot};

use crate::experiments::example1_instance;

/// Expected cost of the converged posted-price policy on the built-in
/// instance: 1000 * 39 + 300 * E[(N - 700)^+], N ~ Binomial(1000, 0.7).
const BUILTIN_DFW_COST: f64 = 40733.82324073991;

pub struct Check {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

fn rand_f64(seed: u64, counter: &mut u64) -> f64 {
    *counter += 1;
    mix(seed, *counter) as f64 / u64::MAX as f64
}

pub fn run_checks(seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();

    let inst = example1_instance();
    let report = validate_instance(&inst);
    checks.push(Check {
        name: "instance-validation",
        ok: report.violations.is_empty(),
        detail: format!(
            "{} violations, {} warnings",
            report.violations.len(),
            report.warnings.len()
        ),
    });

    let dfw = run_dfw(&inst, &DfwConfig::new(1e-6).unwrap()).unwrap();
    let lambda_ok = dfw.prices.lambda.iter().all(|&l| (l - 160.0).abs() <= 1e-4);
    checks.push(Check {
        name: "builtin-fixed-point",
        ok: dfw.converged && lambda_ok && dfw.final_gap.abs() <= 1e-9 && dfw.iterations <= 30,
        detail: format!(
            "lambda in 160 +/- 1e-4: {lambda_ok}, gap {:.3e}, {} iterations",
            dfw.final_gap, dfw.iterations
        ),
    });

    let eval = evaluate_policy(&inst, &dfw.policies, 2, 0).unwrap();
    let rel = (eval.mean_cost - BUILTIN_DFW_COST).abs() / BUILTIN_DFW_COST;
    checks.push(Check {
        name: "builtin-expected-cost",
        ok: eval.exact && rel <= 1e-9,
        detail: format!("exact cost {}, relative error {rel:.2e}", eval.mean_cost),
    });

    let lba = run_lba(&inst).unwrap();
    checks.push(Check {
        name: "builtin-baseline-cost",
        ok: lba.expected_cost == 60_000.0 && lba.contract_set.len() == 700,
        detail: format!("cost {}, {} committed", lba.expected_cost, lba.contract_set.len()),
    });

    // Closed-form duals against the cutting-plane solver.
    let mut counter = 0u64;
    let mut worst: f64 = 0.0;
    for trial in 0..25u64 {
        let fam = if trial % 2 == 0 {
            let l = 2 + (mix(seed, 1000 + trial) % 7) as usize;
            Family::Lane(LaneLevelFamily { num_loads: l })
        } else {
            let n = 2 + (mix(seed, 2000 + trial) % 3) as usize;
            Family::Bipartite(
                gen_er_bipartite(n, n, 0.5, mix(seed, 3000 + trial)).unwrap(),
            )
        };
        let l = fam.num_loads();
        let a = vec![100.0 + 200.0 * rand_f64(seed, &mut counter); l];
        let q: Vec<f64> = (0..l).map(|_| rand_f64(seed, &mut counter)).collect();
        let b = 1 + mix(seed, 4000 + trial) % l as u64;
        let inst = Instance::new(
            a,
            b,
            fam,
            vec![Oracle::Uniform(UniformStaticOracle::new(100.0, 200.0).unwrap()); l],
        )
        .unwrap();
        let fast = solve_dual_lp(&inst, &q).unwrap();
        let generic = solve_dual_lp_cutting(&inst, &q).unwrap();
        let scale = fast.objective.abs().max(generic.objective.abs()).max(1.0);
        worst = worst.max((fast.objective - generic.objective).abs() / scale);
    }
    checks.push(Check {
        name: "dual-fast-path",
        ok: worst <= 1e-6,
        detail: format!("worst relative objective gap {worst:.2e} over 25 instances"),
    });

    // Structure-specific packing against the covering integer program.
    let mut pack_ok = true;
    let mut tested = 0;
    for trial in 0..20u64 {
        let n = 2 + (mix(seed, 5000 + trial) % 3) as usize;
        let fam = Family::Bipartite(
            gen_er_bipartite(n, n, 0.4, mix(seed, 6000 + trial)).unwrap(),
        );
        let l = fam.num_loads();
        let x: Vec<u64> = (0..l).map(|i| mix(seed, 7000 + trial * 64 + i as u64) % 3).collect();
        let fast = fam.pack_count(&x);
        let generic = generic_pack_count(&fam, &x).unwrap();
        pack_ok &= fast == generic;
        tested += 1;
    }
    checks.push(Check {
        name: "pack-equivalence",
        ok: pack_ok,
        detail: format!("{tested} bipartite instances against the integer program"),
    });

    // Per-sample weak duality at converged prices.
    let mut weak_ok = true;
    for trial in 0..5u64 {
        let n = 3 + (mix(seed, 8000 + trial) % 3) as usize;
        let fam = Family::Bipartite(
            gen_er_bipartite(n, n, 0.5, mix(seed, 9000 + trial)).unwrap(),
        );
        let l = fam.num_loads();
        let a = vec![300.0; l];
        let inst = Instance::new(
            a.clone(),
            1 + trial % 4,
            fam,
            vec![Oracle::Uniform(UniformStaticOracle::new(100.0, 200.0).unwrap()); l],
        )
        .unwrap();
        let dfw = run_dfw(&inst, &DfwConfig::new(10.0).unwrap()).unwrap();
        for s in 0..50 {
            let x = sample_rounding(&dfw.residual, mix(seed, 9500 + trial), s);
            let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let cost = inst.family.assignment_cost(&x, inst.capacity, &a);
            let lower =
                neumaier_dot(&dfw.prices.lambda, &xf) - dfw.prices.mu * inst.capacity as f64;
            weak_ok &= cost >= lower - 1e-6;
        }
    }
    checks.push(Check {
        name: "weak-duality",
        ok: weak_ok,
        detail: "C(X) >= lambda'X - mu B on 250 sampled realizations".to_string(),
    });

    checks
}
