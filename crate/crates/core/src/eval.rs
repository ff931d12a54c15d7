//! Policy evaluation: Monte Carlo (or exact, where the structure allows)
//! expected cost, contract utilization statistics, relative savings, and an
//! exhaustive grid optimizer for tiny instances.

use crate::contracts::{sample_rounding, Family};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::pricing::PolicySummary;
use crate::rng::neumaier_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Expected total cost: exact spot spend plus the contract-side estimate.
    pub mean_cost: f64,
    /// Standard error of the contract-side estimate (0 in exact modes).
    pub stderr: f64,
    pub spot_spend: f64,
    pub alternate_spend: f64,
    /// Mean of `min(pack_count(X), B)`.
    pub mean_utilization: f64,
    /// 0 when the expectation was computed exactly.
    pub n_samples: usize,
    pub seed: u64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptOracleResult {
    pub opt_cost: f64,
    /// Grid price vector attaining the minimum (lexicographically first).
    pub prices: Vec<f64>,
}

/// Evaluates per-load policies against the contract side: spot spend is the
/// exact `sum of s_l`, and the expected assignment cost over `X ~ q` is
/// computed exactly for lane-level families (Poisson-binomial convolution
/// for identical costs, per-load rank probabilities for up to 20 loads) and
/// by Monte Carlo otherwise.
pub fn evaluate_policy(
    inst: &Instance,
    policies: &[PolicySummary],
    n_samples: usize,
    seed: u64,
) -> Result<EvalReport> {
    let l = inst.num_loads();
    if policies.len() != l {
        return Err(Error::InvalidInput(format!("expected {l} policies, got {}", policies.len())));
    }
    let spot_spend = neumaier_sum(policies.iter().map(|p| p.spot_cost));
    let q: Vec<f64> = policies.iter().map(|p| p.non_procurement).collect();
    if q.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidInput("non-procurement probabilities must lie in [0,1]".into()));
    }
    let b = inst.capacity;
    let a = &inst.alternate_costs;
    if let Family::Lane(_) = inst.family {
        let identical = a.iter().all(|&v| v == a[0]);
        if identical {
            let dist = poisson_binomial(&q);
            let excess: f64 = dist
                .iter()
                .enumerate()
                .skip(b as usize + 1)
                .map(|(n, &p)| (n as f64 - b as f64) * p)
                .sum();
            let alternate_spend = a[0] * excess;
            let utilization: f64 = dist
                .iter()
                .enumerate()
                .map(|(n, &p)| (n as f64).min(b as f64) * p)
                .sum();
            return Ok(EvalReport {
                mean_cost: spot_spend + alternate_spend,
                stderr: 0.0,
                spot_spend,
                alternate_spend,
                mean_utilization: utilization,
                n_samples: 0,
                seed,
                exact: true,
            });
        }
        if l <= 20 {
            // Load `load` pays its alternate cost exactly when it goes
            // unprocured and at least B higher-priority loads do too
            // (coverage fills the largest costs first, ties to low index).
            let mut alternate_spend = 0.0;
            for load in 0..l {
                let ahead: Vec<f64> = (0..l)
                    .filter(|&k| {
                        k != load && (a[k] > a[load] || (a[k] == a[load] && k < load))
                    })
                    .map(|k| q[k])
                    .collect();
                let dist = poisson_binomial(&ahead);
                let tail: f64 = dist.iter().skip(b as usize).sum();
                alternate_spend += a[load] * q[load] * tail;
            }
            let dist = poisson_binomial(&q);
            let utilization: f64 = dist
                .iter()
                .enumerate()
                .map(|(n, &p)| (n as f64).min(b as f64) * p)
                .sum();
            return Ok(EvalReport {
                mean_cost: spot_spend + alternate_spend,
                stderr: 0.0,
                spot_spend,
                alternate_spend,
                mean_utilization: utilization,
                n_samples: 0,
                seed,
                exact: true,
            });
        }
    }
    if n_samples < 2 {
        return Err(Error::InvalidInput("Monte Carlo evaluation needs at least 2 samples".into()));
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut util_sum = 0.0;
    for s in 0..n_samples {
        let x = sample_rounding(&q, seed, s as u64);
        let cost = inst.family.assignment_cost(&x, b, a);
        sum += cost;
        sumsq += cost * cost;
        util_sum += (inst.family.pack_count(&x) as f64).min(b as f64);
    }
    let n = n_samples as f64;
    let alternate_spend = sum / n;
    let var = ((sumsq - n * alternate_spend * alternate_spend) / (n - 1.0)).max(0.0);
    Ok(EvalReport {
        mean_cost: spot_spend + alternate_spend,
        stderr: (var / n).sqrt(),
        spot_spend,
        alternate_spend,
        mean_utilization: util_sum / n,
        n_samples,
        seed,
        exact: false,
    })
}

/// Distribution of a sum of independent Bernoullis; index = count.
pub fn poisson_binomial(probs: &[f64]) -> Vec<f64> {
    let mut dist = vec![1.0];
    for &p in probs {
        let mut next = vec![0.0; dist.len() + 1];
        for (n, &mass) in dist.iter().enumerate() {
            next[n] += mass * (1.0 - p);
            next[n + 1] += mass * p;
        }
        dist = next;
    }
    dist
}

/// Relative savings of the second report over the first, in percent, with
/// the standard error propagated assuming independent runs.
pub fn relative_savings(baseline: &EvalReport, candidate: &EvalReport) -> Result<(f64, f64)> {
    let ml = baseline.mean_cost;
    let md = candidate.mean_cost;
    if !(ml > 0.0) {
        return Err(Error::InvalidInput(format!("baseline mean must be positive, got {ml}")));
    }
    let pct = 100.0 * (ml - md) / ml;
    let d_dl = md / (ml * ml);
    let d_dd = 1.0 / ml;
    let se = 100.0
        * ((d_dl * baseline.stderr).powi(2) + (d_dd * candidate.stderr).powi(2)).sqrt();
    Ok((pct, se))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationReport {
    pub fluid_value: f64,
    pub fluid_stderr: f64,
    /// `B - epsilon * beta_hat / nu`.
    pub fluid_bound: f64,
    /// Bound nonpositive: nothing to check.
    pub vacuous: bool,
    pub fluid_ok: bool,
    /// `B - epsilon * beta_hat / nu - sqrt(L ln(1/delta) / 2)`.
    pub threshold: f64,
    /// Fraction of samples with `min(pack_count(X), B) >= threshold`.
    pub frequency: f64,
    pub frequency_ok: bool,
}

/// Contract-utilization guarantees at a converged dual point: the fluid
/// packing of `q` must reach `B - epsilon * beta_hat / nu` (up to Monte
/// Carlo error), and the realized utilization must clear the concentration
/// threshold with frequency at least `1 - delta`.
pub fn utilization_check(
    inst: &Instance,
    residual: &[f64],
    beta_hat: f64,
    epsilon: f64,
    n_samples: usize,
    delta: f64,
    seed: u64,
) -> Result<UtilizationReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0,1), got {delta}")));
    }
    let b = inst.capacity as f64;
    let l = inst.num_loads() as f64;
    let fluid = inst.family.fluid_pack(residual, n_samples, seed)?;
    let fluid_bound = b - epsilon * beta_hat / inst.nu;
    let vacuous = fluid_bound <= 0.0;
    let fluid_ok = vacuous || fluid.mean >= fluid_bound - 3.0 * fluid.stderr;
    let threshold = fluid_bound - (l * (1.0 / delta).ln() / 2.0).sqrt();
    let mut hits = 0usize;
    for s in 0..n_samples {
        let x = sample_rounding(residual, seed, s as u64);
        let u = (inst.family.pack_count(&x) as f64).min(b);
        if u >= threshold {
            hits += 1;
        }
    }
    let frequency = hits as f64 / n_samples.max(1) as f64;
    Ok(UtilizationReport {
        fluid_value: fluid.mean,
        fluid_stderr: fluid.stderr,
        fluid_bound,
        vacuous,
        fluid_ok,
        threshold,
        frequency,
        frequency_ok: frequency >= 1.0 - delta,
    })
}

/// Exhaustive minimum over grid price vectors of the one-shot objective
/// `sum_l s_l(p_l) + E[C(X)]`, with the expectation taken exactly over all
/// `2^L` acceptance outcomes. Requires tiny static instances.
pub fn brute_force_opt(inst: &Instance, grid: &[f64]) -> Result<OptOracleResult> {
    let l = inst.num_loads();
    if l > 5 {
        return Err(Error::Capability(format!("grid optimizer supports at most 5 loads, got {l}")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("price grid is empty".into()));
    }
    if (grid.len() as f64).powi(l as i32) > 1e6 {
        return Err(Error::Capability("price grid too large to enumerate".into()));
    }
    // Per-load outcomes at each grid price.
    let mut outcomes = vec![Vec::with_capacity(grid.len()); l];
    for (load, oracle) in inst.oracles.iter().enumerate() {
        for &p in grid {
            outcomes[load].push(oracle.posted_outcome(p)?);
        }
    }
    // Assignment cost per acceptance outcome, shared across price vectors.
    let masks = 1usize << l;
    let mut mask_cost = Vec::with_capacity(masks);
    for mask in 0..masks {
        let x: Vec<u64> = (0..l).map(|load| (mask >> load & 1) as u64).collect();
        mask_cost.push(inst.family.assignment_cost(&x, inst.capacity, &inst.alternate_costs));
    }
    let mut best_cost = f64::INFINITY;
    let mut best_idx = vec![0usize; l];
    let mut idx = vec![0usize; l];
    loop {
        let spot: f64 = (0..l).map(|load| outcomes[load][idx[load]].0).sum();
        let mut contract = 0.0;
        for (mask, &cost) in mask_cost.iter().enumerate() {
            if cost == 0.0 {
                continue;
            }
            let mut prob = 1.0;
            for load in 0..l {
                let qv = outcomes[load][idx[load]].1;
                prob *= if mask >> load & 1 == 1 { qv } else { 1.0 - qv };
            }
            contract += prob * cost;
        }
        let total = spot + contract;
        if total < best_cost {
            best_cost = total;
            best_idx.copy_from_slice(&idx);
        }
        // Odometer over grid indices, least significant last, so the first
        // minimizer found is the lexicographically smallest price vector.
        let mut pos = l;
        loop {
            if pos == 0 {
                return Ok(OptOracleResult {
                    opt_cost: best_cost,
                    prices: best_idx.iter().map(|&i| grid[i]).collect(),
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < grid.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::LaneLevelFamily;
    use crate::pricing::{Oracle, UniformStaticOracle};

    fn lane_instance(l: usize, b: u64, a: f64) -> Instance {
        Instance::new(
            vec![a; l],
            b,
            Family::Lane(LaneLevelFamily { num_loads: l }),
            vec![Oracle::Uniform(UniformStaticOracle::new(100.0, 200.0).unwrap()); l],
        )
        .unwrap()
    }

    fn policies_at(inst: &Instance, w: f64) -> Vec<PolicySummary> {
        inst.oracles.iter().map(|o| o.best_response(w).unwrap()).collect()
    }

    #[test]
    fn example1_exact_cost_in_binomial_mode() {
        let inst = lane_instance(1000, 700, 300.0);
        let report = evaluate_policy(&inst, &policies_at(&inst, 160.0), 0, 0).unwrap();
        assert!(report.exact);
        assert_eq!(report.spot_spend, 39_000.0);
        assert!(report.mean_cost <= 41_000.0 && report.mean_cost > 40_000.0, "{}", report.mean_cost);
        assert!(report.mean_utilization <= 700.0);
    }

    #[test]
    fn zero_residual_costs_only_spot() {
        let inst = lane_instance(10, 3, 300.0);
        // w = a: price 200, acceptance 1, q = 0 -> no contract-side cost.
        let report = evaluate_policy(&inst, &policies_at(&inst, 300.0), 0, 0).unwrap();
        assert_eq!(report.alternate_spend, 0.0);
        assert_eq!(report.stderr, 0.0);
        assert_eq!(report.mean_cost, report.spot_spend);
    }

    #[test]
    fn heterogeneous_lane_matches_monte_carlo() {
        let mut inst = lane_instance(6, 2, 300.0);
        inst.alternate_costs = vec![310.0, 250.0, 300.0, 280.0, 260.0, 300.0];
        let policies = policies_at(&inst, 150.0);
        let exact = evaluate_policy(&inst, &policies, 0, 0).unwrap();
        assert!(exact.exact);
        // Brute force over all 2^6 outcomes.
        let q: Vec<f64> = policies.iter().map(|p| p.non_procurement).collect();
        let mut expect = 0.0;
        for mask in 0..64usize {
            let x: Vec<u64> = (0..6).map(|i| (mask >> i & 1) as u64).collect();
            let mut prob = 1.0;
            for i in 0..6 {
                prob *= if x[i] == 1 { q[i] } else { 1.0 - q[i] };
            }
            expect += prob * inst.family.assignment_cost(&x, 2, &inst.alternate_costs);
        }
        assert!(
            (exact.alternate_spend - expect).abs() < 1e-9,
            "exact {} enumerated {expect}",
            exact.alternate_spend
        );
    }

    #[test]
    fn savings_arithmetic() {
        let mk = |mean| EvalReport {
            mean_cost: mean,
            stderr: 0.0,
            spot_spend: 0.0,
            alternate_spend: 0.0,
            mean_utilization: 0.0,
            n_samples: 0,
            seed: 0,
            exact: true,
        };
        let (pct, se) = relative_savings(&mk(60_000.0), &mk(40_734.0)).unwrap();
        assert!((pct - 32.11).abs() < 0.01, "pct {pct}");
        assert_eq!(se, 0.0);
        let (zero, _) = relative_savings(&mk(5.0), &mk(5.0)).unwrap();
        assert_eq!(zero, 0.0);
        assert!(relative_savings(&mk(0.0), &mk(1.0)).is_err());
    }

    #[test]
    fn example1_fluid_utilization_is_tight() {
        let inst = lane_instance(1000, 700, 300.0);
        let q = vec![0.7; 1000];
        let report = utilization_check(&inst, &q, 0.005, 1e-6, 100, 0.05, 0).unwrap();
        assert!(!report.vacuous);
        assert!(report.fluid_ok);
        assert!((report.fluid_value - 700.0).abs() < 1e-9);
        assert!(report.frequency_ok, "frequency {}", report.frequency);
    }

    #[test]
    fn huge_epsilon_is_vacuous() {
        let inst = lane_instance(10, 3, 300.0);
        let report = utilization_check(&inst, &vec![0.3; 10], 0.005, 1e6, 50, 0.05, 0).unwrap();
        assert!(report.vacuous);
        assert!(report.fluid_ok);
    }

    #[test]
    fn grid_opt_canonical_two_loads() {
        // Symmetric prices minimize at (140, 140) with value 220, but the
        // global grid optimum is asymmetric: price one load out of the spot
        // market entirely and let the single contract absorb it.
        let inst = lane_instance(2, 1, 300.0);
        let grid: Vec<f64> = (0..=10).map(|i| 100.0 + 10.0 * i as f64).collect();
        let result = brute_force_opt(&inst, &grid).unwrap();
        assert!((result.opt_cost - 200.0).abs() < 1e-9, "opt {}", result.opt_cost);
        assert_eq!(result.prices, vec![100.0, 200.0]);
        // The symmetric restriction reproduces the closed-form minimum.
        let symmetric = |p: f64| {
            let f = (p - 100.0) / 100.0;
            2.0 * p * f + 300.0 * (1.0 - f) * (1.0 - f)
        };
        let best_sym = grid
            .iter()
            .map(|&p| symmetric(p))
            .fold(f64::INFINITY, f64::min);
        assert!((best_sym - 220.0).abs() < 1e-9, "symmetric {best_sym}");
        assert!((symmetric(140.0) - 220.0).abs() < 1e-9);
    }

    #[test]
    fn grid_opt_single_covered_load_is_free() {
        let inst = lane_instance(1, 1, 300.0);
        let grid: Vec<f64> = (0..=10).map(|i| 100.0 + 10.0 * i as f64).collect();
        let result = brute_force_opt(&inst, &grid).unwrap();
        assert_eq!(result.opt_cost, 0.0);
        assert_eq!(result.prices, vec![100.0]);
    }

    #[test]
    fn grid_opt_no_contracts_reduces_to_alpha() {
        let inst = lane_instance(2, 0, 300.0);
        let grid: Vec<f64> = (0..=10).map(|i| 100.0 + 10.0 * i as f64).collect();
        let result = brute_force_opt(&inst, &grid).unwrap();
        assert!((result.opt_cost - 400.0).abs() < 1e-9, "opt {}", result.opt_cost);
        assert_eq!(result.prices, vec![200.0, 200.0]);
    }
}
