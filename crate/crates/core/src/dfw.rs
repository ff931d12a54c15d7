//! The Dual Frank-Wolfe loop: alternate oracle best responses at the current
//! shadow prices with a dual LP solve, terminating on the Frank-Wolfe gap.

use crate::error::{Error, Result};
use crate::instance::{Instance, ShadowPrices};
use crate::lp::{dual_objective, solve_dual_lp};
use crate::pricing::PolicySummary;

#[derive(Debug, Clone, Copy)]
pub struct DfwConfig {
    /// Gap tolerance, in currency units.
    pub epsilon: f64,
    /// Safety cap on loop passes; hitting it flags the result non-converged.
    pub max_iterations: usize,
    /// Record full lambda vectors in the trace (summaries are always kept).
    pub trace: bool,
}

impl DfwConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { epsilon, max_iterations: 100_000_000, trace: false })
    }
}

/// One loop pass: gap and iterate summaries before the update.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub mu: f64,
    pub gap: f64,
    pub lambda_min: f64,
    pub lambda_mean: f64,
    pub lambda_max: f64,
    pub q_mean: f64,
    /// Full iterate, only when tracing is enabled.
    pub lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct DfwResult {
    pub prices: ShadowPrices,
    /// Loop passes executed (each one solves the dual LP once).
    pub iterations: usize,
    pub final_gap: f64,
    pub converged: bool,
    /// Oracle best responses at the final lambda.
    pub policies: Vec<PolicySummary>,
    /// Non-procurement profile q at the final lambda.
    pub residual: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// Algorithm: start at `(lambda, mu) = (0, 0)`; each pass queries
/// `q_l(lambda_l)` from every oracle, solves the dual LP at `q` for
/// `(lambda_hat, mu_hat)`, computes the gap
/// `g = (lambda_hat . q - mu_hat B) - (lambda . q - mu B)`, stops when
/// `g <= epsilon`, and otherwise mixes toward the LP vertex with step
/// `eta_t = 2 / (t + 2)` where `t` counts updates from zero (the first
/// update jumps fully to the first vertex).
pub fn run_dfw(inst: &Instance, cfg: &DfwConfig) -> Result<DfwResult> {
    let l = inst.num_loads();
    let b = inst.capacity;
    let mut prices = ShadowPrices::zero(l);
    let mut updates = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;
    let mut final_gap = f64::INFINITY;
    let mut trace = Vec::new();
    while iterations < cfg.max_iterations {
        iterations += 1;
        let q = residual_profile(inst, &prices.lambda)?;
        let sol = solve_dual_lp(inst, &q)?;
        let current = dual_objective(&q, &prices.lambda, prices.mu, b);
        let gap = sol.objective - current;
        if gap < -1e-9 {
            return Err(Error::Internal(format!("negative Frank-Wolfe gap {gap}")));
        }
        trace.push(summarize(iterations, &prices, &q, gap, cfg.trace));
        final_gap = gap;
        if gap <= cfg.epsilon {
            converged = true;
            break;
        }
        let eta = 2.0 / (updates as f64 + 2.0);
        for (cur, hat) in prices.lambda.iter_mut().zip(&sol.prices.lambda) {
            *cur = (1.0 - eta) * *cur + eta * hat;
        }
        prices.mu = (1.0 - eta) * prices.mu + eta * sol.prices.mu;
        updates += 1;
    }
    let mut policies = Vec::with_capacity(l);
    for (load, oracle) in inst.oracles.iter().enumerate() {
        policies.push(oracle.best_response(prices.lambda[load])?);
    }
    let residual = policies.iter().map(|p| p.non_procurement).collect();
    Ok(DfwResult { prices, iterations, final_gap, converged, policies, residual, trace })
}

/// `q_l(lambda_l)` for every load.
pub fn residual_profile(inst: &Instance, lambda: &[f64]) -> Result<Vec<f64>> {
    inst.oracles
        .iter()
        .zip(lambda)
        .map(|(oracle, &w)| Ok(oracle.best_response(w)?.non_procurement))
        .collect()
}

/// Frank-Wolfe gap of dual-feasible `prices` at profile `q`; always
/// nonnegative up to float noise.
pub fn fw_gap(inst: &Instance, prices: &ShadowPrices, q: &[f64]) -> Result<f64> {
    let sol = solve_dual_lp(inst, q)?;
    let gap = sol.objective - dual_objective(q, &prices.lambda, prices.mu, inst.capacity);
    if gap < -1e-9 {
        return Err(Error::Internal(format!("negative Frank-Wolfe gap {gap}")));
    }
    Ok(gap)
}

fn summarize(iteration: usize, prices: &ShadowPrices, q: &[f64], gap: f64, full: bool) -> TraceRow {
    let l = prices.lambda.len() as f64;
    TraceRow {
        iteration,
        mu: prices.mu,
        gap,
        lambda_min: prices.lambda.iter().cloned().fold(f64::INFINITY, f64::min),
        lambda_mean: prices.lambda.iter().sum::<f64>() / l,
        lambda_max: prices.lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        q_mean: q.iter().sum::<f64>() / l,
        lambda: full.then(|| prices.lambda.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::{Family, LaneLevelFamily};
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

    #[test]
    fn two_load_instance_finds_the_fluid_fixed_point() {
        // First-order condition: sum q(lambda) = B = 1 forces q = 0.5 per
        // load, so lambda = 200 and the posted price is 150.
        let inst = lane_instance(2, 1, 300.0);
        let result = run_dfw(&inst, &DfwConfig::new(1e-4).unwrap()).unwrap();
        assert!(result.converged);
        for &l in &result.prices.lambda {
            assert!((l - 200.0).abs() < 1e-6, "lambda {l}");
        }
        for p in &result.policies {
            assert!((p.non_procurement - 0.5).abs() < 1e-9);
            match p.policy {
                crate::pricing::PolicyDescriptor::Posted(price) => {
                    assert!((price - 150.0).abs() < 1e-9)
                }
                _ => panic!("expected a posted price"),
            }
        }
    }

    #[test]
    fn gap_at_origin_is_the_lp_optimum() {
        let inst = lane_instance(1000, 700, 300.0);
        let g = fw_gap(&inst, &ShadowPrices::zero(1000), &vec![1.0; 1000]).unwrap();
        assert!((g - 90_000.0).abs() < 1e-9);
    }

    #[test]
    fn gap_at_fixed_point_is_zero() {
        let inst = lane_instance(1000, 700, 300.0);
        let prices = ShadowPrices { lambda: vec![160.0; 1000], mu: 160.0 };
        let g = fw_gap(&inst, &prices, &vec![0.7; 1000]).unwrap();
        assert!(g.abs() <= 1e-9, "gap {g}");
    }

    #[test]
    fn iterates_stay_dual_feasible() {
        let inst = lane_instance(10, 4, 250.0);
        let mut cfg = DfwConfig::new(5.0).unwrap();
        cfg.trace = true;
        let result = run_dfw(&inst, &cfg).unwrap();
        assert!(result.converged);
        for row in &result.trace {
            let lambda = row.lambda.as_ref().unwrap();
            assert!(lambda.iter().all(|&l| (0.0..=250.0 + 1e-9).contains(&l)));
            assert!(inst.family.separation_oracle(lambda, row.mu).is_none());
            assert!(row.gap >= -1e-9);
        }
    }

    #[test]
    fn max_iterations_flags_non_convergence() {
        let inst = lane_instance(10, 4, 250.0);
        let mut cfg = DfwConfig::new(1e-12).unwrap();
        cfg.max_iterations = 3;
        let result = run_dfw(&inst, &cfg).unwrap();
        assert!(!result.converged);
        assert_eq!(result.iterations, 3);
    }
}
