//! The Load Bifurcation baseline: price each load's spot side against the
//! alternate cost, then commit the most expensive coverable loads to
//! contracts ex ante.

use crate::error::Result;
use crate::instance::Instance;
use crate::pricing::PolicySummary;

#[derive(Debug, Clone)]
pub struct LbaResult {
    /// Per-load expected spot-side cost `alpha_l` when priced against the
    /// terminal cost `a_l`.
    pub alpha: Vec<f64>,
    /// Loads committed to contracts.
    pub contract_set: Vec<usize>,
    /// The feasible sets realizing the commitment (at most B of them).
    pub contracts: Vec<Vec<usize>>,
    /// Spot policies at `w = a_l`, one per load; only loads outside
    /// `contract_set` actually go to spot.
    pub spot_policies: Vec<PolicySummary>,
    /// `sum of alpha_l over loads not in contract_set` — exact, since spot
    /// outcomes do not interact with contracts under this baseline.
    pub expected_cost: f64,
}

/// Computes `alpha_l = r_l(a_l)` per load, then solves the ex-ante selection
/// problem exactly: cover the subset of loads maximizing the committed
/// `alpha` mass with at most `B` feasible sets. This is the capped
/// assignment problem at demand one-per-load with weights `alpha`.
pub fn run_lba(inst: &Instance) -> Result<LbaResult> {
    let l = inst.num_loads();
    let mut alpha = Vec::with_capacity(l);
    let mut spot_policies = Vec::with_capacity(l);
    for (load, oracle) in inst.oracles.iter().enumerate() {
        let summary = oracle.best_response(inst.alternate_costs[load])?;
        alpha.push(summary.total);
        spot_policies.push(summary);
    }
    let ones = vec![1u64; l];
    let solution = inst.family.assignment_solution(&ones, inst.capacity, &alpha);
    let contract_set: Vec<usize> = (0..l).filter(|&load| solution.alternate[load] == 0).collect();
    Ok(LbaResult {
        alpha,
        contract_set,
        contracts: solution.contracts,
        spot_policies,
        expected_cost: solution.cost,
    })
}
