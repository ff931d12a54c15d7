//! The shared problem description: loads, alternate costs, contract capacity,
//! contract family, and per-load pricing oracles.

use crate::contracts::{sample_rounding, Family};
use crate::error::{Error, Result};
use crate::pricing::Oracle;

/// Fractional demand/coverage per load.
pub type DemandVector = Vec<f64>;

/// Integer copies of each load requiring coverage.
pub type Realization = Vec<u64>;

/// Non-procurement probabilities handed from the spot side to the contract side.
pub type ResidualProfile = Vec<f64>;

/// Dual iterate driving both sides of the price coordination.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowPrices {
    /// Per-load penalty, one entry per load.
    pub lambda: Vec<f64>,
    /// Per-contract price.
    pub mu: f64,
}

impl ShadowPrices {
    pub fn zero(num_loads: usize) -> Self {
        Self { lambda: vec![0.0; num_loads], mu: 0.0 }
    }
}

/// Full problem instance. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Instance {
    pub alternate_costs: Vec<f64>,
    pub capacity: u64,
    pub family: Family,
    pub oracles: Vec<Oracle>,
    /// Capacity-regime ratio used for validation and the utilization bound.
    pub nu: f64,
}

impl Instance {
    pub fn new(
        alternate_costs: Vec<f64>,
        capacity: u64,
        family: Family,
        oracles: Vec<Oracle>,
    ) -> Result<Self> {
        let l = alternate_costs.len();
        if l == 0 {
            return Err(Error::InvalidInput("instance must have at least one load".into()));
        }
        if family.num_loads() != l || oracles.len() != l {
            return Err(Error::InvalidInput(format!(
                "family covers {} loads and {} oracles given, expected {l}",
                family.num_loads(),
                oracles.len()
            )));
        }
        // capacity 0 is allowed (degenerate all-spot case); the capacity
        // regime check in validate_instance flags it as a warning.
        Ok(Self { alternate_costs, capacity, family, oracles, nu: 0.25 })
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&nu) || nu == 0.0 {
            return Err(Error::InvalidInput(format!("nu must lie in (0, 1/2), got {nu}")));
        }
        self.nu = nu;
        Ok(self)
    }

    pub fn num_loads(&self) -> usize {
        self.alternate_costs.len()
    }

    /// Largest total alternate cost of any single feasible set.
    pub fn a_max(&self) -> f64 {
        self.family.max_weight_feasible_set(&self.alternate_costs).1
    }
}

/// Outcome of [`validate_instance`]: hard violations and regime warnings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Report-only structural checks: positive alternate costs, every load
/// coverable by some feasible set, and the capacity-regime inequalities
/// `B > nu * L` and `u * B < (1 - nu) * L` (regime failures are warnings so
/// boundary instances still run).
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let l = inst.num_loads();
    for (idx, &a) in inst.alternate_costs.iter().enumerate() {
        if !(a > 0.0) || !a.is_finite() {
            report.violations.push(format!("alternate cost of load {idx} must be positive, got {a}"));
        }
    }
    let mut indicator = vec![0.0; l];
    for load in 0..l {
        indicator[load] = 1.0;
        let (_, w) = inst.family.max_weight_feasible_set(&indicator);
        if w < 0.5 {
            report.violations.push(format!("load {load} is not covered by any feasible set"));
        }
        indicator[load] = 0.0;
    }
    let b = inst.capacity as f64;
    let lf = l as f64;
    let u = inst.family.max_set_size() as f64;
    if !(b > inst.nu * lf) {
        report.warnings.push(format!(
            "capacity regime: B = {b} is not greater than nu * L = {}",
            inst.nu * lf
        ));
    }
    if !(u * b < (1.0 - inst.nu) * lf) {
        report.warnings.push(format!(
            "capacity regime: u * B = {} is not below (1 - nu) * L = {}",
            u * b,
            (1.0 - inst.nu) * lf
        ));
    }
    report
}

/// Independent coordinatewise rounding `X_l = floor(d_l) + Bernoulli(frac)`.
/// Deterministic in `(seed, sample_index)`; `E[X] = d`.
pub fn sample_realization(d: &[f64], seed: u64, sample_index: u64) -> Result<Realization> {
    if d.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::InvalidInput("demand vector must be nonnegative and finite".into()));
    }
    Ok(sample_rounding(d, seed, sample_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::LaneLevelFamily;
    use crate::pricing::UniformStaticOracle;

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
    fn example1_sits_on_the_regime_boundary() {
        let inst = lane_instance(1000, 700, 300.0).with_nu(0.3).unwrap();
        let report = validate_instance(&inst);
        assert!(report.is_valid());
        // 700 > 300 holds, but 1 * 700 < 0.7 * 1000 fails at the boundary.
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("u * B"));
    }

    #[test]
    fn comfortable_regime_is_clean() {
        let inst = lane_instance(10, 3, 1.0);
        let report = validate_instance(&inst);
        assert!(report.is_valid());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn zero_alternate_cost_flagged() {
        let mut inst = lane_instance(3, 1, 1.0);
        inst.alternate_costs[1] = 0.0;
        let report = validate_instance(&inst);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].contains("load 1"));
    }

    #[test]
    fn integer_demand_samples_exactly() {
        assert_eq!(sample_realization(&[2.0, 3.0], 0, 0).unwrap(), vec![2, 3]);
    }

    #[test]
    fn half_demand_matches_bernoulli_law() {
        let n = 100_000;
        let mut ones = 0u64;
        for s in 0..n {
            ones += sample_realization(&[0.5], 42, s).unwrap()[0];
        }
        let mean = ones as f64 / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn binomial_total_mean() {
        let d = vec![0.7; 1000];
        let mut total = 0u64;
        let draws = 10_000;
        for s in 0..draws {
            total += sample_realization(&d, 7, s).unwrap().iter().sum::<u64>();
        }
        let mean = total as f64 / draws as f64;
        assert!((mean - 700.0).abs() < 1.5, "mean {mean}");
    }

    #[test]
    fn coordinates_are_uncorrelated() {
        let d = vec![0.5, 0.5];
        let draws = 20_000;
        let (mut s0, mut s1, mut s01) = (0f64, 0f64, 0f64);
        for s in 0..draws {
            let x = sample_realization(&d, 9, s).unwrap();
            s0 += x[0] as f64;
            s1 += x[1] as f64;
            s01 += (x[0] * x[1]) as f64;
        }
        let n = draws as f64;
        let cov = s01 / n - (s0 / n) * (s1 / n);
        // SE of the covariance estimate is ~0.25/sqrt(n).
        assert!(cov.abs() < 3.0 * 0.25 / n.sqrt(), "cov {cov}");
    }

    #[test]
    fn a_max_lane_is_max_cost() {
        let inst = lane_instance(5, 2, 300.0);
        assert_eq!(inst.a_max(), 300.0);
    }
}
