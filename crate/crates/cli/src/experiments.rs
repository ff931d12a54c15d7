//! Experiment drivers shared by the subcommands and the acceptance tests:
//! running both algorithms on one instance, the axis sweep, the
//! Erdős–Rényi bipartite sweep, and the built-in regional generator.

use anyhow::Context;
use loadcoord::contracts::{gen_er_bipartite, sample_rounding, Family, RegionalFamily};
use loadcoord::dfw::{run_dfw, DfwConfig, DfwResult};
use loadcoord::eval::{evaluate_policy, relative_savings, EvalReport};
use loadcoord::instance::Instance;
use loadcoord::lba::{run_lba, LbaResult};
use loadcoord::pricing::{Oracle, UniformStaticOracle};
use loadcoord::rng::{mix, neumaier_sum};

use crate::output::ResultRow;

pub fn example1_instance() -> Instance {
    Instance::new(
        vec![300.0; 1000],
        700,
        Family::Lane(loadcoord::contracts::LaneLevelFamily { num_loads: 1000 }),
        vec![Oracle::Uniform(UniformStaticOracle::new(100.0, 200.0).unwrap()); 1000],
    )
    .expect("the built-in instance is valid")
}

pub struct RunParams {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub samples: usize,
    pub seed: u64,
    pub trace: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        Self { epsilon: 1e-6, max_iterations: 100_000_000, samples: 400, seed: 0, trace: false }
    }
}

pub struct RunOutcome {
    pub dfw: DfwResult,
    pub dfw_report: EvalReport,
    pub lba: LbaResult,
    pub lba_report: EvalReport,
    pub savings_pct: f64,
    pub savings_se: f64,
}

/// Runs shadow-price tatonnement and the bifurcation baseline on one
/// instance and evaluates both (DFW by the library evaluator, the baseline
/// exactly by construction).
pub fn run_algorithms(inst: &Instance, params: &RunParams) -> anyhow::Result<RunOutcome> {
    let cfg = DfwConfig {
        epsilon: params.epsilon,
        max_iterations: params.max_iterations,
        trace: params.trace,
    };
    let dfw = run_dfw(inst, &cfg).context("dual Frank-Wolfe failed")?;
    let dfw_report = evaluate_policy(inst, &dfw.policies, params.samples, params.seed)
        .context("evaluating the DFW policy")?;
    let lba = run_lba(inst).context("bifurcation baseline failed")?;
    let lba_report = lba_eval_report(&lba, params.seed);
    let (savings_pct, savings_se) = relative_savings(&lba_report, &dfw_report)?;
    Ok(RunOutcome { dfw, dfw_report, lba, lba_report, savings_pct, savings_se })
}

/// The baseline's cost decomposes load by load, so its report is exact.
pub fn lba_eval_report(lba: &LbaResult, seed: u64) -> EvalReport {
    let committed: std::collections::HashSet<usize> = lba.contract_set.iter().copied().collect();
    let spot_spend = neumaier_sum(
        lba.spot_policies
            .iter()
            .enumerate()
            .filter(|(l, _)| !committed.contains(l))
            .map(|(_, p)| p.spot_cost),
    );
    EvalReport {
        mean_cost: lba.expected_cost,
        stderr: 0.0,
        spot_spend,
        alternate_spend: lba.expected_cost - spot_spend,
        mean_utilization: lba.contracts.len() as f64,
        n_samples: 0,
        seed,
        exact: true,
    }
}

pub fn outcome_rows(
    experiment: &str,
    sweep_value: Option<f64>,
    outcome: &RunOutcome,
    seed: u64,
) -> Vec<ResultRow> {
    vec![
        ResultRow {
            experiment: experiment.to_string(),
            sweep_value,
            algorithm: "lba",
            mean_cost: outcome.lba_report.mean_cost,
            stderr: outcome.lba_report.stderr,
            iterations: None,
            final_gap: None,
            utilization: outcome.lba_report.mean_utilization,
            savings_pct: None,
            savings_se: None,
            seed,
        },
        ResultRow {
            experiment: experiment.to_string(),
            sweep_value,
            algorithm: "dfw",
            mean_cost: outcome.dfw_report.mean_cost,
            stderr: outcome.dfw_report.stderr,
            iterations: Some(outcome.dfw.iterations),
            final_gap: Some(outcome.dfw.final_gap),
            utilization: outcome.dfw_report.mean_utilization,
            savings_pct: Some(outcome.savings_pct),
            savings_se: Some(outcome.savings_se),
            seed,
        },
    ]
}

// --- Erdős–Rényi bipartite sweep -------------------------------------------

pub struct ErSweepParams {
    pub points: Vec<f64>,
    pub draws: usize,
    pub samples: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub delta: f64,
}

impl Default for ErSweepParams {
    fn default() -> Self {
        Self {
            points: vec![0.0, 0.02, 0.10, 0.20, 0.30],
            draws: 1000,
            samples: 200,
            epsilon: 10.0,
            seed: 0,
            delta: 0.05,
        }
    }
}

pub struct ErGraphStats {
    pub lba_cost: f64,
    /// Number of contracts the baseline commits (its utilization).
    pub lba_contracts: usize,
    pub dfw_mean: f64,
    pub dfw_se: f64,
    pub iterations: usize,
    pub final_gap: f64,
    pub converged: bool,
    pub utilization_mean: f64,
    /// Monte Carlo fluid packing of the residual profile.
    pub fluid_value: f64,
    pub fluid_se: f64,
    pub fluid_ok: bool,
    /// Fraction of samples whose capped utilization clears the
    /// concentration threshold.
    pub frequency: f64,
    pub frequency_ok: bool,
}

pub struct ErPoint {
    pub p: f64,
    pub lba_mean: f64,
    pub lba_se: f64,
    pub dfw_mean: f64,
    pub dfw_se: f64,
    pub savings_pct: f64,
    pub savings_se: f64,
    pub mean_iterations: f64,
    pub mean_gap: f64,
    pub mean_utilization: f64,
    pub graphs: Vec<ErGraphStats>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = neumaier_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = neumaier_sum(values.iter().map(|&v| (v - mean) * (v - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sweeps edge probability on 50x50 bipartite graphs with capacity 25,
/// alternate cost 300, and uniform [100, 200] spot books: `draws`
/// independent graphs per point, the baseline evaluated exactly per graph
/// and DFW by `samples` Monte Carlo realizations per graph. Utilization
/// diagnostics are collected from the same realizations.
pub fn er_sweep(params: &ErSweepParams) -> anyhow::Result<Vec<ErPoint>> {
    const N_SIDE: usize = 50;
    const L: usize = 2 * N_SIDE;
    const B: u64 = 25;
    let oracle = Oracle::Uniform(UniformStaticOracle::new(100.0, 200.0).unwrap());
    // Smoothness of the book response over the reachable price range
    // [0, 2 * a_max]; drives the fluid utilization bound.
    let grid: Vec<f64> = (0..=600).map(|i| i as f64).collect();
    let beta_hat = oracle.lipschitz_estimate(&grid)?;
    let mut out = Vec::with_capacity(params.points.len());
    for (point_idx, &p) in params.points.iter().enumerate() {
        let mut graphs = Vec::with_capacity(params.draws);
        for g in 0..params.draws {
            let graph_seed = mix(params.seed, ((point_idx as u64) << 32) | g as u64);
            let family =
                Family::Bipartite(gen_er_bipartite(N_SIDE, N_SIDE, p, graph_seed)?);
            let inst = Instance::new(
                vec![300.0; L],
                B,
                family,
                vec![oracle.clone(); L],
            )?;
            let cfg = DfwConfig::new(params.epsilon)?;
            let dfw = run_dfw(&inst, &cfg)?;
            let lba = run_lba(&inst)?;
            let mut stats = er_graph_stats(
                &inst,
                &dfw,
                lba.expected_cost,
                params.samples,
                mix(graph_seed, 1),
                beta_hat,
                params.epsilon,
                params.delta,
            );
            stats.lba_contracts = lba.contracts.len();
            graphs.push(stats);
        }
        let (lba_mean, lba_se) = mean_se(&graphs.iter().map(|s| s.lba_cost).collect::<Vec<_>>());
        let (dfw_mean, dfw_se) = mean_se(&graphs.iter().map(|s| s.dfw_mean).collect::<Vec<_>>());
        let savings_pct = 100.0 * (lba_mean - dfw_mean) / lba_mean;
        let savings_se = 100.0
            * ((dfw_se / lba_mean).powi(2)
                + (dfw_mean * lba_se / (lba_mean * lba_mean)).powi(2))
            .sqrt();
        let mean_iterations =
            graphs.iter().map(|s| s.iterations as f64).sum::<f64>() / graphs.len() as f64;
        let mean_gap = graphs.iter().map(|s| s.final_gap).sum::<f64>() / graphs.len() as f64;
        let mean_utilization =
            graphs.iter().map(|s| s.utilization_mean).sum::<f64>() / graphs.len() as f64;
        out.push(ErPoint {
            p,
            lba_mean,
            lba_se,
            dfw_mean,
            dfw_se,
            savings_pct,
            savings_se,
            mean_iterations,
            mean_gap,
            mean_utilization,
            graphs,
        });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn er_graph_stats(
    inst: &Instance,
    dfw: &DfwResult,
    lba_cost: f64,
    samples: usize,
    eval_seed: u64,
    beta_hat: f64,
    epsilon: f64,
    delta: f64,
) -> ErGraphStats {
    let b = inst.capacity as f64;
    let l = inst.num_loads() as f64;
    let spot_spend = neumaier_sum(dfw.policies.iter().map(|p| p.spot_cost));
    let fluid_bound = b - epsilon * beta_hat / inst.nu;
    let threshold = fluid_bound - (l * (1.0 / delta).ln() / 2.0).sqrt();
    let mut costs = Vec::with_capacity(samples);
    let mut packs = Vec::with_capacity(samples);
    let mut util_sum = 0.0;
    let mut hits = 0usize;
    for s in 0..samples {
        let x = sample_rounding(&dfw.residual, eval_seed, s as u64);
        costs.push(inst.family.assignment_cost(&x, inst.capacity, &inst.alternate_costs));
        let pack = inst.family.pack_count(&x) as f64;
        packs.push(pack);
        let util = pack.min(b);
        util_sum += util;
        if util >= threshold {
            hits += 1;
        }
    }
    let (contract_mean, contract_se) = mean_se(&costs);
    let (fluid_value, fluid_se) = mean_se(&packs);
    let fluid_ok = fluid_bound <= 0.0 || fluid_value >= fluid_bound - 3.0 * fluid_se;
    let frequency = hits as f64 / samples.max(1) as f64;
    ErGraphStats {
        lba_cost,
        lba_contracts: 0,
        dfw_mean: spot_spend + contract_mean,
        dfw_se: contract_se,
        iterations: dfw.iterations,
        final_gap: dfw.final_gap,
        converged: dfw.converged,
        utilization_mean: util_sum / samples.max(1) as f64,
        fluid_value,
        fluid_se,
        fluid_ok,
        frequency,
        frequency_ok: frequency >= 1.0 - delta,
    }
}

pub fn er_rows(experiment: &str, points: &[ErPoint], seed: u64) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for pt in points {
        rows.push(ResultRow {
            experiment: experiment.to_string(),
            sweep_value: Some(pt.p),
            algorithm: "lba",
            mean_cost: pt.lba_mean,
            stderr: pt.lba_se,
            iterations: None,
            final_gap: None,
            utilization: pt.graphs.iter().map(|s| s.lba_contracts as f64).sum::<f64>()
                / pt.graphs.len() as f64,
            savings_pct: None,
            savings_se: None,
            seed,
        });
        rows.push(ResultRow {
            experiment: experiment.to_string(),
            sweep_value: Some(pt.p),
            algorithm: "dfw",
            mean_cost: pt.dfw_mean,
            stderr: pt.dfw_se,
            iterations: Some(pt.mean_iterations.round() as usize),
            final_gap: Some(pt.mean_gap),
            utilization: pt.mean_utilization,
            savings_pct: Some(pt.savings_pct),
            savings_se: Some(pt.savings_se),
            seed,
        });
    }
    rows
}

// --- built-in regional generator -------------------------------------------

/// Single-color regional instance with seeded random contiguous slot
/// intervals (or all-identical full-horizon intervals, which collapses to
/// lane-level behavior).
pub fn regional_instance(
    loads: usize,
    slots: usize,
    capacity: u64,
    identical: bool,
    seed: u64,
) -> anyhow::Result<Instance> {
    let mut counter = 0u64;
    let mut next = |modulus: usize| {
        counter += 1;
        (mix(seed, counter) % modulus as u64) as usize
    };
    let intervals: Vec<(usize, usize)> = (0..loads)
        .map(|_| {
            if identical {
                (1, slots)
            } else {
                let s = 1 + next(slots);
                let e = s + next(slots - s + 1);
                (s, e)
            }
        })
        .collect();
    let family = Family::Regional(RegionalFamily::new(slots, vec![0; loads], intervals)?);
    let inst = Instance::new(
        vec![300.0; loads],
        capacity,
        family,
        vec![Oracle::Uniform(UniformStaticOracle::new(100.0, 200.0).unwrap()); loads],
    )?;
    Ok(inst)
}
