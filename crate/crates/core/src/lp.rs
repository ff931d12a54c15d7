//! Linear programming: a dense two-phase simplex with Bland's rule, a small
//! branch-and-bound layer for the integer cross-checks, and the dual /
//! fractional-primal contract LPs with closed-form fast paths.

use crate::contracts::Family;
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::instance::{Instance, ShadowPrices};
use crate::rng::{neumaier_dot, neumaier_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// LP over nonnegative variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

/// Optimal vertex of the Lemma-4 dual LP.
#[derive(Debug, Clone, PartialEq)]
pub struct DualLpSolution {
    pub prices: ShadowPrices,
    /// Value of `lambda . q - mu * B`.
    pub objective: f64,
    pub vertex: bool,
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

/// Optimal basic solution by two-phase tableau simplex with Bland's
/// anti-cycling rule. Deterministic for a fixed row/column ordering.
pub fn solve_lp(lp: &LinearProgram) -> Result<(Vec<f64>, f64)> {
    let n = lp.objective.len();
    for (coeffs, _, rhs) in &lp.rows {
        if coeffs.len() != n {
            return Err(Error::InvalidInput("constraint row has wrong width".into()));
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite LP coefficient".into()));
        }
    }
    let mut objective: Vec<f64> = lp.objective.clone();
    if lp.sense == Sense::Minimize {
        for c in &mut objective {
            *c = -*c;
        }
    }
    let m = lp.rows.len();
    // Normalize rhs >= 0, then count slack and artificial columns.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = lp.rows.clone();
    for (coeffs, rel, rhs) in &mut rows {
        if *rhs < 0.0 {
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
            *rhs = -*rhs;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    let num_slack = rows.iter().filter(|(_, rel, _)| *rel != Relation::Eq).count();
    let num_art = rows.iter().filter(|(_, rel, _)| *rel != Relation::Le).count();
    let total = n + num_slack + num_art;
    let mut tableau: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut slack_at = n;
    let mut art_at = n + num_slack;
    for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        let mut row = vec![0.0; total + 1];
        row[..n].copy_from_slice(coeffs);
        row[total] = *rhs;
        match rel {
            Relation::Le => {
                row[slack_at] = 1.0;
                basis[i] = slack_at;
                slack_at += 1;
            }
            Relation::Ge => {
                row[slack_at] = -1.0;
                slack_at += 1;
                row[art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
            }
            Relation::Eq => {
                row[art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
            }
        }
        tableau.push(row);
    }
    if num_art > 0 {
        // Phase 1: maximize minus the artificial sum.
        let mut phase1 = vec![0.0; total];
        for c in phase1.iter_mut().skip(n + num_slack) {
            *c = -1.0;
        }
        simplex_core(&mut tableau, &mut basis, &phase1, total)?;
        let value: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= n + num_slack)
            .map(|(i, _)| tableau[i][total])
            .sum();
        if value > FEAS_TOL {
            return Err(Error::Infeasible);
        }
        // Drive remaining artificials out of the basis; a row where no
        // structural/slack column can pivot is redundant and dropped.
        let mut drop_rows = Vec::new();
        for i in 0..m {
            if basis[i] < n + num_slack {
                continue;
            }
            match (0..n + num_slack).find(|&j| tableau[i][j].abs() > PIVOT_TOL) {
                Some(j) => pivot(&mut tableau, &mut basis, i, j),
                None => drop_rows.push(i),
            }
        }
        for &i in drop_rows.iter().rev() {
            tableau.remove(i);
            basis.remove(i);
        }
        // Remove artificial columns.
        for row in &mut tableau {
            row.drain(n + num_slack..total);
        }
    }
    simplex_core(&mut tableau, &mut basis, &objective, n + num_slack)?;
    let mut x = vec![0.0; n];
    let width = tableau.first().map_or(n + num_slack, |r| r.len() - 1);
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tableau[i][width];
        }
    }
    let value = neumaier_dot(&lp.objective, &x);
    Ok((x, value))
}

/// Primal simplex on a tableau already in canonical feasible form.
/// `cost` covers the first `num_cols` columns; maximization.
fn simplex_core(
    tableau: &mut Vec<Vec<f64>>,
    basis: &mut [usize],
    cost: &[f64],
    num_cols: usize,
) -> Result<()> {
    let m = tableau.len();
    let width = tableau.first().map_or(0, |r| r.len() - 1);
    let cost_of = |j: usize| if j < cost.len() { cost[j] } else { 0.0 };
    let cap = 50_000 + 200 * (m + num_cols);
    for _ in 0..cap {
        // Bland: entering = lowest column index with positive reduced cost.
        let mut entering = None;
        'cols: for j in 0..num_cols {
            if basis.contains(&j) {
                continue;
            }
            let mut r = cost_of(j);
            for i in 0..m {
                r -= cost_of(basis[i]) * tableau[i][j];
            }
            if r > PIVOT_TOL {
                entering = Some(j);
                break 'cols;
            }
        }
        let Some(j) = entering else { return Ok(()) };
        // Ratio test; ties toward the lowest basis index (Bland).
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if tableau[i][j] > PIVOT_TOL {
                let ratio = tableau[i][width] / tableau[i][j];
                match leave {
                    Some((li, lr))
                        if ratio > lr + PIVOT_TOL
                            || (ratio > lr - PIVOT_TOL && basis[i] > basis[li]) => {}
                    _ => leave = Some((i, ratio)),
                }
            }
        }
        let Some((i, _)) = leave else { return Err(Error::Unbounded) };
        pivot(tableau, basis, i, j);
    }
    Err(Error::IterationCap("simplex pivot cap".into()))
}

fn pivot(tableau: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let width = tableau[row].len();
    let p = tableau[row][col];
    for v in tableau[row].iter_mut() {
        *v /= p;
    }
    for i in 0..tableau.len() {
        if i == row {
            continue;
        }
        let factor = tableau[i][col];
        if factor == 0.0 {
            continue;
        }
        for j in 0..width {
            tableau[i][j] -= factor * tableau[row][j];
        }
        tableau[i][col] = 0.0;
    }
    basis[row] = col;
}

const INT_TOL: f64 = 1e-6;

/// Branch-and-bound over [`solve_lp`] relaxations. `integer[j]` marks the
/// variables required to be integral. Best-first on the relaxation bound,
/// branching on the most fractional variable.
pub fn solve_milp(lp: &LinearProgram, integer: &[bool], node_cap: usize) -> Result<(Vec<f64>, f64)> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    assert_eq!(integer.len(), lp.objective.len());
    let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    // Nodes carry the extra bound rows added by branching.
    let solve_node = |extra: &[(usize, Relation, f64)]| -> Result<Option<(Vec<f64>, f64)>> {
        let mut node_lp = lp.clone();
        for &(var, rel, rhs) in extra {
            let mut row = vec![0.0; lp.objective.len()];
            row[var] = 1.0;
            node_lp.rows.push((row, rel, rhs));
        }
        match solve_lp(&node_lp) {
            Ok((x, v)) => Ok(Some((x, v))),
            Err(Error::Infeasible) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut heap: BinaryHeap<Reverse<(crate::flow::OrderedF64, usize)>> = BinaryHeap::new();
    let mut nodes: Vec<Vec<(usize, Relation, f64)>> = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    if let Some((x, v)) = solve_node(&[])? {
        nodes.push(Vec::new());
        heap.push(Reverse((crate::flow::OrderedF64(sign * v), 0)));
        let _ = x;
    }
    let mut explored = 0usize;
    while let Some(Reverse((bound, id))) = heap.pop() {
        explored += 1;
        if explored > node_cap {
            return Err(Error::IterationCap("branch-and-bound node cap".into()));
        }
        if let Some((_, bv)) = &best {
            if bound.0 >= sign * bv - 1e-9 {
                break; // best-first: every remaining node is dominated
            }
        }
        let extra = nodes[id].clone();
        let Some((x, v)) = solve_node(&extra)? else { continue };
        if let Some((_, bv)) = &best {
            if sign * v >= sign * bv - 1e-9 {
                continue;
            }
        }
        // Most fractional integral variable; ties toward the lowest index.
        let mut frac: Option<(usize, f64)> = None;
        for (j, &is_int) in integer.iter().enumerate() {
            if !is_int {
                continue;
            }
            let f = x[j] - x[j].floor();
            if f > INT_TOL && f < 1.0 - INT_TOL {
                let dist = (f - 0.5).abs();
                match frac {
                    Some((_, d)) if d <= dist => {}
                    _ => frac = Some((j, dist)),
                }
            }
        }
        match frac.map(|(j, _)| j) {
            None => {
                let rounded: Vec<f64> = x
                    .iter()
                    .zip(integer)
                    .map(|(&v, &is_int)| if is_int { v.round() } else { v })
                    .collect();
                best = Some((rounded, v));
            }
            Some(j) => {
                let down = x[j].floor();
                for (rel, rhs) in [(Relation::Le, down), (Relation::Ge, down + 1.0)] {
                    let mut child = extra.clone();
                    child.push((j, rel, rhs));
                    if let Some((_, cv)) = solve_node(&child)? {
                        let keep = match &best {
                            Some((_, bv)) => sign * cv < sign * bv - 1e-9,
                            None => true,
                        };
                        if keep {
                            nodes.push(child);
                            heap.push(Reverse((
                                crate::flow::OrderedF64(sign * cv),
                                nodes.len() - 1,
                            )));
                        }
                    }
                }
            }
        }
    }
    best.ok_or(Error::Infeasible)
}

/// Dual LP of the fractional contract-assignment problem at residual profile
/// `q`: maximize `lambda . q - mu * B` subject to `lambda <= a`,
/// `sum_{l in A} lambda_l <= mu` for every feasible set, `lambda, mu >= 0`.
///
/// Lane-level and uniform-cost bipartite instances use exact closed forms;
/// everything else goes through cutting planes on the simplex solver.
pub fn solve_dual_lp(inst: &Instance, q: &[f64]) -> Result<DualLpSolution> {
    check_profile(inst, q)?;
    match &inst.family {
        Family::Lane(_) => Ok(lane_dual(inst, q)),
        Family::Bipartite(f) => {
            let a0 = inst.alternate_costs[0];
            if inst.alternate_costs.iter().all(|&a| a == a0) {
                Ok(bipartite_uniform_dual(inst, f, q, a0))
            } else {
                solve_dual_lp_cutting(inst, q)
            }
        }
        Family::Regional(_) => solve_dual_lp_cutting(inst, q),
    }
}

fn check_profile(inst: &Instance, q: &[f64]) -> Result<()> {
    if q.len() != inst.num_loads() || q.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidInput("residual profile must lie in [0,1]^L".into()));
    }
    Ok(())
}

pub fn dual_objective(q: &[f64], lambda: &[f64], mu: f64, b: u64) -> f64 {
    neumaier_dot(lambda, q) - mu * b as f64
}

/// Lane-level closed form. With only singleton sets the constraints decouple
/// into `lambda_l <= min(a_l, mu)`, so the optimum over `lambda` is attained
/// at the cap and the problem reduces to maximizing the concave piecewise
/// linear `f(mu) = sum_l q_l min(a_l, mu) - B mu` over breakpoints
/// `{0} U {a_l}`. Ties resolve to the smallest maximizing breakpoint.
fn lane_dual(inst: &Instance, q: &[f64]) -> DualLpSolution {
    let b = inst.capacity;
    let mut candidates: Vec<f64> = inst.alternate_costs.clone();
    candidates.push(0.0);
    candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());
    candidates.dedup();
    let mut best_mu = 0.0;
    let mut best_val = f64::NEG_INFINITY;
    for &mu in &candidates {
        let val = neumaier_sum(
            inst.alternate_costs.iter().zip(q).map(|(&a, &qi)| qi * a.min(mu)),
        ) - mu * b as f64;
        if val > best_val {
            best_val = val;
            best_mu = mu;
        }
    }
    let lambda: Vec<f64> = inst.alternate_costs.iter().map(|&a| a.min(best_mu)).collect();
    DualLpSolution {
        prices: ShadowPrices { lambda, mu: best_mu },
        objective: best_val,
        vertex: true,
    }
}

/// Uniform-cost bipartite closed form. Scaling `lambda = a u`, `mu = a m`
/// turns the constraint set into `u <= 1`, `u <= m`, `u_l + u_r <= m`. The
/// inner maximum over `u` is linear in `m` on [0,1] (worth `m W`, with `W`
/// the max-weight independent set under weights `q` — integral because the
/// conflict graph is bipartite) and on [1,2] (interpolating to `sum q` at
/// `m = 2`), and flat beyond 2, so `mu in {0, a, 2a}` suffices.
fn bipartite_uniform_dual(
    inst: &Instance,
    f: &crate::contracts::BipartiteFamily,
    q: &[f64],
    a: f64,
) -> DualLpSolution {
    let b = inst.capacity;
    let (set, _) = bipartite_mwis(f, q);
    let mut best: Option<DualLpSolution> = None;
    for scale in [0u8, 1, 2] {
        let (mu, lambda): (f64, Vec<f64>) = match scale {
            0 => (0.0, vec![0.0; f.num_loads]),
            1 => (
                a,
                (0..f.num_loads).map(|v| if set[v] { a } else { 0.0 }).collect(),
            ),
            _ => (2.0 * a, vec![a; f.num_loads]),
        };
        let val = dual_objective(q, &lambda, mu, b);
        let better = match &best {
            Some(s) => val > s.objective + 1e-12,
            None => true,
        };
        if better {
            best = Some(DualLpSolution {
                prices: ShadowPrices { lambda, mu },
                objective: val,
                vertex: true,
            });
        }
    }
    best.unwrap()
}

/// Max-weight independent set in the bipartite conflict graph via min vertex
/// cover (max-flow / min-cut). Returns the indicator and the weight.
fn bipartite_mwis(f: &crate::contracts::BipartiteFamily, w: &[f64]) -> (Vec<bool>, f64) {
    let n = f.num_loads;
    let s = n;
    let t = n + 1;
    let mut net = FlowNetwork::new(n + 2);
    for &l in &f.left {
        net.add_arc(s, l, w[l].max(0.0), 0.0);
    }
    for &r in &f.right {
        net.add_arc(r, t, w[r].max(0.0), 0.0);
    }
    for &(l, r) in &f.edges {
        net.add_arc(l, r, f64::INFINITY, 0.0);
    }
    net.max_flow(s, t);
    let reach = net.residual_reachable(s);
    let mut set = vec![false; n];
    for &l in &f.left {
        set[l] = reach[l] && w[l] > 0.0;
    }
    for &r in &f.right {
        set[r] = !reach[r] && w[r] > 0.0;
    }
    let weight = (0..n).filter(|&v| set[v]).map(|v| w[v]).sum();
    (set, weight)
}

/// General dual solver: start from the box and singleton constraints, then
/// alternate simplex solves with the family separation oracle until no
/// feasible set is violated.
pub fn solve_dual_lp_cutting(inst: &Instance, q: &[f64]) -> Result<DualLpSolution> {
    check_profile(inst, q)?;
    let l = inst.num_loads();
    let b = inst.capacity as f64;
    // Variables: lambda_0..lambda_{L-1}, mu.
    let mut objective: Vec<f64> = q.to_vec();
    objective.push(-b);
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for load in 0..l {
        let mut row = vec![0.0; l + 1];
        row[load] = 1.0;
        rows.push((row, Relation::Le, inst.alternate_costs[load]));
        let mut row = vec![0.0; l + 1];
        row[load] = 1.0;
        row[l] = -1.0;
        rows.push((row, Relation::Le, 0.0));
    }
    let cap = 10 * l.max(1);
    for _ in 0..=cap {
        let lp = LinearProgram { sense: Sense::Maximize, objective: objective.clone(), rows: rows.clone() };
        let (x, _) = solve_lp(&lp)?;
        let (lambda, mu) = (&x[..l], x[l]);
        match inst.family.separation_oracle(lambda, mu) {
            None => {
                // Project out simplex noise: the box [0, a] x [0, inf) is
                // part of the feasible region, so clamping stays feasible.
                let lambda: Vec<f64> = lambda
                    .iter()
                    .zip(&inst.alternate_costs)
                    .map(|(&v, &a)| v.clamp(0.0, a))
                    .collect();
                let mu = mu.max(0.0);
                let objective = dual_objective(q, &lambda, mu, inst.capacity);
                return Ok(DualLpSolution {
                    prices: ShadowPrices { lambda, mu },
                    objective,
                    vertex: true,
                });
            }
            Some((set, _)) => {
                let mut row = vec![0.0; l + 1];
                for &member in &set {
                    row[member] = 1.0;
                }
                row[l] = -1.0;
                rows.push((row, Relation::Le, 0.0));
            }
        }
    }
    Err(Error::IterationCap(format!("cutting-plane rounds exceeded {cap}")))
}

/// Fractional primal: minimize `a . z` subject to
/// `z_l + sum_{A owns l} x_A >= q_l` and `sum_A x_A <= B` with `z, x >= 0`,
/// over the enumerated inclusion-maximal feasible sets.
/// Returns `(z, x, objective)`; by strong duality the objective matches
/// [`solve_dual_lp`].
pub fn solve_fractional_primal(inst: &Instance, q: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    check_profile(inst, q)?;
    let sets = inst.family.maximal_sets(200_000)?;
    let l = inst.num_loads();
    let n = l + sets.len();
    let mut objective = vec![0.0; n];
    objective[..l].copy_from_slice(&inst.alternate_costs);
    let mut rows = Vec::new();
    for load in 0..l {
        let mut row = vec![0.0; n];
        row[load] = 1.0;
        for (k, set) in sets.iter().enumerate() {
            if set.contains(&load) {
                row[l + k] = 1.0;
            }
        }
        rows.push((row, Relation::Ge, q[load]));
    }
    let mut row = vec![0.0; n];
    for v in row.iter_mut().skip(l) {
        *v = 1.0;
    }
    rows.push((row, Relation::Le, inst.capacity as f64));
    let lp = LinearProgram { sense: Sense::Minimize, objective, rows };
    let (x, obj) = solve_lp(&lp)?;
    Ok((x[..l].to_vec(), x[l..].to_vec(), obj))
}

/// Exact minimum contract count covering `x`, via the generic integer
/// program over enumerated maximal sets. Cross-check for
/// [`Family::pack_count`].
pub fn generic_pack_count(family: &Family, x: &[u64]) -> Result<u64> {
    let sets = family.maximal_sets(200_000)?;
    let n = sets.len();
    let objective = vec![1.0; n];
    let mut rows = Vec::new();
    for load in 0..family.num_loads() {
        let row: Vec<f64> = sets
            .iter()
            .map(|set| if set.contains(&load) { 1.0 } else { 0.0 })
            .collect();
        rows.push((row, Relation::Ge, x[load] as f64));
    }
    let lp = LinearProgram { sense: Sense::Minimize, objective, rows };
    let (_, v) = solve_milp(&lp, &vec![true; n], 1_000_000)?;
    Ok(v.round() as u64)
}

/// Exact capped assignment cost via the generic integer program.
/// Cross-check for [`Family::assignment_cost`].
pub fn generic_assignment_cost(family: &Family, x: &[u64], capacity: u64, a: &[f64]) -> Result<f64> {
    let sets = family.maximal_sets(200_000)?;
    let l = family.num_loads();
    let n = l + sets.len();
    let mut objective = vec![0.0; n];
    objective[..l].copy_from_slice(a);
    let mut rows = Vec::new();
    for load in 0..l {
        let mut row = vec![0.0; n];
        row[load] = 1.0;
        for (k, set) in sets.iter().enumerate() {
            if set.contains(&load) {
                row[l + k] = 1.0;
            }
        }
        rows.push((row, Relation::Ge, x[load] as f64));
    }
    let mut cap_row = vec![0.0; n];
    for v in cap_row.iter_mut().skip(l) {
        *v = 1.0;
    }
    rows.push((cap_row, Relation::Le, capacity as f64));
    let lp = LinearProgram { sense: Sense::Minimize, objective, rows };
    let mut integer = vec![false; n];
    for flag in integer.iter_mut().skip(l) {
        *flag = true;
    }
    let (_, v) = solve_milp(&lp, &integer, 1_000_000)?;
    Ok(v)
}
