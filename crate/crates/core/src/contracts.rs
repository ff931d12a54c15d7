//! Contract families: feasible load subsets, exact packing counts, the
//! fractional packing extension, and exact contract-assignment costs.
//!
//! Three concrete families are supported. Lane-level contracts cover one
//! load each. Bipartite round-trip contracts cover a single load or a
//! feasible out-and-back pair encoded as an edge of a bipartite graph.
//! Regional contracts cover same-color sets of loads whose active hourly
//! intervals are pairwise disjoint.

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::rng::{mix, substream};
use rand::Rng;

/// Family-agnostic view of the contract structure.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Lane(LaneLevelFamily),
    Bipartite(BipartiteFamily),
    Regional(RegionalFamily),
}

/// Lane-level volume commitments: every feasible set is a singleton.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneLevelFamily {
    pub num_loads: usize,
}

/// Round-trip contracts over a two-domicile network. Loads are partitioned
/// into outbound (`left`) and inbound (`right`) directions; an edge means the
/// pair can be executed by one contracted driver as a round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteFamily {
    pub num_loads: usize,
    /// Load indices in the outbound direction.
    pub left: Vec<usize>,
    /// Load indices in the inbound direction.
    pub right: Vec<usize>,
    /// Pairs `(l, r)` of load indices, `l` outbound and `r` inbound.
    pub edges: Vec<(usize, usize)>,
}

impl BipartiteFamily {
    pub fn new(left: Vec<usize>, right: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let num_loads = left.len() + right.len();
        let mut side = vec![0u8; num_loads];
        for &l in &left {
            if l >= num_loads || side[l] != 0 {
                return Err(Error::InvalidInput("left/right must partition 0..L".into()));
            }
            side[l] = 1;
        }
        for &r in &right {
            if r >= num_loads || side[r] != 0 {
                return Err(Error::InvalidInput("left/right must partition 0..L".into()));
            }
            side[r] = 2;
        }
        for &(l, r) in &edges {
            if l >= num_loads || r >= num_loads || side[l] != 1 || side[r] != 2 {
                return Err(Error::InvalidInput(format!("edge ({l}, {r}) does not join left to right")));
            }
        }
        Ok(Self { num_loads, left, right, edges })
    }
}

/// Regional fleet contracts on an hourly shift grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionalFamily {
    pub num_loads: usize,
    /// Number of hourly slots in the shift.
    pub num_slots: usize,
    /// Area color of each load, in `[0, num_colors)`.
    pub colors: Vec<usize>,
    /// Active interval of each load as inclusive 1-based slots `(start, end)`.
    /// Intervals are contiguous by construction.
    pub intervals: Vec<(usize, usize)>,
    pub num_colors: usize,
}

impl RegionalFamily {
    pub fn new(num_slots: usize, colors: Vec<usize>, intervals: Vec<(usize, usize)>) -> Result<Self> {
        if colors.len() != intervals.len() {
            return Err(Error::InvalidInput("colors and intervals must have equal length".into()));
        }
        if num_slots == 0 {
            return Err(Error::InvalidInput("num_slots must be positive".into()));
        }
        for &(s, e) in &intervals {
            if s < 1 || e > num_slots || s > e {
                return Err(Error::InvalidInput(format!(
                    "interval ({s}, {e}) must satisfy 1 <= start <= end <= {num_slots}"
                )));
            }
        }
        let num_colors = colors.iter().map(|&c| c + 1).max().unwrap_or(0);
        Ok(Self { num_loads: colors.len(), num_slots, colors, intervals, num_colors })
    }

    fn overlaps(&self, a: usize, b: usize) -> bool {
        let (s1, e1) = self.intervals[a];
        let (s2, e2) = self.intervals[b];
        s1 <= e2 && s2 <= e1
    }
}

/// Erdos-Renyi bipartite generator: left loads `0..n_left`, right loads
/// `n_left..n_left+n_right`, each of the `n_left * n_right` edges present
/// independently with probability `p`.
pub fn gen_er_bipartite(n_left: usize, n_right: usize, p: f64, seed: u64) -> Result<BipartiteFamily> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("edge probability must be in [0,1], got {p}")));
    }
    let mut rng = substream(seed, 0);
    let mut edges = Vec::new();
    for i in 0..n_left {
        for j in 0..n_right {
            if rng.gen::<f64>() < p {
                edges.push((i, n_left + j));
            }
        }
    }
    BipartiteFamily::new(
        (0..n_left).collect(),
        (n_left..n_left + n_right).collect(),
        edges,
    )
}

/// Fractional packing estimate: mean, standard error, and whether the value
/// is exact (closed form or full enumeration of fractional outcomes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub exact: bool,
}

/// Exact optimum of the capacity-capped assignment problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSolution {
    /// Feasible sets used, one entry per contract (multiplicities expanded).
    pub contracts: Vec<Vec<usize>>,
    /// Copies of each load routed to the alternate channel.
    pub alternate: Vec<u64>,
    /// Total alternate-channel cost.
    pub cost: f64,
}

impl Family {
    pub fn num_loads(&self) -> usize {
        match self {
            Family::Lane(f) => f.num_loads,
            Family::Bipartite(f) => f.num_loads,
            Family::Regional(f) => f.num_loads,
        }
    }

    /// Largest feasible-set cardinality `u`.
    pub fn max_set_size(&self) -> usize {
        match self {
            Family::Lane(_) => 1,
            Family::Bipartite(f) => {
                if f.edges.is_empty() {
                    1
                } else {
                    2
                }
            }
            Family::Regional(f) => {
                // Per color, the max number of pairwise-disjoint intervals.
                (0..f.num_colors)
                    .map(|k| {
                        let loads: Vec<usize> =
                            (0..f.num_loads).filter(|&l| f.colors[l] == k).collect();
                        max_disjoint_count(f, &loads)
                    })
                    .max()
                    .unwrap_or(1)
                    .max(1)
            }
        }
    }

    /// Exact minimum number of contracts covering the demand multiset `x`
    /// (the capacity cap is ignored).
    pub fn pack_count(&self, x: &[u64]) -> u64 {
        assert_eq!(x.len(), self.num_loads());
        match self {
            Family::Lane(_) => x.iter().sum(),
            Family::Bipartite(f) => {
                let total: u64 = x.iter().sum();
                total - bipartite_matching(f, x)
            }
            Family::Regional(f) => {
                let mut total = 0u64;
                for k in 0..f.num_colors {
                    let mut peak = 0u64;
                    for t in 1..=f.num_slots {
                        let mut overlap = 0u64;
                        for l in 0..f.num_loads {
                            let (s, e) = f.intervals[l];
                            if f.colors[l] == k && s <= t && t <= e {
                                overlap += x[l];
                            }
                        }
                        peak = peak.max(overlap);
                    }
                    total += peak;
                }
                total
            }
        }
    }

    /// Feasible set maximizing the total of nonnegative `weights`, with its
    /// weight. Ties resolved toward lower load indices.
    pub fn max_weight_feasible_set(&self, weights: &[f64]) -> (Vec<usize>, f64) {
        assert_eq!(weights.len(), self.num_loads());
        match self {
            Family::Lane(_) => best_singleton(weights),
            Family::Bipartite(f) => {
                let (mut set, mut w) = best_singleton(weights);
                for &(l, r) in &f.edges {
                    let s = weights[l] + weights[r];
                    if s > w + 1e-15 {
                        w = s;
                        set = vec![l, r];
                    }
                }
                (set, w)
            }
            Family::Regional(f) => {
                let mut best: (Vec<usize>, f64) = (Vec::new(), f64::NEG_INFINITY);
                for k in 0..f.num_colors {
                    let loads: Vec<usize> =
                        (0..f.num_loads).filter(|&l| f.colors[l] == k).collect();
                    let (set, w) = weighted_interval_schedule(f, &loads, weights);
                    if w > best.1 + 1e-15 {
                        best = (set, w);
                    }
                }
                if best.0.is_empty() {
                    best_singleton(weights)
                } else {
                    best
                }
            }
        }
    }

    /// Most violated dual constraint, if any: a feasible set whose shadow
    /// prices sum above `mu` by more than the relative tolerance.
    pub fn separation_oracle(&self, lambda: &[f64], mu: f64) -> Option<(Vec<usize>, f64)> {
        let (set, w) = self.max_weight_feasible_set(lambda);
        if w - mu > SEPARATION_TOL * mu.abs().max(1.0) {
            Some((set, w))
        } else {
            None
        }
    }

    /// Exact optimal cost of covering `x` with at most `capacity` contracts,
    /// sending leftovers to the alternate channel at unit costs `a`.
    pub fn assignment_cost(&self, x: &[u64], capacity: u64, a: &[f64]) -> f64 {
        match self {
            Family::Lane(_) => {
                let mut copies: Vec<f64> = Vec::new();
                for (l, &cnt) in x.iter().enumerate() {
                    for _ in 0..cnt {
                        copies.push(a[l]);
                    }
                }
                copies.sort_by(|p, q| q.partial_cmp(p).unwrap());
                copies.iter().skip(capacity as usize).sum()
            }
            Family::Bipartite(f) => {
                let total: f64 = x.iter().enumerate().map(|(l, &c)| a[l] * c as f64).sum();
                let (net, _, _, t) = bipartite_cover_network(f, x, capacity, a);
                let mut net = net;
                let (_, cost, _) = net.min_cost_flow(f.num_loads, t, capacity as f64, 0.0);
                total - (-cost)
            }
            Family::Regional(f) => {
                let total: f64 = x.iter().enumerate().map(|(l, &c)| a[l] * c as f64).sum();
                total - regional_cover_value(f, x, capacity, a).0
            }
        }
    }

    /// As [`assignment_cost`], additionally returning the contracts used and
    /// the per-load alternate copies.
    pub fn assignment_solution(&self, x: &[u64], capacity: u64, a: &[f64]) -> AssignmentSolution {
        match self {
            Family::Lane(_) => {
                let mut order: Vec<usize> = (0..x.len()).collect();
                // Cover the highest-alternate-cost copies first; ties toward
                // lower load index.
                order.sort_by(|&p, &q| a[q].partial_cmp(&a[p]).unwrap().then(p.cmp(&q)));
                let mut contracts = Vec::new();
                let mut alternate = x.to_vec();
                let mut remaining = capacity;
                for &l in &order {
                    let take = alternate[l].min(remaining);
                    for _ in 0..take {
                        contracts.push(vec![l]);
                    }
                    alternate[l] -= take;
                    remaining -= take;
                    if remaining == 0 {
                        break;
                    }
                }
                let cost = alternate.iter().enumerate().map(|(l, &c)| a[l] * c as f64).sum();
                AssignmentSolution { contracts, alternate, cost }
            }
            Family::Bipartite(f) => {
                let (mut net, edge_arcs, node_arcs, t) = bipartite_cover_network(f, x, capacity, a);
                let (_, cost, _) = net.min_cost_flow(f.num_loads, t, capacity as f64, 0.0);
                let total: f64 = x.iter().enumerate().map(|(l, &c)| a[l] * c as f64).sum();
                let mut covered = vec![0u64; f.num_loads];
                let mut contracts = Vec::new();
                for (idx, &(l, r)) in f.edges.iter().enumerate() {
                    let fl = net.flow(edge_arcs[idx]).round() as u64;
                    for _ in 0..fl {
                        contracts.push(vec![l, r]);
                    }
                    covered[l] += fl;
                    covered[r] += fl;
                }
                for &(l, arc) in &node_arcs {
                    let fl = net.flow(arc).round() as u64;
                    for _ in 0..fl {
                        contracts.push(vec![l]);
                    }
                    covered[l] += fl;
                }
                let alternate: Vec<u64> = x.iter().zip(&covered).map(|(&xi, &c)| xi - c).collect();
                AssignmentSolution { contracts, alternate, cost: total - (-cost) }
            }
            Family::Regional(f) => {
                let total: f64 = x.iter().enumerate().map(|(l, &c)| a[l] * c as f64).sum();
                let (value, kept) = regional_cover_value(f, x, capacity, a);
                let mut contracts = Vec::new();
                for k in 0..f.num_colors {
                    // Greedy track assignment of this color's kept copies.
                    let mut copies: Vec<usize> = Vec::new();
                    for l in 0..f.num_loads {
                        if f.colors[l] == k {
                            for _ in 0..kept[l] {
                                copies.push(l);
                            }
                        }
                    }
                    copies.sort_by_key(|&l| (f.intervals[l].0, f.intervals[l].1, l));
                    let mut tracks: Vec<(usize, Vec<usize>)> = Vec::new(); // (last end, loads)
                    for l in copies {
                        let (s, e) = f.intervals[l];
                        match tracks.iter_mut().find(|(end, _)| *end < s) {
                            Some((end, loads)) => {
                                *end = e;
                                loads.push(l);
                            }
                            None => tracks.push((e, vec![l])),
                        }
                    }
                    contracts.extend(tracks.into_iter().map(|(_, loads)| loads));
                }
                let alternate: Vec<u64> = x.iter().zip(&kept).map(|(&xi, &c)| xi - c).collect();
                AssignmentSolution { contracts, alternate, cost: total - value }
            }
        }
    }

    /// Multilinear packing extension `E[pack_count(floor(d) + Z)]` with
    /// `Z ~ Bernoulli(d - floor(d))` coordinatewise. Exact for lane-level,
    /// for integer `d`, and for few fractional coordinates (full outcome
    /// enumeration); Monte Carlo with a standard error otherwise.
    pub fn fluid_pack(&self, d: &[f64], n_samples: usize, seed: u64) -> Result<FluidEstimate> {
        if d.len() != self.num_loads() || d.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidInput("demand vector must be nonnegative and finite".into()));
        }
        if let Family::Lane(_) = self {
            return Ok(FluidEstimate { mean: d.iter().sum(), stderr: 0.0, exact: true });
        }
        let base: Vec<u64> = d.iter().map(|&v| v.floor() as u64).collect();
        let frac: Vec<(usize, f64)> = d
            .iter()
            .enumerate()
            .filter_map(|(l, &v)| {
                let f = v - v.floor();
                (f > 1e-12).then_some((l, f))
            })
            .collect();
        if frac.is_empty() {
            return Ok(FluidEstimate { mean: self.pack_count(&base) as f64, stderr: 0.0, exact: true });
        }
        if frac.len() <= ENUM_FRACTIONAL_LIMIT {
            let mut mean = 0.0;
            let mut x = base.clone();
            for mask in 0u64..(1u64 << frac.len()) {
                let mut prob = 1.0;
                for (bit, &(l, f)) in frac.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        x[l] = base[l] + 1;
                        prob *= f;
                    } else {
                        x[l] = base[l];
                        prob *= 1.0 - f;
                    }
                }
                mean += prob * self.pack_count(&x) as f64;
            }
            return Ok(FluidEstimate { mean, stderr: 0.0, exact: true });
        }
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for s in 0..n_samples {
            let x = sample_rounding(d, seed, s as u64);
            let v = self.pack_count(&x) as f64;
            sum += v;
            sumsq += v * v;
        }
        let n = n_samples as f64;
        let mean = sum / n;
        let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
        Ok(FluidEstimate { mean, stderr: (var / n).sqrt(), exact: false })
    }

    /// Substitutability slack `pack(X/2) - pack(X)/2`, where the halved
    /// profile is evaluated through the multilinear extension.
    pub fn substitutability_gap(&self, x: &[u64], n_samples: usize, seed: u64) -> Result<FluidEstimate> {
        let half: Vec<f64> = x.iter().map(|&v| v as f64 / 2.0).collect();
        let est = self.fluid_pack(&half, n_samples, seed)?;
        let gap = est.mean - self.pack_count(x) as f64 / 2.0;
        Ok(FluidEstimate { mean: gap, stderr: est.stderr, exact: est.exact })
    }

    /// Inclusion-maximal feasible sets, for the generic covering solvers.
    pub fn maximal_sets(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        match self {
            Family::Lane(f) => Ok((0..f.num_loads).map(|l| vec![l]).collect()),
            Family::Bipartite(f) => {
                let mut incident = vec![false; f.num_loads];
                let mut sets: Vec<Vec<usize>> =
                    f.edges.iter().map(|&(l, r)| vec![l, r]).collect();
                for &(l, r) in &f.edges {
                    incident[l] = true;
                    incident[r] = true;
                }
                sets.extend((0..f.num_loads).filter(|&l| !incident[l]).map(|l| vec![l]));
                if sets.len() > cap {
                    return Err(Error::Capability(format!("{} feasible sets exceed cap {cap}", sets.len())));
                }
                Ok(sets)
            }
            Family::Regional(f) => {
                let mut sets = Vec::new();
                for k in 0..f.num_colors {
                    let loads: Vec<usize> =
                        (0..f.num_loads).filter(|&l| f.colors[l] == k).collect();
                    if loads.len() > 20 {
                        return Err(Error::Capability(format!(
                            "{} same-color loads is too many to enumerate feasible sets",
                            loads.len()
                        )));
                    }
                    for mask in 0u32..(1u32 << loads.len()) {
                        let members: Vec<usize> = loads
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| mask >> i & 1 == 1)
                            .map(|(_, &l)| l)
                            .collect();
                        if members.is_empty() {
                            continue;
                        }
                        let disjoint = members.iter().enumerate().all(|(i, &l1)| {
                            members.iter().skip(i + 1).all(|&l2| !f.overlaps(l1, l2))
                        });
                        if !disjoint {
                            continue;
                        }
                        let maximal = loads
                            .iter()
                            .filter(|l| !members.contains(l))
                            .all(|&l| members.iter().any(|&m| f.overlaps(l, m)));
                        if maximal {
                            sets.push(members);
                            if sets.len() > cap {
                                return Err(Error::Capability(format!(
                                    "feasible-set enumeration exceeds cap {cap}"
                                )));
                            }
                        }
                    }
                }
                Ok(sets)
            }
        }
    }
}

/// Violation threshold shielding the cutting-plane loop from float noise.
pub const SEPARATION_TOL: f64 = 1e-7;

const ENUM_FRACTIONAL_LIMIT: usize = 12;

/// Rounds a fractional demand vector to integers: `floor(d)` plus a Bernoulli
/// on the fractional part, one independent substream per load.
pub fn sample_rounding(d: &[f64], seed: u64, sample_index: u64) -> Vec<u64> {
    let sample_seed = mix(seed, sample_index);
    d.iter()
        .enumerate()
        .map(|(l, &v)| {
            let base = v.floor();
            let f = v - base;
            let mut x = base as u64;
            if f > 0.0 && substream(sample_seed, l as u64).gen::<f64>() < f {
                x += 1;
            }
            x
        })
        .collect()
}

fn best_singleton(weights: &[f64]) -> (Vec<usize>, f64) {
    let mut best = 0usize;
    for l in 1..weights.len() {
        if weights[l] > weights[best] + 1e-15 {
            best = l;
        }
    }
    (vec![best], weights[best])
}

/// Max matching multiplicity in the bipartite graph with vertex capacities x.
fn bipartite_matching(f: &BipartiteFamily, x: &[u64]) -> u64 {
    if f.edges.is_empty() {
        return 0;
    }
    let n = f.num_loads;
    let s = n;
    let t = n + 1;
    let mut net = FlowNetwork::new(n + 2);
    for &l in &f.left {
        net.add_arc(s, l, x[l] as f64, 0.0);
    }
    for &r in &f.right {
        net.add_arc(r, t, x[r] as f64, 0.0);
    }
    for &(l, r) in &f.edges {
        net.add_arc(l, r, f64::INFINITY, 0.0);
    }
    net.max_flow(s, t).round() as u64
}

/// Cover-unit network for the capped bipartite assignment problem. A unit of
/// flow is one contract: source -> budget node -> (singleton or pair) -> sink,
/// with arc costs minus the alternate value covered.
/// Returns (network, edge arc ids, singleton arc ids tagged by load, sink).
fn bipartite_cover_network(
    f: &BipartiteFamily,
    x: &[u64],
    capacity: u64,
    a: &[f64],
) -> (FlowNetwork, Vec<usize>, Vec<(usize, usize)>, usize) {
    let n = f.num_loads;
    let s = n;
    let u = n + 1;
    let t = n + 2;
    let mut net = FlowNetwork::new(n + 3);
    net.add_arc(s, u, capacity as f64, 0.0);
    let mut node_arcs = Vec::new();
    for &l in &f.left {
        net.add_arc(u, l, x[l] as f64, -a[l]);
        // Unit terminates here: covers the singleton {l}.
        let arc = net.add_arc(l, t, x[l] as f64, 0.0);
        node_arcs.push((l, arc));
    }
    for &r in &f.right {
        // Unit covering the singleton {r}.
        let arc = net.add_arc(u, r, x[r] as f64, -a[r]);
        node_arcs.push((r, arc));
        net.add_arc(r, t, x[r] as f64, 0.0);
    }
    let mut edge_arcs = Vec::new();
    for &(l, r) in &f.edges {
        // Unit extends from l to the paired r: covers {l, r}.
        edge_arcs.push(net.add_arc(l, r, f64::INFINITY, -a[r]));
    }
    (net, edge_arcs, node_arcs, t)
}

/// Max alternate value coverable with at most `capacity` regional contracts,
/// together with the kept copies per load. Solved per color by min-cost flow
/// on the slot timeline (marginal gains are nonincreasing in the per-color
/// budget), then a budget-allocation DP across colors.
fn regional_cover_value(f: &RegionalFamily, x: &[u64], capacity: u64, a: &[f64]) -> (f64, Vec<u64>) {
    let cap = capacity as usize;
    // marginal[k] = per-contract gains for color k, nonincreasing.
    let mut marginals: Vec<Vec<f64>> = Vec::new();
    for k in 0..f.num_colors {
        let log = regional_color_flow(f, x, a, k, cap);
        let mut gains = Vec::new();
        for (amount, unit_cost) in log {
            let g = -unit_cost;
            let units = amount.round() as usize;
            for _ in 0..units {
                if gains.len() < cap {
                    gains.push(g.max(0.0));
                }
            }
        }
        marginals.push(gains);
    }
    // DP over colors: value[b] = best total with b contracts, tracking splits.
    let mut value = vec![0.0f64; cap + 1];
    let mut choice: Vec<Vec<usize>> = Vec::new();
    for gains in &marginals {
        let prefix: Vec<f64> = std::iter::once(0.0)
            .chain(gains.iter().scan(0.0, |acc, &g| {
                *acc += g;
                Some(*acc)
            }))
            .collect();
        let mut next = vec![f64::NEG_INFINITY; cap + 1];
        let mut take = vec![0usize; cap + 1];
        for b in 0..=cap {
            for used in 0..=b.min(prefix.len() - 1) {
                let v = value[b - used] + prefix[used];
                if v > next[b] + 1e-12 {
                    next[b] = v;
                    take[b] = used;
                }
            }
        }
        value = next;
        choice.push(take);
    }
    let best_b = (0..=cap).max_by(|&p, &q| value[p].partial_cmp(&value[q]).unwrap()).unwrap_or(0);
    // Walk back the per-color budgets, then re-run each color flow to read
    // off which interval copies were kept.
    let mut budgets = vec![0usize; f.num_colors];
    let mut b = best_b;
    for k in (0..f.num_colors).rev() {
        budgets[k] = choice[k][b];
        b -= choice[k][b];
    }
    let mut kept = vec![0u64; f.num_loads];
    let mut total_value = 0.0;
    for k in 0..f.num_colors {
        if budgets[k] == 0 {
            continue;
        }
        let (net, interval_arcs) = regional_color_network(f, x, a, k, budgets[k]);
        let mut net = net;
        let (_, cost, _) = net.min_cost_flow(0, f.num_slots, budgets[k] as f64, f64::INFINITY);
        total_value += -cost;
        for (l, arc) in interval_arcs {
            kept[l] += net.flow(arc).round() as u64;
        }
    }
    (total_value, kept)
}

/// Timeline network for one color: nodes are slot boundaries 0..=T (node s-1
/// to node e for interval (s, e)), idle arcs carry unused contract time.
fn regional_color_network(
    f: &RegionalFamily,
    x: &[u64],
    a: &[f64],
    color: usize,
    budget: usize,
) -> (FlowNetwork, Vec<(usize, usize)>) {
    let t_nodes = f.num_slots + 1;
    let mut net = FlowNetwork::new(t_nodes);
    for t in 0..f.num_slots {
        net.add_arc(t, t + 1, budget as f64, 0.0);
    }
    let mut interval_arcs = Vec::new();
    for l in 0..f.num_loads {
        if f.colors[l] != color || x[l] == 0 {
            continue;
        }
        let (s, e) = f.intervals[l];
        interval_arcs.push((l, net.add_arc(s - 1, e, x[l] as f64, -a[l])));
    }
    (net, interval_arcs)
}

fn regional_color_flow(
    f: &RegionalFamily,
    x: &[u64],
    a: &[f64],
    color: usize,
    budget: usize,
) -> Vec<(f64, f64)> {
    if budget == 0 {
        return Vec::new();
    }
    let (mut net, _) = regional_color_network(f, x, a, color, budget);
    let (_, _, log) = net.min_cost_flow(0, f.num_slots, budget as f64, f64::INFINITY);
    log
}

fn max_disjoint_count(f: &RegionalFamily, loads: &[usize]) -> usize {
    // Classic greedy by earliest end.
    let mut order: Vec<usize> = loads.to_vec();
    order.sort_by_key(|&l| (f.intervals[l].1, f.intervals[l].0, l));
    let mut count = 0;
    let mut last_end = 0usize;
    for &l in &order {
        let (s, e) = f.intervals[l];
        if s > last_end {
            count += 1;
            last_end = e;
        }
    }
    count
}

/// Max-weight set of pairwise-disjoint intervals among `loads` (all one
/// color), by the weighted interval scheduling DP. Returns (set, weight).
fn weighted_interval_schedule(f: &RegionalFamily, loads: &[usize], weights: &[f64]) -> (Vec<usize>, f64) {
    let mut order: Vec<usize> = loads.to_vec();
    order.sort_by_key(|&l| (f.intervals[l].1, f.intervals[l].0, l));
    let n = order.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // prev[i]: last j < i with end(j) < start(i), or None.
    let mut prev = vec![None; n];
    for i in 0..n {
        for j in (0..i).rev() {
            if f.intervals[order[j]].1 < f.intervals[order[i]].0 {
                prev[i] = Some(j);
                break;
            }
        }
    }
    let mut dp = vec![0.0f64; n + 1];
    for i in 0..n {
        let take = weights[order[i]] + prev[i].map_or(0.0, |j| dp[j + 1]);
        dp[i + 1] = dp[i].max(take);
    }
    let mut set = Vec::new();
    let mut i = n;
    while i > 0 {
        let take = weights[order[i - 1]] + prev[i - 1].map_or(0.0, |j| dp[j + 1]);
        if take > dp[i - 1] + 1e-15 {
            set.push(order[i - 1]);
            i = prev[i - 1].map_or(0, |j| j + 1);
        } else {
            i -= 1;
        }
    }
    set.sort_unstable();
    let w = set.iter().map(|&l| weights[l]).sum();
    (set, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Family {
        // O = {0, 1}, D = {2}, edges (0,2) and (1,2).
        Family::Bipartite(BipartiteFamily::new(vec![0, 1], vec![2], vec![(0, 2), (1, 2)]).unwrap())
    }

    fn regional3() -> Family {
        Family::Regional(
            RegionalFamily::new(3, vec![0, 0, 0], vec![(1, 2), (2, 3), (3, 3)]).unwrap(),
        )
    }

    #[test]
    fn lane_pack_is_total_demand() {
        let f = Family::Lane(LaneLevelFamily { num_loads: 1000 });
        assert_eq!(f.pack_count(&vec![1; 1000]), 1000);
    }

    #[test]
    fn bipartite_triangle_pack() {
        assert_eq!(triangle().pack_count(&[1, 1, 1]), 2);
        assert_eq!(triangle().pack_count(&[1, 0, 1]), 1);
        assert_eq!(triangle().pack_count(&[0, 0, 0]), 0);
    }

    #[test]
    fn regional_pack_closed_form() {
        // Max hourly overlap is 2 (slot 2 holds loads 0,1; slot 3 holds 1,2).
        assert_eq!(regional3().pack_count(&[1, 1, 1]), 2);
        assert_eq!(regional3().pack_count(&[1, 0, 1]), 1);
    }

    #[test]
    fn lane_fluid_is_linear() {
        let f = Family::Lane(LaneLevelFamily { num_loads: 1000 });
        let est = f.fluid_pack(&vec![0.7; 1000], 0, 0).unwrap();
        assert!((est.mean - 700.0).abs() < 1e-9);
        assert!(est.exact);
    }

    #[test]
    fn integer_fluid_equals_pack() {
        let est = triangle().fluid_pack(&[1.0, 1.0, 1.0], 0, 0).unwrap();
        assert_eq!(est.mean, 2.0);
        assert!(est.exact);
    }

    #[test]
    fn triangle_fluid_enumerates_fractional_outcomes() {
        // Outcomes over (X0, X1) with X2 = 1: packs 1, 1, 1, 2 -> mean 1.25.
        let est = triangle().fluid_pack(&[0.5, 0.5, 1.0], 0, 0).unwrap();
        assert!((est.mean - 1.25).abs() < 1e-12);
        assert!(est.exact);
    }

    #[test]
    fn assignment_zero_demand_is_free() {
        let sol = triangle().assignment_solution(&[0, 0, 0], 5, &[300.0; 3]);
        assert_eq!(sol.cost, 0.0);
        assert!(sol.contracts.is_empty());
    }

    #[test]
    fn lane_assignment_greedy() {
        let f = Family::Lane(LaneLevelFamily { num_loads: 1000 });
        let cost = f.assignment_cost(&vec![1; 1000], 700, &vec![300.0; 1000]);
        assert!((cost - 90_000.0).abs() < 1e-9);
    }

    #[test]
    fn triangle_assignment_uses_the_pair() {
        let sol = triangle().assignment_solution(&[1, 1, 1], 1, &[300.0; 3]);
        assert!((sol.cost - 300.0).abs() < 1e-9, "cost {}", sol.cost);
        assert_eq!(sol.contracts.len(), 1);
        assert_eq!(sol.contracts[0].len(), 2);
        assert_eq!(sol.alternate.iter().sum::<u64>(), 1);
    }

    #[test]
    fn lane_separation_picks_max_singleton() {
        let f = Family::Lane(LaneLevelFamily { num_loads: 3 });
        let hit = f.separation_oracle(&[1.0, 5.0, 2.0], 4.0).unwrap();
        assert_eq!(hit, (vec![1], 5.0));
    }

    #[test]
    fn regional_separation_finds_disjoint_pair() {
        let hit = regional3().separation_oracle(&[1.0, 1.0, 1.0], 1.5).unwrap();
        assert_eq!(hit.0, vec![0, 2]);
        assert!((hit.1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_separation_none_when_satisfied() {
        assert!(triangle().separation_oracle(&[1.0, 1.0, 1.0], 3.0).is_none());
    }

    #[test]
    fn er_extremes() {
        assert!(gen_er_bipartite(50, 50, 0.0, 1).unwrap().edges.is_empty());
        assert_eq!(gen_er_bipartite(50, 50, 1.0, 1).unwrap().edges.len(), 2500);
    }

    #[test]
    fn er_mean_edge_count() {
        let mut total = 0usize;
        let n = 1000;
        for seed in 0..n {
            total += gen_er_bipartite(50, 50, 0.1, seed).unwrap().edges.len();
        }
        let mean = total as f64 / n as f64;
        // Binomial(2500, 0.1): sd of the mean over 1000 seeds is ~0.47.
        assert!((mean - 250.0).abs() < 3.0 * 0.48, "mean {mean}");
    }

    #[test]
    fn lane_substitutability_is_zero() {
        let f = Family::Lane(LaneLevelFamily { num_loads: 5 });
        let gap = f.substitutability_gap(&[3, 1, 0, 2, 7], 0, 0).unwrap();
        assert_eq!(gap.mean, 0.0);
        assert!(gap.exact);
    }

    #[test]
    fn zero_demand_gap_is_zero() {
        let gap = triangle().substitutability_gap(&[0, 0, 0], 0, 0).unwrap();
        assert_eq!(gap.mean, 0.0);
    }

    #[test]
    fn non_contiguous_interval_bounds_rejected() {
        assert!(RegionalFamily::new(3, vec![0], vec![(2, 1)]).is_err());
        assert!(RegionalFamily::new(3, vec![0], vec![(0, 2)]).is_err());
        assert!(RegionalFamily::new(3, vec![0], vec![(1, 4)]).is_err());
    }

    #[test]
    fn maximal_sets_regional() {
        let sets = regional3().maximal_sets(1000).unwrap();
        // Maximal disjoint-interval sets: {0,1}? overlap at slot 2 -> no.
        // {0,2} (slots 1-2 and 3) and {1} (2-3 overlaps both others).
        assert!(sets.contains(&vec![0, 2]));
        assert!(sets.contains(&vec![1]));
        assert_eq!(sets.len(), 2);
    }
}
