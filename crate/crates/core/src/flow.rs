//! Network-flow primitives used by the contract families: Dinic max-flow
//! (also yielding a minimum cut) and successive-shortest-path min-cost flow.

const EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Directed flow network with implicit reverse arcs.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(num_nodes: usize) -> Self {
        Self { arcs: Vec::new(), adj: vec![Vec::new(); num_nodes] }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Adds `from -> to` with the given capacity and cost; returns the arc id.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64, cost: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc { to: from, cap: 0.0, cost: -cost });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Flow pushed through the forward arc `id`.
    pub fn flow(&self, id: usize) -> f64 {
        self.arcs[id ^ 1].cap
    }

    /// Dinic max-flow from `s` to `t`. Returns the flow value.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let n = self.num_nodes();
        let mut total = 0.0;
        loop {
            // BFS level graph
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &id in &self.adj[u] {
                    let a = &self.arcs[id];
                    if a.cap > EPS && level[a.to] == usize::MAX {
                        level[a.to] = level[u] + 1;
                        queue.push_back(a.to);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            let mut iter = vec![0usize; n];
            loop {
                let pushed = self.dfs(s, t, f64::INFINITY, &level, &mut iter);
                if pushed <= EPS {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, limit: f64, level: &[usize], iter: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while iter[u] < self.adj[u].len() {
            let id = self.adj[u][iter[u]];
            let (to, cap) = (self.arcs[id].to, self.arcs[id].cap);
            if cap > EPS && level[to] == level[u] + 1 {
                let pushed = self.dfs(to, t, limit.min(cap), level, iter);
                if pushed > EPS {
                    self.arcs[id].cap -= pushed;
                    self.arcs[id ^ 1].cap += pushed;
                    return pushed;
                }
            }
            iter[u] += 1;
        }
        0.0
    }

    /// Nodes reachable from `s` in the residual network (call after `max_flow`
    /// to read off the source side of a minimum cut).
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.num_nodes()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &id in &self.adj[u] {
                let a = &self.arcs[id];
                if a.cap > EPS && !seen[a.to] {
                    seen[a.to] = true;
                    stack.push(a.to);
                }
            }
        }
        seen
    }

    /// Min-cost flow by successive shortest paths with node potentials.
    ///
    /// Augments along cheapest `s -> t` paths while the path cost is below
    /// `cost_cutoff` (use 0.0 to collect only profitable paths of a
    /// negative-cost network) and the total flow is below `max_flow`.
    /// Returns `(total_flow, total_cost, augmentations)` where each
    /// augmentation records `(amount, unit_cost)` in the order found
    /// (unit costs are nondecreasing).
    pub fn min_cost_flow(
        &mut self,
        s: usize,
        t: usize,
        max_flow: f64,
        cost_cutoff: f64,
    ) -> (f64, f64, Vec<(f64, f64)>) {
        let n = self.num_nodes();
        // Bellman-Ford once to admit negative arc costs, then Dijkstra.
        let mut potential = vec![0.0f64; n];
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if potential[u] == f64::INFINITY {
                    continue;
                }
                for &id in &self.adj[u] {
                    let a = &self.arcs[id];
                    if a.cap > EPS && potential[u] + a.cost < potential[a.to] - 1e-12 {
                        potential[a.to] = potential[u] + a.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut flow = 0.0;
        let mut cost = 0.0;
        let mut log = Vec::new();
        while flow < max_flow - EPS {
            // Dijkstra with reduced costs.
            let mut dist = vec![f64::INFINITY; n];
            let mut prev = vec![usize::MAX; n];
            dist[s] = 0.0;
            let mut heap = std::collections::BinaryHeap::new();
            heap.push(std::cmp::Reverse((ordered(0.0), s)));
            while let Some(std::cmp::Reverse((d, u))) = heap.pop() {
                let d = d.0;
                if d > dist[u] + EPS {
                    continue;
                }
                for &id in &self.adj[u] {
                    let a = &self.arcs[id];
                    if a.cap <= EPS {
                        continue;
                    }
                    let nd = dist[u] + a.cost + potential[u] - potential[a.to];
                    if nd < dist[a.to] - 1e-12 {
                        dist[a.to] = nd;
                        prev[a.to] = id;
                        heap.push(std::cmp::Reverse((ordered(nd), a.to)));
                    }
                }
            }
            if dist[t] == f64::INFINITY {
                break;
            }
            let path_cost = dist[t] + potential[t] - potential[s];
            if path_cost >= cost_cutoff - EPS {
                break;
            }
            // Bottleneck along the path.
            let mut amount = max_flow - flow;
            let mut v = t;
            while v != s {
                let id = prev[v];
                amount = amount.min(self.arcs[id].cap);
                v = self.arcs[id ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let id = prev[v];
                self.arcs[id].cap -= amount;
                self.arcs[id ^ 1].cap += amount;
                v = self.arcs[id ^ 1].to;
            }
            for u in 0..n {
                if dist[u] < f64::INFINITY {
                    potential[u] += dist[u];
                }
            }
            flow += amount;
            cost += amount * path_cost;
            log.push((amount, path_cost));
        }
        (flow, cost, log)
    }
}

fn ordered(x: f64) -> OrderedF64 {
    OrderedF64(x)
}

/// Total order on finite floats, for use in heaps.
#[derive(PartialEq, PartialOrd)]
pub struct OrderedF64(pub f64);

impl Eq for OrderedF64 {}

#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_flow_on_small_bipartite_graph() {
        // s=0, left {1,2}, right {3}, t=4; both left nodes feed the one right node.
        let mut net = FlowNetwork::new(5);
        net.add_arc(0, 1, 1.0, 0.0);
        net.add_arc(0, 2, 1.0, 0.0);
        net.add_arc(1, 3, 1.0, 0.0);
        net.add_arc(2, 3, 1.0, 0.0);
        net.add_arc(3, 4, 1.0, 0.0);
        assert_eq!(net.max_flow(0, 4), 1.0);
    }

    #[test]
    fn min_cost_flow_prefers_cheaper_path() {
        // Two parallel s->t arcs, costs -5 and -2, capacity 1 each.
        let mut net = FlowNetwork::new(2);
        net.add_arc(0, 1, 1.0, -5.0);
        net.add_arc(0, 1, 1.0, -2.0);
        let (f, c, log) = net.min_cost_flow(0, 1, 2.0, 0.0);
        assert_eq!(f, 2.0);
        assert_eq!(c, -7.0);
        assert_eq!(log, vec![(1.0, -5.0), (1.0, -2.0)]);
    }

    #[test]
    fn min_cost_flow_stops_at_cutoff() {
        let mut net = FlowNetwork::new(2);
        net.add_arc(0, 1, 1.0, -5.0);
        net.add_arc(0, 1, 1.0, 2.0);
        let (f, c, _) = net.min_cost_flow(0, 1, 2.0, 0.0);
        assert_eq!(f, 1.0);
        assert_eq!(c, -5.0);
    }
}
