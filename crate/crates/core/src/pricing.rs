//! Spot pricing oracles.
//!
//! An oracle answers one question: given a terminal cost `w` charged when a
//! load is not procured on the load board, what is the optimal implementable
//! pricing policy, its expected spot spend `s(w)`, and its non-procurement
//! probability `q(w)`? Three concrete oracle classes are provided: a
//! closed-form uniform static oracle, a grid-scanned logistic static oracle,
//! and a finite-horizon tabular MDP solved by backward induction.

use crate::error::{Error, Result};

/// Outcome of a best-response query at terminal cost `w`:
/// `total = spot_cost + non_procurement * w`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    /// Expected spot spend under the optimal policy, excluding terminal cost.
    pub spot_cost: f64,
    /// Probability the load is not procured by the end of the horizon.
    pub non_procurement: f64,
    /// `spot_cost + non_procurement * w`.
    pub total: f64,
    pub policy: PolicyDescriptor,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyDescriptor {
    /// Single posted price.
    Posted(f64),
    /// Price table indexed by (period, state).
    Table(Vec<Vec<f64>>),
}

impl PolicySummary {
    pub fn posted_price(&self) -> Option<f64> {
        match self.policy {
            PolicyDescriptor::Posted(p) => Some(p),
            PolicyDescriptor::Table(_) => None,
        }
    }
}

/// Static posted pricing against a minimum-acceptable-price distribution
/// uniform on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformStaticOracle {
    pub lo: f64,
    pub hi: f64,
}

impl UniformStaticOracle {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "uniform oracle requires 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Acceptance probability at posted price `p`.
    pub fn acceptance(&self, p: f64) -> f64 {
        ((p - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    /// First-order condition of the quadratic objective: p*(w) = (lo+w)/2,
    /// clamped to [lo, hi]. Below w = lo the do-nothing policy is optimal.
    fn best(&self, w: f64) -> PolicySummary {
        if w < self.lo {
            return PolicySummary {
                spot_cost: 0.0,
                non_procurement: 1.0,
                total: w,
                policy: PolicyDescriptor::Posted(self.lo),
            };
        }
        let p = ((self.lo + w) / 2.0).clamp(self.lo, self.hi);
        let f = self.acceptance(p);
        let q = 1.0 - f;
        let s = p * f;
        PolicySummary {
            spot_cost: s,
            non_procurement: q,
            total: s + q * w,
            policy: PolicyDescriptor::Posted(p),
        }
    }
}

/// Static posted pricing with a logistic acceptance curve
/// `f(p) = 1 / (1 + exp(-k (p - x0)))`, optimized over a price grid with
/// golden-section refinement on the best bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticStaticOracle {
    pub k: f64,
    pub x0: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub step: f64,
}

impl LogisticStaticOracle {
    pub fn new(k: f64, x0: f64, p_min: f64, p_max: f64, step: Option<f64>) -> Result<Self> {
        if !(k > 0.0 && k.is_finite() && x0.is_finite() && p_min < p_max && p_min >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "logistic oracle requires k > 0 and 0 <= p_min < p_max, got k={k}, [{p_min}, {p_max}]"
            )));
        }
        let step = step.unwrap_or((p_max - p_min) / 2000.0);
        if !(step > 0.0) {
            return Err(Error::InvalidInput("price grid step must be positive".into()));
        }
        Ok(Self { k, x0, p_min, p_max, step })
    }

    pub fn acceptance(&self, p: f64) -> f64 {
        1.0 / (1.0 + (-self.k * (p - self.x0)).exp())
    }

    fn objective(&self, p: f64, w: f64) -> f64 {
        let f = self.acceptance(p);
        p * f + w * (1.0 - f)
    }

    fn best(&self, w: f64) -> PolicySummary {
        // The do-nothing policy (q = 1, s = 0) is always implementable; the
        // logistic curve never reaches acceptance 0, so it is modeled as a
        // distinguished "no post" action rather than a grid point.
        let mut best_p = None;
        let mut best_v = w; // do-nothing value
        let n = ((self.p_max - self.p_min) / self.step).ceil() as usize;
        let mut best_idx = None;
        for i in 0..=n {
            let p = (self.p_min + i as f64 * self.step).min(self.p_max);
            let v = self.objective(p, w);
            if v < best_v - 1e-12 {
                best_v = v;
                best_p = Some(p);
                best_idx = Some(i);
            }
        }
        let Some(_) = best_p else {
            return PolicySummary {
                spot_cost: 0.0,
                non_procurement: 1.0,
                total: w,
                policy: PolicyDescriptor::Posted(self.p_min),
            };
        };
        // Golden-section refinement on the bracket around the best grid point.
        let i = best_idx.unwrap();
        let mut a = self.p_min + i.saturating_sub(1) as f64 * self.step;
        let mut b = (self.p_min + (i + 1) as f64 * self.step).min(self.p_max);
        let inv_phi = 0.618_033_988_749_894_9;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        for _ in 0..80 {
            if self.objective(c, w) < self.objective(d, w) {
                b = d;
            } else {
                a = c;
            }
            c = b - inv_phi * (b - a);
            d = a + inv_phi * (b - a);
            if b - a < 1e-10 * (1.0 + b.abs()) {
                break;
            }
        }
        let p = 0.5 * (a + b);
        let (p, v) = if self.objective(p, w) <= best_v {
            (p, self.objective(p, w))
        } else {
            (best_p.unwrap(), best_v)
        };
        let f = self.acceptance(p);
        let q = 1.0 - f;
        let s = p * f;
        debug_assert!((s + q * w - v).abs() <= 1e-9 * (1.0 + v.abs()));
        PolicySummary {
            spot_cost: s,
            non_procurement: q,
            total: s + q * w,
            policy: PolicyDescriptor::Posted(p),
        }
    }
}

/// Finite-horizon tabular pricing MDP.
///
/// `accept[t][s][p]` is the acceptance probability of price `prices[p]` in
/// period `t` and state `s`; `transition[t][s][p]` is the next-state law
/// conditional on the load not being accepted. Price index 0 must be the
/// price 0 with acceptance probability 0 in every (t, s).
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdpOracle {
    pub horizon: usize,
    pub num_states: usize,
    pub prices: Vec<f64>,
    pub accept: Vec<Vec<Vec<f64>>>,
    pub transition: Vec<Vec<Vec<Vec<f64>>>>,
    pub initial_state: usize,
}

impl TabularMdpOracle {
    pub fn new(
        horizon: usize,
        num_states: usize,
        prices: Vec<f64>,
        accept: Vec<Vec<Vec<f64>>>,
        transition: Vec<Vec<Vec<Vec<f64>>>>,
        initial_state: usize,
    ) -> Result<Self> {
        if horizon == 0 || num_states == 0 || prices.is_empty() {
            return Err(Error::InvalidInput("tabular MDP dimensions must be positive".into()));
        }
        if prices[0] != 0.0 {
            return Err(Error::InvalidInput("price index 0 must be the price 0".into()));
        }
        if initial_state >= num_states {
            return Err(Error::InvalidInput("initial state out of range".into()));
        }
        if accept.len() != horizon || transition.len() != horizon {
            return Err(Error::InvalidInput("accept/transition tables must span the horizon".into()));
        }
        for t in 0..horizon {
            if accept[t].len() != num_states || transition[t].len() != num_states {
                return Err(Error::InvalidInput("state dimension mismatch".into()));
            }
            for s in 0..num_states {
                if accept[t][s].len() != prices.len() || transition[t][s].len() != prices.len() {
                    return Err(Error::InvalidInput("price dimension mismatch".into()));
                }
                if accept[t][s][0] != 0.0 {
                    return Err(Error::InvalidInput("price 0 must never be accepted".into()));
                }
                for p in 0..prices.len() {
                    let b = accept[t][s][p];
                    if !(0.0..=1.0).contains(&b) {
                        return Err(Error::InvalidInput("acceptance probability outside [0,1]".into()));
                    }
                    let row = &transition[t][s][p];
                    if row.len() != num_states {
                        return Err(Error::InvalidInput("transition row dimension mismatch".into()));
                    }
                    let total: f64 = row.iter().sum();
                    if row.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidInput("transition row is not a distribution".into()));
                    }
                }
            }
        }
        Ok(Self { horizon, num_states, prices, accept, transition, initial_state })
    }

    /// Single-period static MDP with one state and the given price menu.
    pub fn static_single_period(prices: Vec<f64>, accept_probs: Vec<f64>) -> Result<Self> {
        let n = prices.len();
        if accept_probs.len() != n {
            return Err(Error::InvalidInput("price/acceptance length mismatch".into()));
        }
        Self::new(
            1,
            1,
            prices,
            vec![vec![accept_probs]],
            vec![vec![vec![vec![1.0]; n]]],
            0,
        )
    }

    /// Backward induction for the optimal price table, then an exact forward
    /// probability pass for (s, q). No simulation: the shadow-price loop
    /// needs a deterministic q per query.
    fn best(&self, w: f64) -> PolicySummary {
        let t_max = self.horizon;
        let np = self.prices.len();
        // value[t][s]: optimal cost-to-go from period t, state s, not yet accepted.
        let mut value = vec![vec![0.0f64; self.num_states]; t_max + 1];
        for s in 0..self.num_states {
            value[t_max][s] = w;
        }
        let mut policy = vec![vec![0usize; self.num_states]; t_max];
        for t in (0..t_max).rev() {
            for s in 0..self.num_states {
                let mut best_v = f64::INFINITY;
                let mut best_p = 0usize;
                for p in 0..np {
                    let b = self.accept[t][s][p];
                    let cont: f64 = self.transition[t][s][p]
                        .iter()
                        .enumerate()
                        .map(|(s2, pr)| pr * value[t + 1][s2])
                        .sum();
                    let v = b * self.prices[p] + (1.0 - b) * cont;
                    if v < best_v - 1e-12 {
                        best_v = v;
                        best_p = p;
                    }
                }
                value[t][s] = best_v;
                policy[t][s] = best_p;
            }
        }
        // Forward pass: reach[s] = P(not accepted so far, state s).
        let mut reach = vec![0.0f64; self.num_states];
        reach[self.initial_state] = 1.0;
        let mut spend = 0.0;
        for t in 0..t_max {
            let mut next = vec![0.0f64; self.num_states];
            for s in 0..self.num_states {
                if reach[s] == 0.0 {
                    continue;
                }
                let p = policy[t][s];
                let b = self.accept[t][s][p];
                spend += reach[s] * b * self.prices[p];
                let survive = reach[s] * (1.0 - b);
                for (s2, pr) in self.transition[t][s][p].iter().enumerate() {
                    next[s2] += survive * pr;
                }
            }
            reach = next;
        }
        let q: f64 = reach.iter().sum();
        let table: Vec<Vec<f64>> = policy
            .iter()
            .map(|row| row.iter().map(|&p| self.prices[p]).collect())
            .collect();
        PolicySummary {
            spot_cost: spend,
            non_procurement: q,
            total: spend + q * w,
            policy: PolicyDescriptor::Table(table),
        }
    }
}

/// A pricing oracle of any supported class.
#[derive(Debug, Clone, PartialEq)]
pub enum Oracle {
    Uniform(UniformStaticOracle),
    Logistic(LogisticStaticOracle),
    Tabular(TabularMdpOracle),
}

impl Oracle {
    /// Optimal policy within the oracle's implementable class at terminal
    /// cost `w`, with exact `s(w)` and `q(w)`.
    pub fn best_response(&self, w: f64) -> Result<PolicySummary> {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidInput(format!("terminal cost must be finite and >= 0, got {w}")));
        }
        Ok(match self {
            Oracle::Uniform(o) => o.best(w),
            Oracle::Logistic(o) => o.best(w),
            Oracle::Tabular(o) => o.best(w),
        })
    }

    /// Outcome `(s, q)` of posting a fixed price `p`, for static oracles.
    /// Used by the exhaustive grid optimizer.
    pub fn posted_outcome(&self, p: f64) -> Result<(f64, f64)> {
        let f = match self {
            Oracle::Uniform(o) => o.acceptance(p),
            Oracle::Logistic(o) => o.acceptance(p),
            Oracle::Tabular(_) => {
                return Err(Error::Capability(
                    "posted-price evaluation requires a static oracle".into(),
                ))
            }
        };
        Ok((p * f, 1.0 - f))
    }

    /// Central-difference residual of the envelope identity r'(w) = q(w).
    pub fn envelope_residual(&self, w: f64, h: f64) -> Result<f64> {
        if !(w > h && h > 0.0) {
            return Err(Error::InvalidInput("envelope residual requires w > h > 0".into()));
        }
        let hi = self.best_response(w + h)?.total;
        let lo = self.best_response(w - h)?.total;
        let q = self.best_response(w)?.non_procurement;
        Ok(((hi - lo) / (2.0 * h) - q).abs())
    }

    /// Max |dq/dw| over consecutive grid pairs; empirical Lipschitz constant
    /// of the non-procurement probability.
    pub fn lipschitz_estimate(&self, w_grid: &[f64]) -> Result<f64> {
        if w_grid.len() < 2 || w_grid.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidInput("w_grid must be sorted with at least 2 points".into()));
        }
        let mut beta: f64 = 0.0;
        let mut prev_q = self.best_response(w_grid[0])?.non_procurement;
        for pair in w_grid.windows(2) {
            let q = self.best_response(pair[1])?.non_procurement;
            beta = beta.max(((q - prev_q) / (pair[1] - pair[0])).abs());
            prev_q = q;
        }
        Ok(beta)
    }
}
