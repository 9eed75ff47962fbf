//! Backward induction for the exponential-utility criterion and for the
//! risk-neutral expectation.
//!
//! Risk-averse recursion, for `t = N−1, …, 0`:
//!
//! ```text
//! V_N(x)    = cN(x)
//! ψ_t(x,u)  = (−2/θ) · ln Σ_w p_t(w|x,u) · exp((−θ/2) · V_{t+1}(f_t(x,u,w)))
//! Q_t(x,u)  = c_t(x,u) + ψ_t(x,u)
//! V_t(x)    = min_u Q_t(x,u)
//! ```
//!
//! `ψ` is evaluated per `(x, u)` in shifted log-space, the shift being the
//! largest successor value over disturbances with positive probability. The
//! greedy policy takes the smallest action index attaining the minimum.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evaluator::certainty_step;
use crate::model::{FiniteModel, MarkovPolicy};
use crate::risk::RiskParam;

/// Value functions `v[t][x]` for `t = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    num_states: usize,
    v: Vec<f64>,
}

impl ValueTables {
    #[inline]
    pub fn get(&self, t: usize, x: usize) -> f64 {
        self.v[t * self.num_states + x]
    }

    /// `v[t][·]`.
    pub fn stage(&self, t: usize) -> &[f64] {
        &self.v[t * self.num_states..(t + 1) * self.num_states]
    }

    /// Number of stages stored, `N + 1`.
    pub fn len(&self) -> usize {
        self.v.len() / self.num_states
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// Which criterion a [`SolveResult`] optimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    ExpUtility(RiskParam),
    RiskNeutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Keep the per-stage minimand table `Q_t(x,u)`.
    pub keep_stage_q_values: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { keep_stage_q_values: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub values: ValueTables,
    pub policy: MarkovPolicy,
    pub objective: Objective,
    stage_q_values: Option<Vec<f64>>,
    num_states: usize,
    num_actions: usize,
}

impl SolveResult {
    /// `Q_t(x,u)`, the quantity minimized at `(t, x)`, if retained.
    pub fn stage_q_value(&self, t: usize, x: usize, u: usize) -> Option<f64> {
        self.stage_q_values
            .as_ref()
            .map(|q| q[(t * self.num_states + x) * self.num_actions + u])
    }

    /// `Q_t(x,·)` over all actions, if retained.
    pub fn stage_q_row(&self, t: usize, x: usize) -> Option<&[f64]> {
        let start = (t * self.num_states + x) * self.num_actions;
        self.stage_q_values.as_ref().map(|q| &q[start..start + self.num_actions])
    }
}

/// Risk-averse backward induction with the default options.
pub fn solve_exputil(m: &FiniteModel, rp: RiskParam) -> SolveResult {
    solve_exputil_with(m, rp, SolveOptions::default())
}

pub fn solve_exputil_with(m: &FiniteModel, rp: RiskParam, opts: SolveOptions) -> SolveResult {
    let scale = rp.scale();
    backward_induction(m, Objective::ExpUtility(rp), opts, |t, x, u, next| {
        certainty_step(m, t, x, u, next, scale)
    })
}

/// Standard Bellman recursion minimizing expected total cost.
pub fn solve_risk_neutral(m: &FiniteModel) -> SolveResult {
    solve_risk_neutral_with(m, SolveOptions::default())
}

pub fn solve_risk_neutral_with(m: &FiniteModel, opts: SolveOptions) -> SolveResult {
    backward_induction(m, Objective::RiskNeutral, opts, |t, x, u, next| {
        let mut acc = 0.0;
        for (&y, &p) in m.successors(t, x, u).iter().zip(m.kernel_row(t, x, u)) {
            if p > 0.0 {
                acc += p * next[y];
            }
        }
        acc
    })
}

fn backward_induction(
    m: &FiniteModel,
    objective: Objective,
    opts: SolveOptions,
    continuation: impl Fn(usize, usize, usize, &[f64]) -> f64,
) -> SolveResult {
    let (n, ns, na) = (m.horizon(), m.num_states(), m.num_actions());
    let mut v = vec![0.0; (n + 1) * ns];
    v[n * ns..].copy_from_slice(m.terminal_costs());
    let mut policy = vec![0usize; n * ns];
    let mut q_table = opts.keep_stage_q_values.then(|| vec![0.0; n * ns * na]);
    let mut q_row = vec![0.0; na];

    for t in (0..n).rev() {
        let (head, tail) = v.split_at_mut((t + 1) * ns);
        let next = &tail[..ns];
        let current = &mut head[t * ns..];
        for x in 0..ns {
            for (u, q) in q_row.iter_mut().enumerate() {
                let psi = continuation(t, x, u, next);
                *q = m.stage_cost(t, x, u) + psi;
            }
            let mut best = 0;
            for u in 1..na {
                if q_row[u] < q_row[best] {
                    best = u;
                }
            }
            current[x] = q_row[best];
            policy[t * ns + x] = best;
            if let Some(table) = q_table.as_mut() {
                table[(t * ns + x) * na..][..na].copy_from_slice(&q_row);
            }
        }
    }

    SolveResult {
        values: ValueTables { num_states: ns, v },
        policy: MarkovPolicy::from_flat_unchecked(n, ns, policy),
        objective,
        stage_q_values: q_table,
        num_states: ns,
        num_actions: na,
    }
}

/// One row of a risk-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: RiskParam,
    /// `V_0(x0)`.
    pub value: f64,
    pub policy: MarkovPolicy,
    /// Whether the policy table differs from the previous row's.
    pub policy_changed: bool,
}

/// Solves once per `θ` (strictly ascending) and reports `V_0(x0)` and the
/// greedy policy for each.
pub fn theta_sweep(m: &FiniteModel, thetas: &[RiskParam], x0: usize) -> Result<Vec<SweepRow>> {
    m.check_state(x0)?;
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("empty theta list".into()));
    }
    if let Some(w) = thetas.windows(2).find(|w| w[0].theta() >= w[1].theta()) {
        return Err(Error::InvalidArgument(format!(
            "thetas must be strictly ascending ({} then {})",
            w[0].theta(),
            w[1].theta()
        )));
    }
    let opts = SolveOptions { keep_stage_q_values: false };
    let mut rows: Vec<SweepRow> = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let res = solve_exputil_with(m, theta, opts);
        let policy_changed = rows.last().is_some_and(|prev| prev.policy != res.policy);
        rows.push(SweepRow { theta, value: res.values.get(0, x0), policy: res.policy, policy_changed });
    }
    Ok(rows)
}
