//! Brute-force ground truth for tiny instances.
//!
//! [`brute_force_markov`] evaluates every deterministic Markov policy;
//! [`brute_force_history`] evaluates every deterministic policy whose actions
//! may depend on the whole state history. The second class contains the first,
//! so its optimum can only be lower; backward induction claims both equal the
//! dynamic-programming value. [`certify`] checks all three against each other.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evaluator::{certainty_step, evaluate_policy};
use crate::math::abs;
use crate::model::{FiniteModel, MarkovPolicy};
use crate::risk::RiskParam;
use crate::solver::solve_exputil;

/// Values within this distance of the best are grouped into the argmin set.
pub const ARGMIN_TOLERANCE: f64 = 1e-10;

/// Largest gap [`certify`] accepts between the three optimal values.
pub const CERTIFY_TOLERANCE: f64 = 1e-9;

/// Enumeration limits. Exceeding one is an error, never a silent truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Maximum number of Markov policies, `|A|^(|S|·N)`.
    pub markov_policies: u64,
    /// Maximum number of history-dependent policies.
    pub history_policies: u64,
    /// Maximum number of trajectory-tree leaves per history policy, `|D|^N`.
    pub leaves: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { markov_policies: 1_000_000, history_policies: 100_000, leaves: 1_000_000 }
    }
}

fn saturating_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

fn check_cap(what: &'static str, required: u128, cap: u64) -> Result<()> {
    if required > u128::from(cap) {
        Err(Error::CapExceeded { what, required, cap })
    } else {
        Ok(())
    }
}

/// Number of Markov policies, `|A|^(|S|·N)`, saturating.
pub fn markov_policy_count(m: &FiniteModel) -> u128 {
    saturating_pow(m.num_actions(), m.num_states() * m.horizon())
}

/// Number of histories `(x0, x1, …, x_t)` rooted at a fixed `x0`, over
/// `t = 0..N−1`: `Σ_t |S|^t`.
fn rooted_history_count(m: &FiniteModel) -> u128 {
    (0..m.horizon()).fold(0u128, |acc, t| acc.saturating_add(saturating_pow(m.num_states(), t)))
}

/// Number of history-dependent policies distinguishable from a fixed start,
/// `|A|^(Σ_t |S|^t)`, saturating.
pub fn history_policy_count(m: &FiniteModel) -> u128 {
    let decisions = rooted_history_count(m);
    if decisions > 128 && m.num_actions() > 1 {
        return u128::MAX;
    }
    saturating_pow(m.num_actions(), decisions as usize)
}

/// Result of [`brute_force_markov`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovOptimum {
    pub value: f64,
    /// Every policy within [`ARGMIN_TOLERANCE`] of `value`, in lexicographic
    /// order of the flattened `[t][x]` action table.
    pub argmin: Vec<MarkovPolicy>,
    pub evaluated: u64,
}

impl MarkovOptimum {
    pub fn contains(&self, pi: &MarkovPolicy) -> bool {
        self.argmin.binary_search_by(|p| p.as_flat().cmp(pi.as_flat())).is_ok()
    }
}

/// Advances a mixed-radix odometer with the last digit fastest. Returns
/// `false` after the final combination.
fn advance(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Evaluates every Markov policy from `x0` and returns the minimum and the
/// full argmin set.
pub fn brute_force_markov(m: &FiniteModel, rp: RiskParam, x0: usize, caps: &Caps) -> Result<MarkovOptimum> {
    m.check_state(x0)?;
    check_cap("Markov policies", markov_policy_count(m), caps.markov_policies)?;
    let (n, ns, na) = (m.horizon(), m.num_states(), m.num_actions());
    let mut digits = vec![0usize; n * ns];
    let mut values = Vec::new();
    loop {
        let pi = MarkovPolicy::from_flat_unchecked(n, ns, digits.clone());
        values.push(evaluate_policy(m, &pi, rp, x0)?);
        if !advance(&mut digits, na) {
            break;
        }
    }
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);

    let mut argmin = Vec::new();
    digits.iter_mut().for_each(|d| *d = 0);
    for &v in &values {
        if abs(v - best) <= ARGMIN_TOLERANCE {
            argmin.push(MarkovPolicy::from_flat_unchecked(n, ns, digits.clone()));
        }
        advance(&mut digits, na);
    }
    Ok(MarkovOptimum { value: best, argmin, evaluated: values.len() as u64 })
}

/// A deterministic policy choosing actions from the state history
/// `(x_0, …, x_t)`, for histories starting at a fixed root state.
///
/// Histories of length `t+1` are indexed in base `|S|` over `(x_1, …, x_t)`
/// after an offset of `Σ_{i<t} |S|^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryPolicy {
    root: usize,
    horizon: usize,
    num_states: usize,
    actions: Vec<usize>,
}

impl HistoryPolicy {
    /// Builds a policy from its flattened decision table, checked against `m`.
    pub fn new(m: &FiniteModel, root: usize, actions: Vec<usize>) -> Result<Self> {
        m.check_state(root)?;
        let expected = rooted_history_count(m);
        if actions.len() as u128 != expected {
            return Err(Error::ShapeMismatch(alloc::format!(
                "history policy has {} decisions, expected {expected}",
                actions.len()
            )));
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= m.num_actions()) {
            return Err(Error::ActionOutOfRange { action: a, actions: m.num_actions() });
        }
        Ok(HistoryPolicy { root, horizon: m.horizon(), num_states: m.num_states(), actions })
    }

    /// Embeds a Markov policy: the action depends only on the last state.
    pub fn from_markov(m: &FiniteModel, pi: &MarkovPolicy, root: usize) -> Result<Self> {
        pi.check_for(m)?;
        m.check_state(root)?;
        let mut actions = Vec::new();
        let mut tail = Vec::new();
        for t in 0..m.horizon() {
            let count = saturating_pow(m.num_states(), t) as usize;
            for code in 0..count {
                decode_history(code, t, m.num_states(), &mut tail);
                let last = tail.last().copied().unwrap_or(root);
                actions.push(pi.action(t, last));
            }
        }
        HistoryPolicy::new(m, root, actions)
    }

    /// Action taken after `history = (x_0, …, x_t)`; `x_0` must be the root.
    pub fn action(&self, history: &[usize]) -> Option<usize> {
        let (&first, rest) = history.split_first()?;
        let t = rest.len();
        if first != self.root || t >= self.horizon || rest.iter().any(|&x| x >= self.num_states) {
            return None;
        }
        Some(self.actions[history_index(rest, self.num_states)])
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn as_flat(&self) -> &[usize] {
        &self.actions
    }
}

/// Flat index of the history whose non-root part is `tail`.
fn history_index(tail: &[usize], ns: usize) -> usize {
    let t = tail.len();
    let offset: usize = (0..t).map(|i| ns.pow(i as u32)).sum();
    offset + tail.iter().fold(0, |acc, &x| acc * ns + x)
}

fn decode_history(mut code: usize, t: usize, ns: usize, tail: &mut Vec<usize>) {
    tail.clear();
    tail.resize(t, 0);
    for slot in tail.iter_mut().rev() {
        *slot = code % ns;
        code /= ns;
    }
}

/// Certainty equivalent of the cost-to-go after `tail`, by full expansion of
/// the trajectory tree. Uses the same per-node step as the Markov evaluator, so
/// a history policy that embeds a Markov policy reproduces its value bitwise.
fn history_value(m: &FiniteModel, policy: &HistoryPolicy, tail: &mut Vec<usize>, x: usize, scale: f64) -> f64 {
    let t = tail.len();
    if t == m.horizon() {
        return m.terminal_cost(x);
    }
    let u = policy.actions[history_index(tail, m.num_states())];
    let mut next = vec![0.0; m.num_states()];
    for (&y, &p) in m.successors(t, x, u).iter().zip(m.kernel_row(t, x, u)) {
        if p > 0.0 {
            tail.push(y);
            next[y] = history_value(m, policy, tail, y, scale);
            tail.pop();
        }
    }
    m.stage_cost(t, x, u) + certainty_step(m, t, x, u, &next, scale)
}

/// Exponential-utility cost of a history policy from its root.
pub fn evaluate_history_policy(m: &FiniteModel, policy: &HistoryPolicy, rp: RiskParam) -> Result<f64> {
    if policy.horizon != m.horizon() || policy.num_states != m.num_states() {
        return Err(Error::ShapeMismatch("history policy does not match model".into()));
    }
    Ok(history_value(m, policy, &mut Vec::with_capacity(m.horizon()), policy.root, rp.scale()))
}

/// Result of [`brute_force_history`].
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryOptimum {
    pub value: f64,
    /// First optimal policy in enumeration order.
    pub policy: HistoryPolicy,
    pub evaluated: u64,
}

/// Evaluates every history-dependent policy rooted at `x0` and returns the
/// minimum. Decisions at histories not starting at `x0` cannot affect the cost
/// from `x0`, so only rooted histories are enumerated.
pub fn brute_force_history(m: &FiniteModel, rp: RiskParam, x0: usize, caps: &Caps) -> Result<HistoryOptimum> {
    m.check_state(x0)?;
    check_cap("history-dependent policies", history_policy_count(m), caps.history_policies)?;
    check_cap("trajectory leaves", saturating_pow(m.num_disturbances(), m.horizon()), caps.leaves)?;
    let decisions = rooted_history_count(m) as usize;
    let mut policy =
        HistoryPolicy { root: x0, horizon: m.horizon(), num_states: m.num_states(), actions: vec![0; decisions] };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluated = 0u64;
    loop {
        let v = evaluate_history_policy(m, &policy, rp)?;
        evaluated += 1;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, policy.actions.clone()));
        }
        if !advance(&mut policy.actions, m.num_actions()) {
            break;
        }
    }
    let (value, actions) = best.expect("at least one policy");
    policy.actions = actions;
    Ok(HistoryOptimum { value, policy, evaluated })
}

/// Outcome of [`certify`].
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub dp_value: f64,
    pub markov_value: f64,
    pub history_value: f64,
    pub max_gap: f64,
    pub dp_policy_in_argmin: bool,
    pub pass: bool,
}

/// Cross-checks backward induction against both brute-force oracles.
/// Passes iff all pairwise gaps are ≤ [`CERTIFY_TOLERANCE`] and the greedy
/// policy belongs to the Markov argmin set.
pub fn certify(m: &FiniteModel, rp: RiskParam, x0: usize, caps: &Caps) -> Result<Certificate> {
    m.check_state(x0)?;
    let markov = brute_force_markov(m, rp, x0, caps)?;
    let history = brute_force_history(m, rp, x0, caps)?;
    let dp = solve_exputil(m, rp);
    let dp_value = dp.values.get(0, x0);
    let vals = [dp_value, markov.value, history.value];
    let max_gap = vals
        .iter()
        .flat_map(|a| vals.iter().map(move |b| abs(a - b)))
        .fold(0.0, f64::max);
    let dp_policy_in_argmin = markov.contains(&dp.policy);
    Ok(Certificate {
        dp_value,
        markov_value: markov.value,
        history_value: history.value,
        max_gap,
        dp_policy_in_argmin,
        pass: max_gap <= CERTIFY_TOLERANCE && dp_policy_in_argmin,
    })
}
