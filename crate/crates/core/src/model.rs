//! The finite controlled Markov model.
//!
//! A model has a horizon `N`, finite index sets of states, actions and
//! disturbances, a dynamics table `f[t][x][u][w]`, per-`(t, x, u)` disturbance
//! laws `p[t][x][u][w]`, stage costs `c[t][x][u]` and a terminal cost `cN[x]`.
//!
//! [`ModelTables`] holds the raw nested tables exactly as they appear in a
//! model file. [`validate_model`] checks them and reports every violation;
//! [`FiniteModel::new`] only succeeds on tables with no violations, so every
//! other operation in the crate can assume a well-formed model.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::abs;

/// Allowed deviation of a kernel row sum from one.
pub const KERNEL_TOLERANCE: f64 = 1e-12;

/// Raw, unvalidated model tables indexed `[t][x][u][w]`, `[t][x][u]` and `[x]`.
///
/// Labels are for reporting only; semantics are index-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTables {
    pub horizon: usize,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub disturbances: Vec<String>,
    pub dynamics: Vec<Vec<Vec<Vec<usize>>>>,
    pub kernel: Vec<Vec<Vec<Vec<f64>>>>,
    pub stage_cost: Vec<Vec<Vec<f64>>>,
    pub terminal_cost: Vec<f64>,
}

impl ModelTables {
    /// Rescales kernel rows whose sum is within `tolerance` of one (but not
    /// already within [`KERNEL_TOLERANCE`]) so they sum to one. Rows further
    /// off are left alone and will still fail validation. Returns the number of
    /// rows rescaled.
    pub fn renormalize_kernel(&mut self, tolerance: f64) -> usize {
        let mut fixed = 0;
        for stage in &mut self.kernel {
            for state in stage {
                for row in state {
                    let sum: f64 = row.iter().sum();
                    let off = abs(sum - 1.0);
                    if off > KERNEL_TOLERANCE
                        && off <= tolerance
                        && row.iter().all(|p| p.is_finite() && *p >= 0.0)
                    {
                        for p in row.iter_mut() {
                            *p /= sum;
                        }
                        fixed += 1;
                    }
                }
            }
        }
        fixed
    }
}

/// One breach of a model invariant, naming the offending indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyHorizon,
    EmptySet { set: &'static str },
    /// A nested table has the wrong length at `index` (outer indices).
    Shape { table: &'static str, index: Vec<usize>, expected: usize, found: usize },
    KernelRowSum { t: usize, x: usize, u: usize, sum: f64 },
    InvalidProbability { t: usize, x: usize, u: usize, w: usize, prob: f64 },
    StateOutOfRange { t: usize, x: usize, u: usize, w: usize, target: usize, states: usize },
    NonFiniteStageCost { t: usize, x: usize, u: usize, cost: f64 },
    NonFiniteTerminalCost { x: usize, cost: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyHorizon => write!(f, "horizon must be at least 1"),
            Violation::EmptySet { set } => write!(f, "{set} must be non-empty"),
            Violation::Shape { table, index, expected, found } => write!(
                f,
                "{table}{} has length {found}, expected {expected}",
                IndexPath(index)
            ),
            Violation::KernelRowSum { t, x, u, sum } => write!(
                f,
                "kernel row (t={t}, x={x}, u={u}) sums to {sum}, expected 1 within {KERNEL_TOLERANCE:e}"
            ),
            Violation::InvalidProbability { t, x, u, w, prob } => write!(
                f,
                "kernel entry (t={t}, x={x}, u={u}, w={w}) = {prob} is not a probability"
            ),
            Violation::StateOutOfRange { t, x, u, w, target, states } => write!(
                f,
                "state index out of range: dynamics (t={t}, x={x}, u={u}, w={w}) -> {target} (|S| = {states})"
            ),
            Violation::NonFiniteStageCost { t, x, u, cost } => {
                write!(f, "stage cost (t={t}, x={x}, u={u}) = {cost} is not finite")
            }
            Violation::NonFiniteTerminalCost { x, cost } => {
                write!(f, "terminal cost (x={x}) = {cost} is not finite")
            }
        }
    }
}

struct IndexPath<'a>(&'a [usize]);

impl fmt::Display for IndexPath<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in self.0 {
            write!(f, "[{i}]")?;
        }
        Ok(())
    }
}

/// Outcome of [`validate_model`]: empty means the tables are a valid model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

/// Checks every model invariant and reports all violations found.
///
/// Checks stop descending into a table whose shape is wrong, so a single
/// malformed row produces one shape violation rather than a cascade.
pub fn validate_model(m: &ModelTables) -> ValidationReport {
    let mut out = Vec::new();
    let n = m.horizon;
    let (ns, na, nd) = (m.states.len(), m.actions.len(), m.disturbances.len());
    if n == 0 {
        out.push(Violation::EmptyHorizon);
    }
    for (set, len) in [("states", ns), ("actions", na), ("disturbances", nd)] {
        if len == 0 {
            out.push(Violation::EmptySet { set });
        }
    }

    let shape = |out: &mut Vec<Violation>, table, index: &[usize], expected, found| {
        if expected != found {
            out.push(Violation::Shape { table, index: index.to_vec(), expected, found });
            false
        } else {
            true
        }
    };

    if shape(&mut out, "dynamics", &[], n, m.dynamics.len()) {
        for (t, stage) in m.dynamics.iter().enumerate() {
            if !shape(&mut out, "dynamics", &[t], ns, stage.len()) {
                continue;
            }
            for (x, row) in stage.iter().enumerate() {
                if !shape(&mut out, "dynamics", &[t, x], na, row.len()) {
                    continue;
                }
                for (u, succ) in row.iter().enumerate() {
                    if !shape(&mut out, "dynamics", &[t, x, u], nd, succ.len()) {
                        continue;
                    }
                    for (w, &target) in succ.iter().enumerate() {
                        if target >= ns {
                            out.push(Violation::StateOutOfRange { t, x, u, w, target, states: ns });
                        }
                    }
                }
            }
        }
    }

    if shape(&mut out, "kernel", &[], n, m.kernel.len()) {
        for (t, stage) in m.kernel.iter().enumerate() {
            if !shape(&mut out, "kernel", &[t], ns, stage.len()) {
                continue;
            }
            for (x, row) in stage.iter().enumerate() {
                if !shape(&mut out, "kernel", &[t, x], na, row.len()) {
                    continue;
                }
                for (u, probs) in row.iter().enumerate() {
                    if !shape(&mut out, "kernel", &[t, x, u], nd, probs.len()) {
                        continue;
                    }
                    let mut sum = 0.0;
                    let mut entries_ok = true;
                    for (w, &prob) in probs.iter().enumerate() {
                        if !prob.is_finite() || prob < 0.0 {
                            out.push(Violation::InvalidProbability { t, x, u, w, prob });
                            entries_ok = false;
                        }
                        sum += prob;
                    }
                    if entries_ok && abs(sum - 1.0) > KERNEL_TOLERANCE {
                        out.push(Violation::KernelRowSum { t, x, u, sum });
                    }
                }
            }
        }
    }

    if shape(&mut out, "stage_cost", &[], n, m.stage_cost.len()) {
        for (t, stage) in m.stage_cost.iter().enumerate() {
            if !shape(&mut out, "stage_cost", &[t], ns, stage.len()) {
                continue;
            }
            for (x, row) in stage.iter().enumerate() {
                if !shape(&mut out, "stage_cost", &[t, x], na, row.len()) {
                    continue;
                }
                for (u, &cost) in row.iter().enumerate() {
                    if !cost.is_finite() {
                        out.push(Violation::NonFiniteStageCost { t, x, u, cost });
                    }
                }
            }
        }
    }

    if shape(&mut out, "terminal_cost", &[], ns, m.terminal_cost.len()) {
        for (x, &cost) in m.terminal_cost.iter().enumerate() {
            if !cost.is_finite() {
                out.push(Violation::NonFiniteTerminalCost { x, cost });
            }
        }
    }

    ValidationReport { violations: out }
}

/// A validated finite-horizon controlled Markov model.
///
/// Tables are stored flat in `[t][x][u][w]` row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel {
    horizon: usize,
    states: Vec<String>,
    actions: Vec<String>,
    disturbances: Vec<String>,
    dynamics: Vec<usize>,
    kernel: Vec<f64>,
    stage_cost: Vec<f64>,
    terminal_cost: Vec<f64>,
}

impl FiniteModel {
    /// Validates `tables` and builds the model, or returns every violation.
    pub fn new(tables: ModelTables) -> Result<Self> {
        let report = validate_model(&tables);
        if !report.is_ok() {
            return Err(Error::InvalidModel(report));
        }
        let flat4 = |t: Vec<Vec<Vec<Vec<usize>>>>| t.into_iter().flatten().flatten().flatten().collect();
        let flat4f = |t: Vec<Vec<Vec<Vec<f64>>>>| t.into_iter().flatten().flatten().flatten().collect();
        Ok(FiniteModel {
            horizon: tables.horizon,
            states: tables.states,
            actions: tables.actions,
            disturbances: tables.disturbances,
            dynamics: flat4(tables.dynamics),
            kernel: flat4f(tables.kernel),
            stage_cost: tables.stage_cost.into_iter().flatten().flatten().collect(),
            terminal_cost: tables.terminal_cost,
        })
    }

    /// Builds a model from index functions, with labels `s0.., a0.., w0..`.
    ///
    /// `transition(t, x, u, w)` returns `(next_state, probability)`.
    pub fn from_fn(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        num_disturbances: usize,
        mut transition: impl FnMut(usize, usize, usize, usize) -> (usize, f64),
        mut stage_cost: impl FnMut(usize, usize, usize) -> f64,
        mut terminal_cost: impl FnMut(usize) -> f64,
    ) -> Result<Self> {
        let labels = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect();
        let mut dynamics = Vec::with_capacity(horizon);
        let mut kernel = Vec::with_capacity(horizon);
        let mut costs = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let mut dyn_t = Vec::with_capacity(num_states);
            let mut ker_t = Vec::with_capacity(num_states);
            let mut cost_t = Vec::with_capacity(num_states);
            for x in 0..num_states {
                let mut dyn_x = Vec::with_capacity(num_actions);
                let mut ker_x = Vec::with_capacity(num_actions);
                let mut cost_x = Vec::with_capacity(num_actions);
                for u in 0..num_actions {
                    let (succ, probs): (Vec<usize>, Vec<f64>) =
                        (0..num_disturbances).map(|w| transition(t, x, u, w)).unzip();
                    dyn_x.push(succ);
                    ker_x.push(probs);
                    cost_x.push(stage_cost(t, x, u));
                }
                dyn_t.push(dyn_x);
                ker_t.push(ker_x);
                cost_t.push(cost_x);
            }
            dynamics.push(dyn_t);
            kernel.push(ker_t);
            costs.push(cost_t);
        }
        FiniteModel::new(ModelTables {
            horizon,
            states: labels("s", num_states),
            actions: labels("a", num_actions),
            disturbances: labels("w", num_disturbances),
            dynamics,
            kernel,
            stage_cost: costs,
            terminal_cost: (0..num_states).map(&mut terminal_cost).collect(),
        })
    }

    /// Nested tables equivalent to this model (for serialization).
    pub fn to_tables(&self) -> ModelTables {
        let (n, ns, na, nd) = self.dims();
        let nest4 = |flat: &[usize]| -> Vec<Vec<Vec<Vec<usize>>>> {
            (0..n)
                .map(|t| {
                    (0..ns)
                        .map(|x| (0..na).map(|u| flat[self.idx4(t, x, u, 0)..][..nd].to_vec()).collect())
                        .collect()
                })
                .collect()
        };
        let kernel = (0..n)
            .map(|t| (0..ns).map(|x| (0..na).map(|u| self.kernel_row(t, x, u).to_vec()).collect()).collect())
            .collect();
        let stage_cost = (0..n)
            .map(|t| (0..ns).map(|x| self.stage_cost_row(t, x).to_vec()).collect())
            .collect();
        ModelTables {
            horizon: n,
            states: self.states.clone(),
            actions: self.actions.clone(),
            disturbances: self.disturbances.clone(),
            dynamics: nest4(&self.dynamics),
            kernel,
            stage_cost,
            terminal_cost: self.terminal_cost.clone(),
        }
    }

    /// Re-runs validation on the stored tables. Always ok for a constructed model.
    pub fn validate(&self) -> ValidationReport {
        validate_model(&self.to_tables())
    }

    #[inline]
    fn dims(&self) -> (usize, usize, usize, usize) {
        (self.horizon, self.states.len(), self.actions.len(), self.disturbances.len())
    }

    #[inline]
    fn idx3(&self, t: usize, x: usize, u: usize) -> usize {
        (t * self.states.len() + x) * self.actions.len() + u
    }

    #[inline]
    fn idx4(&self, t: usize, x: usize, u: usize, w: usize) -> usize {
        self.idx3(t, x, u) * self.disturbances.len() + w
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_disturbances(&self) -> usize {
        self.disturbances.len()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.states
    }

    pub fn action_labels(&self) -> &[String] {
        &self.actions
    }

    pub fn disturbance_labels(&self) -> &[String] {
        &self.disturbances
    }

    /// `f[t][x][u][w]`.
    #[inline]
    pub fn next_state(&self, t: usize, x: usize, u: usize, w: usize) -> usize {
        self.dynamics[self.idx4(t, x, u, w)]
    }

    /// `f[t][x][u][·]` over all disturbances.
    #[inline]
    pub fn successors(&self, t: usize, x: usize, u: usize) -> &[usize] {
        let start = self.idx4(t, x, u, 0);
        &self.dynamics[start..start + self.disturbances.len()]
    }

    /// `p[t][x][u][·]`.
    #[inline]
    pub fn kernel_row(&self, t: usize, x: usize, u: usize) -> &[f64] {
        let start = self.idx4(t, x, u, 0);
        &self.kernel[start..start + self.disturbances.len()]
    }

    #[inline]
    pub fn stage_cost(&self, t: usize, x: usize, u: usize) -> f64 {
        self.stage_cost[self.idx3(t, x, u)]
    }

    /// `c[t][x][·]` over all actions.
    #[inline]
    pub fn stage_cost_row(&self, t: usize, x: usize) -> &[f64] {
        let start = self.idx3(t, x, 0);
        &self.stage_cost[start..start + self.actions.len()]
    }

    #[inline]
    pub fn terminal_cost(&self, x: usize) -> f64 {
        self.terminal_cost[x]
    }

    pub fn terminal_costs(&self) -> &[f64] {
        &self.terminal_cost
    }

    /// Smallest and largest stage cost over all `(t, x, u)`.
    pub fn stage_cost_range(&self) -> (f64, f64) {
        min_max(&self.stage_cost)
    }

    pub fn terminal_cost_range(&self) -> (f64, f64) {
        min_max(&self.terminal_cost)
    }

    /// Returns a copy with `delta` added to every stage-`t` cost.
    pub fn with_stage_cost_shift(&self, t: usize, delta: f64) -> Result<Self> {
        self.check_stage(t)?;
        let mut out = self.clone();
        let start = self.idx3(t, 0, 0);
        let len = self.states.len() * self.actions.len();
        for c in &mut out.stage_cost[start..start + len] {
            *c += delta;
        }
        Ok(out)
    }

    pub fn check_state(&self, x: usize) -> Result<()> {
        if x < self.states.len() {
            Ok(())
        } else {
            Err(Error::StateOutOfRange { state: x, states: self.states.len() })
        }
    }

    fn check_stage(&self, t: usize) -> Result<()> {
        if t < self.horizon {
            Ok(())
        } else {
            Err(Error::StageOutOfRange { stage: t, horizon: self.horizon })
        }
    }

    /// Finds a state by label, falling back to parsing a decimal index.
    pub fn find_state(&self, label_or_index: &str) -> Option<usize> {
        find_label(&self.states, label_or_index)
    }

    pub fn find_action(&self, label_or_index: &str) -> Option<usize> {
        find_label(&self.actions, label_or_index)
    }
}

fn find_label(labels: &[String], key: &str) -> Option<usize> {
    labels
        .iter()
        .position(|l| l == key)
        .or_else(|| key.parse::<usize>().ok().filter(|&i| i < labels.len()))
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)))
}

/// A deterministic Markov policy: one action per `(t, x)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkovPolicy {
    horizon: usize,
    num_states: usize,
    actions: Vec<usize>,
}

impl MarkovPolicy {
    /// Builds a policy from rows `mu[t][x]`, checked against `m`.
    pub fn new(m: &FiniteModel, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.len() != m.horizon() {
            return Err(Error::ShapeMismatch(format!(
                "policy has {} stages, model horizon is {}",
                rows.len(),
                m.horizon()
            )));
        }
        if let Some((t, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != m.num_states()) {
            return Err(Error::ShapeMismatch(format!(
                "policy stage {t} has {} entries, model has {} states",
                row.len(),
                m.num_states()
            )));
        }
        Self::from_flat(m, rows.into_iter().flatten().collect())
    }

    /// Builds a policy from a flat `[t][x]` action table.
    pub fn from_flat(m: &FiniteModel, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != m.horizon() * m.num_states() {
            return Err(Error::ShapeMismatch(format!(
                "policy table has {} entries, expected {}",
                actions.len(),
                m.horizon() * m.num_states()
            )));
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= m.num_actions()) {
            return Err(Error::ActionOutOfRange { action: a, actions: m.num_actions() });
        }
        Ok(MarkovPolicy { horizon: m.horizon(), num_states: m.num_states(), actions })
    }

    /// The policy choosing `action` everywhere.
    pub fn constant(m: &FiniteModel, action: usize) -> Result<Self> {
        Self::from_flat(m, vec![action; m.horizon() * m.num_states()])
    }

    pub(crate) fn from_flat_unchecked(horizon: usize, num_states: usize, actions: Vec<usize>) -> Self {
        MarkovPolicy { horizon, num_states, actions }
    }

    #[inline]
    pub fn action(&self, t: usize, x: usize) -> usize {
        self.actions[t * self.num_states + x]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Flattened `[t][x]` action table.
    pub fn as_flat(&self) -> &[usize] {
        &self.actions
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.actions.chunks(self.num_states.max(1))
    }

    /// Errors unless this policy's shape and actions fit `m`.
    pub fn check_for(&self, m: &FiniteModel) -> Result<()> {
        if self.horizon != m.horizon() || self.num_states != m.num_states() {
            return Err(Error::ShapeMismatch(format!(
                "policy is {}x{}, model is {}x{}",
                self.horizon,
                self.num_states,
                m.horizon(),
                m.num_states()
            )));
        }
        match self.actions.iter().find(|&&a| a >= m.num_actions()) {
            Some(&a) => Err(Error::ActionOutOfRange { action: a, actions: m.num_actions() }),
            None => Ok(()),
        }
    }
}

/// A realized trajectory `(x_0, u_0, …, x_{N−1}, u_{N−1}, x_N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trajectory {
    seq: Vec<usize>,
}

impl Trajectory {
    /// From the interleaved sequence; its length must be odd.
    pub fn from_interleaved(seq: Vec<usize>) -> Result<Self> {
        if seq.len().is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!(
                "trajectory length {} is not of the form 2N+1",
                seq.len()
            )));
        }
        Ok(Trajectory { seq })
    }

    /// From `N+1` states and `N` actions.
    pub fn new(states: &[usize], actions: &[usize]) -> Result<Self> {
        if states.len() != actions.len() + 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} states and {} actions do not form a trajectory",
                states.len(),
                actions.len()
            )));
        }
        let mut seq = Vec::with_capacity(states.len() + actions.len());
        for (x, u) in states.iter().zip(actions) {
            seq.push(*x);
            seq.push(*u);
        }
        seq.push(states[states.len() - 1]);
        Ok(Trajectory { seq })
    }

    pub(crate) fn from_interleaved_unchecked(seq: Vec<usize>) -> Self {
        Trajectory { seq }
    }

    pub fn horizon(&self) -> usize {
        self.seq.len() / 2
    }

    #[inline]
    pub fn state(&self, t: usize) -> usize {
        self.seq[2 * t]
    }

    #[inline]
    pub fn action(&self, t: usize) -> usize {
        self.seq[2 * t + 1]
    }

    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.seq.iter().step_by(2).copied()
    }

    pub fn as_interleaved(&self) -> &[usize] {
        &self.seq
    }

    fn check_for(&self, m: &FiniteModel) -> Result<()> {
        if self.horizon() != m.horizon() {
            return Err(Error::ShapeMismatch(format!(
                "trajectory has {} stages, model horizon is {}",
                self.horizon(),
                m.horizon()
            )));
        }
        for (i, &v) in self.seq.iter().enumerate() {
            if i % 2 == 0 {
                m.check_state(v)?;
            } else if v >= m.num_actions() {
                return Err(Error::ActionOutOfRange { action: v, actions: m.num_actions() });
            }
        }
        Ok(())
    }
}

/// Next-state law `q[t][x][u][x']` induced by pushing the disturbance law
/// through the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    q: Vec<f64>,
}

impl TransitionKernel {
    /// `q[t][x][u][·]`.
    pub fn row(&self, t: usize, x: usize, u: usize) -> &[f64] {
        let start = ((t * self.num_states + x) * self.num_actions + u) * self.num_states;
        &self.q[start..start + self.num_states]
    }

    pub fn prob(&self, t: usize, x: usize, u: usize, next: usize) -> f64 {
        self.row(t, x, u)[next]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Computes `q[t][x][u][x'] = Σ_{w : f[t][x][u][w] = x'} p[t][x][u][w]`,
/// accumulating disturbances in ascending index order.
pub fn pushforward(m: &FiniteModel) -> TransitionKernel {
    let (n, ns, na, _) = m.dims();
    let mut q = vec![0.0; n * ns * na * ns];
    for t in 0..n {
        for x in 0..ns {
            for u in 0..na {
                let base = ((t * ns + x) * na + u) * ns;
                for (&next, &p) in m.successors(t, x, u).iter().zip(m.kernel_row(t, x, u)) {
                    q[base + next] += p;
                }
            }
        }
    }
    TransitionKernel { horizon: n, num_states: ns, num_actions: na, q }
}

/// Total cost `Σ_t c[t][x_t][u_t] + cN[x_N]` of a trajectory.
///
/// Equal bitwise to `cost_to_go(m, traj, 0)`.
pub fn trajectory_cost(m: &FiniteModel, traj: &Trajectory) -> Result<f64> {
    cost_to_go(m, traj, 0)
}

/// Cost-to-go `Z_t = cN[x_N] + Σ_{i=t}^{N−1} c[i][x_i][u_i]`.
///
/// Accumulated backward from the terminal cost, so `Z_t == c[t] + Z_{t+1}`
/// holds bitwise for every `t < N`.
pub fn cost_to_go(m: &FiniteModel, traj: &Trajectory, t: usize) -> Result<f64> {
    traj.check_for(m)?;
    let n = m.horizon();
    if t > n {
        return Err(Error::StageOutOfRange { stage: t, horizon: n });
    }
    Ok(cost_to_go_unchecked(m, traj.as_interleaved(), t))
}

pub(crate) fn cost_to_go_unchecked(m: &FiniteModel, seq: &[usize], t: usize) -> f64 {
    let n = seq.len() / 2;
    let mut z = m.terminal_cost(seq[2 * n]);
    for i in (t..n).rev() {
        z += m.stage_cost(i, seq[2 * i], seq[2 * i + 1]);
    }
    z
}
