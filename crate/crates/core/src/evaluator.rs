//! Evaluation of a fixed Markov policy.
//!
//! Exact routes:
//! * [`trajectory_distribution`] enumerates the finite support of the
//!   trajectory law started at `x0`, and [`cost_law`] pushes it through the
//!   trajectory cost;
//! * [`w_tables`] runs the conditional recursion
//!   `W_t(x) = e^{(−θ/2) c_t(x, μ_t(x))} · Σ_w p · W_{t+1}(f_t(x, μ_t(x), w))`
//!   with `W_N = e^{(−θ/2) cN}`, kept in log-space.
//!
//! [`simulate`] and [`monte_carlo_risk`] draw trajectories with a seeded
//! ChaCha20 generator (`rand_chacha`, seeded through
//! `SeedableRng::seed_from_u64`). Each disturbance is drawn by inverse CDF over
//! ascending disturbance index from one uniform in `[0, 1)` built from the top
//! 53 bits of `next_u64`, so runs are bitwise reproducible.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::instances::unit_f64;
use crate::math::{exp, shifted_log_sum_exp, sqrt};
use crate::model::{cost_to_go_unchecked, FiniteModel, MarkovPolicy, Trajectory};
use crate::risk::{CostDistribution, RiskParam};

/// Default maximum number of enumerated trajectories.
pub const DEFAULT_LEAF_CAP: u64 = 1_000_000;

/// Cost atoms closer than this are merged by [`cost_law`].
pub const ATOM_MERGE_TOLERANCE: f64 = 1e-12;

/// The finite support of the trajectory law under a policy, with probabilities.
///
/// Entries are distinct and listed in lexicographic order of their index
/// sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDistribution {
    pub entries: Vec<(Trajectory, f64)>,
}

impl TrajectoryDistribution {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Walks the policy's trajectory tree from `(t0, x)`, merging disturbances
/// that lead to the same successor. `visit` receives the interleaved sequence
/// `(x_t0, u_t0, …, x_N)` and its probability at every leaf.
fn enumerate_subtree(
    m: &FiniteModel,
    pi: &MarkovPolicy,
    t0: usize,
    x: usize,
    cap: u64,
    visit: &mut dyn FnMut(&[usize], f64),
) -> Result<()> {
    struct Walk<'a> {
        m: &'a FiniteModel,
        pi: &'a MarkovPolicy,
        cap: u64,
        leaves: u64,
        seq: Vec<usize>,
    }

    impl Walk<'_> {
        fn go(&mut self, t: usize, x: usize, prob: f64, visit: &mut dyn FnMut(&[usize], f64)) -> Result<()> {
            self.seq.push(x);
            if t == self.m.horizon() {
                self.leaves += 1;
                if self.leaves > self.cap {
                    return Err(Error::CapExceeded {
                        what: "trajectory leaves",
                        required: u128::from(self.leaves),
                        cap: self.cap,
                    });
                }
                visit(&self.seq, prob);
            } else {
                let u = self.pi.action(t, x);
                self.seq.push(u);
                for (next, p) in merged_successors(self.m, t, x, u) {
                    self.go(t + 1, next, prob * p, visit)?;
                }
                self.seq.pop();
            }
            self.seq.pop();
            Ok(())
        }
    }

    let mut walk = Walk { m, pi, cap, leaves: 0, seq: Vec::with_capacity(2 * m.horizon() + 1) };
    walk.go(t0, x, 1.0, visit)
}

/// Successor states with positive probability, ascending, duplicates merged
/// (probabilities summed in ascending disturbance order).
fn merged_successors(m: &FiniteModel, t: usize, x: usize, u: usize) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (&next, &p) in m.successors(t, x, u).iter().zip(m.kernel_row(t, x, u)) {
        if p <= 0.0 {
            continue;
        }
        match out.binary_search_by_key(&next, |e| e.0) {
            Ok(i) => out[i].1 += p,
            Err(i) => out.insert(i, (next, p)),
        }
    }
    out
}

fn check_inputs(m: &FiniteModel, pi: &MarkovPolicy, x0: usize) -> Result<()> {
    pi.check_for(m)?;
    m.check_state(x0)
}

/// Enumerates every trajectory with positive probability from `x0` under `pi`.
///
/// Fails with [`Error::CapExceeded`] once more than `leaf_cap` trajectories
/// would be produced.
pub fn trajectory_distribution(
    m: &FiniteModel,
    pi: &MarkovPolicy,
    x0: usize,
    leaf_cap: u64,
) -> Result<TrajectoryDistribution> {
    check_inputs(m, pi, x0)?;
    let mut entries = Vec::new();
    enumerate_subtree(m, pi, 0, x0, leaf_cap, &mut |seq, p| {
        entries.push((Trajectory::from_interleaved_unchecked(seq.to_vec()), p));
    })?;
    Ok(TrajectoryDistribution { entries })
}

/// Sorts atoms by value and merges neighbours within [`ATOM_MERGE_TOLERANCE`]
/// of the first value of their group.
fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> CostDistribution {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match out.last_mut() {
            Some(last) if v - last.0 <= ATOM_MERGE_TOLERANCE => last.1 += p,
            _ => out.push((v, p)),
        }
    }
    CostDistribution::from_enumeration(out)
}

/// Law of the total cost `Z` from `x0` under `pi`.
pub fn cost_law(m: &FiniteModel, pi: &MarkovPolicy, x0: usize, leaf_cap: u64) -> Result<CostDistribution> {
    let dist = trajectory_distribution(m, pi, x0, leaf_cap)?;
    let atoms = dist
        .entries
        .iter()
        .map(|(traj, p)| (cost_to_go_unchecked(m, traj.as_interleaved(), 0), *p))
        .collect();
    Ok(merge_atoms(atoms))
}

/// Law of the cost-to-go `Z_t` given `X_t = x`, by enumerating the sub-tree
/// rooted at `(t, x)`.
pub fn conditional_cost_law(
    m: &FiniteModel,
    pi: &MarkovPolicy,
    t: usize,
    x: usize,
    leaf_cap: u64,
) -> Result<CostDistribution> {
    check_inputs(m, pi, x)?;
    if t > m.horizon() {
        return Err(Error::StageOutOfRange { stage: t, horizon: m.horizon() });
    }
    let mut atoms = Vec::new();
    enumerate_subtree(m, pi, t, x, leaf_cap, &mut |seq, p| {
        let mut z = m.terminal_cost(seq[seq.len() - 1]);
        for i in (0..seq.len() / 2).rev() {
            z += m.stage_cost(t + i, seq[2 * i], seq[2 * i + 1]);
        }
        atoms.push((z, p));
    })?;
    Ok(merge_atoms(atoms))
}

/// `reachable[t][x]`: whether `X_t = x` has positive probability from `x0`.
pub fn reachable_states(m: &FiniteModel, pi: &MarkovPolicy, x0: usize) -> Result<Vec<Vec<bool>>> {
    check_inputs(m, pi, x0)?;
    let ns = m.num_states();
    let mut out = vec![vec![false; ns]; m.horizon() + 1];
    out[0][x0] = true;
    for t in 0..m.horizon() {
        for x in 0..ns {
            if !out[t][x] {
                continue;
            }
            let u = pi.action(t, x);
            for (&next, &p) in m.successors(t, x, u).iter().zip(m.kernel_row(t, x, u)) {
                if p > 0.0 {
                    out[t + 1][next] = true;
                }
            }
        }
    }
    Ok(out)
}

/// Conditional exponential moments `W_t(x) = E[e^{(−θ/2) Z_t} | X_t = x]`
/// under a fixed policy, for every stage and state.
///
/// Stored as certainty equivalents `(−2/θ) · ln W_t(x)`, which stay finite
/// where `W` itself would overflow.
#[derive(Debug, Clone, PartialEq)]
pub struct WTables {
    theta: RiskParam,
    num_states: usize,
    ce: Vec<f64>,
}

impl WTables {
    /// `W_t(x)`; may overflow to infinity for very large `|θ| · cost`.
    pub fn w(&self, t: usize, x: usize) -> f64 {
        exp(self.log_w(t, x))
    }

    pub fn log_w(&self, t: usize, x: usize) -> f64 {
        self.theta.scale() * self.certainty_equivalent(t, x)
    }

    /// `(−2/θ) · ln W_t(x)`.
    pub fn certainty_equivalent(&self, t: usize, x: usize) -> f64 {
        self.ce[t * self.num_states + x]
    }

    pub fn theta(&self) -> RiskParam {
        self.theta
    }
}

/// Runs the `W` recursion for `pi` over all stages and states.
///
/// Entries for states unreachable from a given start are still computed.
pub fn w_tables(m: &FiniteModel, pi: &MarkovPolicy, rp: RiskParam) -> Result<WTables> {
    pi.check_for(m)?;
    let (n, ns) = (m.horizon(), m.num_states());
    let scale = rp.scale();
    let mut ce = vec![0.0; (n + 1) * ns];
    ce[n * ns..].copy_from_slice(m.terminal_costs());
    for t in (0..n).rev() {
        let (head, tail) = ce.split_at_mut((t + 1) * ns);
        let next = &tail[..ns];
        for (x, slot) in head[t * ns..].iter_mut().enumerate() {
            let u = pi.action(t, x);
            *slot = m.stage_cost(t, x, u) + certainty_step(m, t, x, u, next, scale);
        }
    }
    Ok(WTables { theta: rp, num_states: ns, ce })
}

/// `(1/s) · ln Σ_w p · e^{s · next[f(t,x,u,w)]}` with max-shift over the support.
/// The solver evaluates the same expression for every action.
#[inline]
pub(crate) fn certainty_step(m: &FiniteModel, t: usize, x: usize, u: usize, next: &[f64], scale: f64) -> f64 {
    let atoms = m.successors(t, x, u).iter().zip(m.kernel_row(t, x, u)).map(|(&y, &p)| (next[y], p));
    let (shift, log_sum) = shifted_log_sum_exp(atoms, scale).expect("kernel row has positive mass");
    shift + log_sum / scale
}

/// Exponential-utility cost `(−2/θ) · ln E[e^{(−θ/2) Z}]` of `pi` from `x0`.
pub fn evaluate_policy(m: &FiniteModel, pi: &MarkovPolicy, rp: RiskParam, x0: usize) -> Result<f64> {
    check_inputs(m, pi, x0)?;
    Ok(w_tables(m, pi, rp)?.certainty_equivalent(0, x0))
}

/// Expected total cost `E[Z]` of `pi` from `x0`.
pub fn expected_cost(m: &FiniteModel, pi: &MarkovPolicy, x0: usize) -> Result<f64> {
    check_inputs(m, pi, x0)?;
    let (n, ns) = (m.horizon(), m.num_states());
    let mut next = m.terminal_costs().to_vec();
    let mut cur = vec![0.0; ns];
    for t in (0..n).rev() {
        for (x, slot) in cur.iter_mut().enumerate() {
            let u = pi.action(t, x);
            let mut acc = 0.0;
            for (&y, &p) in m.successors(t, x, u).iter().zip(m.kernel_row(t, x, u)) {
                if p > 0.0 {
                    acc += p * next[y];
                }
            }
            *slot = m.stage_cost(t, x, u) + acc;
        }
        core::mem::swap(&mut cur, &mut next);
    }
    Ok(next[x0])
}

/// Infinite stream of simulated trajectories from `x0` under `pi`.
pub struct Simulator<'a> {
    model: &'a FiniteModel,
    policy: &'a MarkovPolicy,
    x0: usize,
    rng: ChaCha20Rng,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a FiniteModel, policy: &'a MarkovPolicy, x0: usize, seed: u64) -> Result<Self> {
        check_inputs(model, policy, x0)?;
        Ok(Simulator { model, policy, x0, rng: ChaCha20Rng::seed_from_u64(seed) })
    }

    fn draw(&mut self, t: usize, x: usize, u: usize) -> usize {
        let probs = self.model.kernel_row(t, x, u);
        let r = unit_f64(&mut self.rng);
        let mut cum = 0.0;
        let mut last_positive = 0;
        for (w, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = w;
                cum += p;
                if r < cum {
                    return w;
                }
            }
        }
        // Row sums just below one leave a sliver; it belongs to the last atom.
        last_positive
    }

    /// Draws one trajectory into `seq` (interleaved, cleared first).
    pub fn fill(&mut self, seq: &mut Vec<usize>) {
        seq.clear();
        let mut x = self.x0;
        for t in 0..self.model.horizon() {
            let u = self.policy.action(t, x);
            seq.push(x);
            seq.push(u);
            let w = self.draw(t, x, u);
            x = self.model.next_state(t, x, u, w);
        }
        seq.push(x);
    }
}

impl Iterator for Simulator<'_> {
    type Item = Trajectory;

    fn next(&mut self) -> Option<Trajectory> {
        let mut seq = Vec::with_capacity(2 * self.model.horizon() + 1);
        self.fill(&mut seq);
        Some(Trajectory::from_interleaved_unchecked(seq))
    }
}

/// `trials` simulated trajectories, reproducible given `seed`.
pub fn simulate(m: &FiniteModel, pi: &MarkovPolicy, x0: usize, seed: u64, trials: usize) -> Result<Vec<Trajectory>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(Simulator::new(m, pi, x0, seed)?.take(trials).collect())
}

/// Monte Carlo estimate of the policy's exponential-utility cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    /// `(−2/θ) · ln m̂` with `m̂` the sample mean of `e^{(−θ/2) Z_i}`.
    pub estimate: f64,
    /// Delta-method standard error `(−2/θ) · s / (m̂ · √n)`.
    pub stderr: f64,
    pub trials: usize,
}

/// Estimates `(−2/θ) · ln E[e^{(−θ/2) Z}]` from `trials ≥ 2` simulated costs.
/// Exponentials are shifted by the largest sampled cost.
pub fn monte_carlo_risk(
    m: &FiniteModel,
    pi: &MarkovPolicy,
    rp: RiskParam,
    x0: usize,
    seed: u64,
    trials: usize,
) -> Result<MonteCarloEstimate> {
    if trials < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least 2 trials".into()));
    }
    let mut sim = Simulator::new(m, pi, x0, seed)?;
    let mut seq = Vec::with_capacity(2 * m.horizon() + 1);
    let costs: Vec<f64> = (0..trials)
        .map(|_| {
            sim.fill(&mut seq);
            cost_to_go_unchecked(m, &seq, 0)
        })
        .collect();
    let scale = rp.scale();
    let shift = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = trials as f64;
    let terms: Vec<f64> = costs.iter().map(|&z| exp(scale * (z - shift))).collect();
    let mean = terms.iter().sum::<f64>() / n;
    let var = terms.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloEstimate {
        estimate: shift + crate::math::ln(mean) / scale,
        stderr: sqrt(var) / (mean * sqrt(n)) / scale,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{flip_instance, random_model};
    use crate::model::trajectory_cost;
    use crate::risk::{entropic_risk, expectation};
    use crate::solver::solve_exputil;
    use alloc::string::ToString;
    use alloc::vec;

    fn rp(theta: f64) -> RiskParam {
        RiskParam::new(theta).unwrap()
    }

    fn policy_a() -> (FiniteModel, MarkovPolicy) {
        let m = flip_instance();
        let pi = MarkovPolicy::constant(&m, 0).unwrap();
        (m, pi)
    }

    #[test]
    fn deterministic_kernel_single_trajectory() {
        let m = random_model(1, 3, 3, 2, 1, |c| c);
        let pi = MarkovPolicy::constant(&m, 1).unwrap();
        let d = trajectory_distribution(&m, &pi, 2, DEFAULT_LEAF_CAP).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.entries[0].1, 1.0);
        let z = trajectory_cost(&m, &d.entries[0].0).unwrap();
        for theta in [-0.1, -1.0, -7.0] {
            assert!((evaluate_policy(&m, &pi, rp(theta), 2).unwrap() - z).abs() < 1e-12);
        }
    }

    #[test]
    fn single_stage_product_law() {
        let (m, pi) = policy_a();
        let d = trajectory_distribution(&m, &pi, 0, DEFAULT_LEAF_CAP).unwrap();
        let got: Vec<_> = d.entries.iter().map(|(t, p)| (t.as_interleaved().to_vec(), *p)).collect();
        assert_eq!(got, vec![(vec![0, 0, 1], 0.9), (vec![0, 0, 2], 0.1)]);
    }

    #[test]
    fn two_stage_products() {
        // x' = w at every stage, p depends on t only.
        let rows = [[0.3, 0.7], [0.6, 0.4]];
        let m = FiniteModel::from_fn(2, 2, 1, 2, |t, _, _, w| (w, rows[t][w]), |_, _, _| 0.0, |_| 0.0).unwrap();
        let pi = MarkovPolicy::constant(&m, 0).unwrap();
        let d = trajectory_distribution(&m, &pi, 0, DEFAULT_LEAF_CAP).unwrap();
        assert_eq!(d.len(), 4);
        for (traj, p) in &d.entries {
            let expected = rows[0][traj.state(1)] * rows[1][traj.state(2)];
            assert_eq!(*p, expected);
        }
        assert!((d.total_probability() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicates_are_merged() {
        let m = FiniteModel::from_fn(1, 2, 1, 3, |_, _, _, w| ([1, 0, 1][w], [0.2, 0.5, 0.3][w]), |_, _, _| 0.0, |_| 0.0)
            .unwrap();
        let pi = MarkovPolicy::constant(&m, 0).unwrap();
        let d = trajectory_distribution(&m, &pi, 0, DEFAULT_LEAF_CAP).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.entries[1].1, 0.5);
    }

    #[test]
    fn leaf_cap_is_enforced() {
        let m = random_model(2, 3, 3, 1, 3, |c| c);
        let pi = MarkovPolicy::constant(&m, 0).unwrap();
        let err = trajectory_distribution(&m, &pi, 0, 2).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { cap: 2, .. }));
        assert!(err.to_string().contains("too large for exact enumeration"));
    }

    #[test]
    fn flip_cost_law_and_w() {
        let (m, pi) = policy_a();
        let law = cost_law(&m, &pi, 0, DEFAULT_LEAF_CAP).unwrap();
        assert_eq!(law.atoms(), &[(0.0, 0.9), (10.0, 0.1)]);
        assert!((entropic_risk(&law, rp(-1.0)) - 5.512_577_684_867_173).abs() < 1e-12);

        let w = w_tables(&m, &pi, rp(-1.0)).unwrap();
        assert!((w.w(0, 0) - 15.741_315_910_257_66).abs() < 1e-11);
        assert!((evaluate_policy(&m, &pi, rp(-1.0), 0).unwrap() - 5.512_577_684_867_173).abs() < 1e-12);
        let b = MarkovPolicy::constant(&m, 1).unwrap();
        assert_eq!(evaluate_policy(&m, &b, rp(-1.0), 0).unwrap(), 2.0);
        assert!((expected_cost(&m, &pi, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_costs() {
        let m = random_model(4, 3, 3, 2, 3, |_| 0.0);
        let pi = MarkovPolicy::constant(&m, 1).unwrap();
        assert_eq!(cost_law(&m, &pi, 0, DEFAULT_LEAF_CAP).unwrap().atoms(), &[(0.0, 1.0)]);
        let w = w_tables(&m, &pi, rp(-2.0)).unwrap();
        for t in 0..=3 {
            for x in 0..3 {
                assert_eq!(w.w(t, x), 1.0);
            }
        }
    }

    #[test]
    fn recursion_matches_enumeration() {
        for seed in 0..40 {
            let m = random_model(seed, 3, 3, 3, 3, |c| c);
            let pi = MarkovPolicy::from_flat(&m, (0..9).map(|i| (i + seed as usize) % 3).collect()).unwrap();
            for theta in [-0.1, -1.0, -5.0] {
                let w = w_tables(&m, &pi, rp(theta)).unwrap();
                let reach = reachable_states(&m, &pi, 0).unwrap();
                for t in 0..=3 {
                    for x in (0..3).filter(|&x| reach[t][x]) {
                        let law = conditional_cost_law(&m, &pi, t, x, DEFAULT_LEAF_CAP).unwrap();
                        assert!((w.certainty_equivalent(t, x) - entropic_risk(&law, rp(theta))).abs() < 1e-9);
                    }
                }
                let law = cost_law(&m, &pi, 0, DEFAULT_LEAF_CAP).unwrap();
                assert!((evaluate_policy(&m, &pi, rp(theta), 0).unwrap() - entropic_risk(&law, rp(theta))).abs() < 1e-9);
                assert!((expected_cost(&m, &pi, 0).unwrap() - expectation(&law)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trajectories_follow_policy_and_sum_to_one() {
        for seed in 0..20 {
            let m = random_model(seed, 3, 3, 2, 3, |c| c);
            let pi = MarkovPolicy::from_flat(&m, (0..9).map(|i| (i * 7 + seed as usize) % 2).collect()).unwrap();
            let d = trajectory_distribution(&m, &pi, 1, DEFAULT_LEAF_CAP).unwrap();
            assert!((d.total_probability() - 1.0).abs() < 1e-10);
            for (traj, p) in &d.entries {
                assert!(*p > 0.0);
                for t in 0..3 {
                    assert_eq!(traj.action(t), pi.action(t, traj.state(t)));
                }
            }
            for w in d.entries.windows(2) {
                assert!(w[0].0 < w[1].0);
            }
        }
    }

    #[test]
    fn dp_policy_value_matches_solver() {
        for seed in 0..30 {
            let m = random_model(seed, 3, 3, 2, 3, |c| c);
            let res = solve_exputil(&m, rp(-1.3));
            for x0 in 0..3 {
                let v = evaluate_policy(&m, &res.policy, rp(-1.3), x0).unwrap();
                assert!((v - res.values.get(0, x0)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn subtree_input_checks() {
        let (m, pi) = policy_a();
        assert!(matches!(conditional_cost_law(&m, &pi, 2, 0, 10), Err(Error::StageOutOfRange { .. })));
        assert!(matches!(evaluate_policy(&m, &pi, rp(-1.0), 4), Err(Error::StateOutOfRange { .. })));
        let other = random_model(0, 2, 4, 2, 2, |c| c);
        let wrong = MarkovPolicy::constant(&other, 0).unwrap();
        assert!(matches!(w_tables(&m, &wrong, rp(-1.0)), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn simulation_deterministic_kernel() {
        let m = random_model(9, 3, 3, 2, 1, |c| c);
        let pi = MarkovPolicy::constant(&m, 0).unwrap();
        let exact = trajectory_distribution(&m, &pi, 0, 10).unwrap();
        let sims = simulate(&m, &pi, 0, 5, 50).unwrap();
        assert!(sims.iter().all(|t| *t == exact.entries[0].0));
        let mc = monte_carlo_risk(&m, &pi, rp(-1.0), 0, 5, 100).unwrap();
        assert_eq!(mc.stderr, 0.0);
        assert!((mc.estimate - trajectory_cost(&m, &exact.entries[0].0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn simulation_is_reproducible() {
        let m = random_model(3, 3, 3, 2, 3, |c| c);
        let pi = MarkovPolicy::constant(&m, 1).unwrap();
        assert_eq!(simulate(&m, &pi, 0, 42, 500).unwrap(), simulate(&m, &pi, 0, 42, 500).unwrap());
        assert_ne!(simulate(&m, &pi, 0, 42, 500).unwrap(), simulate(&m, &pi, 0, 43, 500).unwrap());
        let a = monte_carlo_risk(&m, &pi, rp(-1.0), 0, 7, 1000).unwrap();
        let b = monte_carlo_risk(&m, &pi, rp(-1.0), 0, 7, 1000).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn branch_frequency_concentrates() {
        let m = FiniteModel::from_fn(1, 2, 1, 2, |_, _, _, w| (w, 0.5), |_, _, _| 0.0, |_| 0.0).unwrap();
        let pi = MarkovPolicy::constant(&m, 0).unwrap();
        let sims = simulate(&m, &pi, 0, 42, 100_000).unwrap();
        let ones = sims.iter().filter(|t| t.state(1) == 1).count() as f64;
        // 0.01 is ~6.3 binomial standard deviations at n = 1e5.
        assert!((ones / 1e5 - 0.5).abs() < 0.01);
    }

    #[test]
    fn monte_carlo_flip_instance() {
        let (m, pi) = policy_a();
        let mc = monte_carlo_risk(&m, &pi, rp(-1.0), 0, 42, 100_000).unwrap();
        assert!((mc.estimate - 5.512_577_684_867_173).abs() <= 3.0 * mc.stderr, "{mc:?}");
        assert!(mc.stderr > 0.0);
    }

    #[test]
    fn monte_carlo_stderr_scales_as_root_n() {
        let (m, pi) = policy_a();
        let n = 20_000;
        let mut ratio_sum = 0.0;
        for seed in 0..10 {
            let small = monte_carlo_risk(&m, &pi, rp(-1.0), 0, seed, n).unwrap();
            let large = monte_carlo_risk(&m, &pi, rp(-1.0), 0, 1000 + seed, 4 * n).unwrap();
            ratio_sum += large.stderr / small.stderr;
        }
        let ratio = ratio_sum / 10.0;
        assert!((ratio - 0.5).abs() <= 0.15, "ratio {ratio}");
    }

    #[test]
    fn argument_checks() {
        let (m, pi) = policy_a();
        assert!(matches!(simulate(&m, &pi, 0, 1, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(monte_carlo_risk(&m, &pi, rp(-1.0), 0, 1, 1), Err(Error::InvalidArgument(_))));
    }
}
