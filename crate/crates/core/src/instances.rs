//! Reference and seeded random instances used by tests and examples.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::model::FiniteModel;

/// One-stage instance where risk aversion flips the optimal action.
///
/// States `s0..s3`, actions `a`, `b`, two disturbances, zero stage costs and
/// terminal costs `[0, 0, 10, 2]`. From `s0`, action `a` reaches `s1` w.p. 0.9
/// and `s2` w.p. 0.1; action `b` reaches `s3` surely. Other states self-loop.
/// Risk-neutral optimum: `a` (cost 1). At `θ = −1`: `b` (cost 2), since
/// `2·ln(0.9 + 0.1·e^5) ≈ 5.513`.
pub fn flip_instance() -> FiniteModel {
    let mut tables = FiniteModel::from_fn(
        1,
        4,
        2,
        2,
        |_, x, u, w| match (x, u) {
            (0, 0) => ([1, 2][w], [0.9, 0.1][w]),
            (0, _) => (3, [1.0, 0.0][w]),
            (x, _) => (x, [1.0, 0.0][w]),
        },
        |_, _, _| 0.0,
        |x| [0.0, 0.0, 10.0, 2.0][x],
    )
    .expect("flip instance is valid")
    .to_tables();
    tables.actions = vec!["a".into(), "b".into()];
    FiniteModel::new(tables).expect("flip instance is valid")
}

/// Uniform draw in `[0, 1)` from the top 53 bits of a `u64`.
#[inline]
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seeded random model with uniform dynamics, random kernel rows (some
/// entries zero, never a whole row) and costs drawn uniformly from `[0, 10)`
/// then passed through `cost_map`.
pub fn random_model(
    seed: u64,
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    num_disturbances: usize,
    cost_map: impl Fn(f64) -> f64,
) -> FiniteModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = horizon * num_states * num_actions;
    let mut succ = Vec::with_capacity(rows * num_disturbances);
    let mut probs = Vec::with_capacity(rows * num_disturbances);
    for _ in 0..rows {
        let mut weights: Vec<f64> = (0..num_disturbances)
            .map(|_| if unit_f64(&mut rng) < 0.2 { 0.0 } else { 0.05 + unit_f64(&mut rng) })
            .collect();
        if weights.iter().all(|&w| w == 0.0) {
            weights[(rng.next_u64() % num_disturbances as u64) as usize] = 1.0;
        }
        let total: f64 = weights.iter().sum();
        for w in weights {
            succ.push((rng.next_u64() % num_states as u64) as usize);
            probs.push(w / total);
        }
    }
    let costs: Vec<f64> = (0..rows).map(|_| cost_map(10.0 * unit_f64(&mut rng))).collect();
    let terminal: Vec<f64> = (0..num_states).map(|_| cost_map(10.0 * unit_f64(&mut rng))).collect();
    let idx = |t: usize, x: usize, u: usize| (t * num_states + x) * num_actions + u;
    FiniteModel::from_fn(
        horizon,
        num_states,
        num_actions,
        num_disturbances,
        |t, x, u, w| {
            let i = idx(t, x, u) * num_disturbances + w;
            (succ[i], probs[i])
        },
        |t, x, u| costs[idx(t, x, u)],
        |x| terminal[x],
    )
    .expect("random model is valid")
}
