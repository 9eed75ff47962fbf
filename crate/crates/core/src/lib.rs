//! Finite-horizon Markov decision processes under an exponential-utility
//! (entropic risk) criterion.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`model`]: the finite controlled Markov model, its validation, the
//!   pushforward next-state kernel and trajectory cost primitives;
//! * [`risk`]: the entropic risk functional on finite cost distributions;
//! * [`solver`]: risk-averse backward induction, the risk-neutral baseline
//!   and risk-parameter sweeps;
//! * [`evaluator`]: exact and Monte Carlo evaluation of a fixed policy;
//! * [`oracle`]: brute-force enumeration of Markov and history-dependent
//!   policies on tiny instances;
//! * [`instances`]: small reference and seeded random instances;
//! * [`discretizer`]: grid approximations of a 1-D affine Gaussian model with
//!   quadratic costs.
//!
//! Everything is computed in ascending index order so results are bitwise
//! reproducible.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod discretizer;
pub mod evaluator;
pub mod instances;
pub mod model;
pub mod oracle;
pub mod risk;
pub mod solver;

pub use error::{Error, Result};
pub use evaluator::{
    conditional_cost_law, cost_law, evaluate_policy, expected_cost, monte_carlo_risk,
    reachable_states, simulate, trajectory_distribution, w_tables, MonteCarloEstimate, Simulator,
    TrajectoryDistribution, WTables, DEFAULT_LEAF_CAP,
};
pub use model::{
    cost_to_go, pushforward, trajectory_cost, validate_model, FiniteModel, MarkovPolicy,
    ModelTables, Trajectory, TransitionKernel, ValidationReport, Violation,
};
pub use oracle::{
    brute_force_history, brute_force_markov, certify, Caps, Certificate, HistoryOptimum,
    HistoryPolicy, MarkovOptimum,
};
pub use risk::{entropic_risk, expectation, mean_variance_approx, CostDistribution, RiskParam};
pub use solver::{
    solve_exputil, solve_exputil_with, solve_risk_neutral, solve_risk_neutral_with, theta_sweep,
    Objective, SolveOptions, SolveResult, SweepRow, ValueTables,
};
