//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input (files, flags,
//! models, policies), 3 certification failure, 4 enumeration cap exceeded.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use riskmdp_core::discretizer::discretize;
use riskmdp_core::{
    certify, cost_to_go, evaluate_policy, expected_cost, monte_carlo_risk, simulate, solve_exputil,
    solve_risk_neutral, theta_sweep, Caps, FiniteModel, RiskParam,
};

use crate::error::{exit, CliError, Result};
use crate::io;

#[derive(Debug, Parser)]
#[command(name = "riskmdp", version, about = "Finite-horizon MDPs under exponential utility")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Backward induction; writes values.csv and policy.csv.
    Solve(SolveArgs),
    /// Exact value of a given policy, optionally with a Monte Carlo estimate.
    Evaluate(EvaluateArgs),
    /// Compare backward induction with brute-force Markov and history optima.
    Certify(CertifyArgs),
    /// Solve for a list of risk parameters; writes sweep.csv.
    Sweep(SweepArgs),
    /// Seeded trajectory sampling; writes trajectories.csv.
    Simulate(SimulateArgs),
    /// Build a model file from a continuous affine1d spec.
    Discretize(DiscretizeArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Rescale kernel rows whose sum is within 1e-9 of one.
    #[arg(long)]
    pub renormalize: bool,
    /// Initial state, by label or index.
    #[arg(long, value_name = "LABEL|INDEX", default_value = "0")]
    pub x0: String,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ObjectiveArgs {
    /// Risk parameter, strictly negative.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Minimize expected cost instead.
    #[arg(long)]
    pub risk_neutral: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Output directory.
    #[arg(long, value_name = "PATH", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_name = "PATH")]
    pub policy: PathBuf,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Add a Monte Carlo estimate (needs --theta, --seed and --trials).
    #[arg(long, requires_all = ["seed", "trials", "theta"])]
    pub mc: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: f64,
    /// Cap on the number of Markov and of history-dependent policies.
    #[arg(long, value_name = "N")]
    pub cap_policies: Option<u64>,
    /// Cap on trajectory-tree leaves per evaluation.
    #[arg(long, value_name = "N")]
    pub cap_leaves: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated, strictly ascending, strictly negative.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub thetas: Vec<f64>,
    /// Output directory.
    #[arg(long, value_name = "PATH", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_name = "PATH")]
    pub policy: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub trials: usize,
    /// Also report the Monte Carlo entropic estimate at this θ.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "PATH", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiscretizeArgs {
    /// Continuous spec (JSON).
    #[arg(long, value_name = "PATH")]
    pub spec: PathBuf,
    /// Model file to write.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

/// Runs one command, printing its report to standard output, and returns
/// the exit code for a completed run.
pub fn run(cli: &Cli) -> Result<i32> {
    let mut report = String::new();
    let code = match &cli.command {
        Command::Solve(a) => solve(a, &mut report)?,
        Command::Evaluate(a) => evaluate(a, &mut report)?,
        Command::Certify(a) => certify_cmd(a, &mut report)?,
        Command::Sweep(a) => sweep(a, &mut report)?,
        Command::Simulate(a) => simulate_cmd(a, &mut report)?,
        Command::Discretize(a) => discretize_cmd(a, &mut report)?,
    };
    print!("{report}");
    Ok(code)
}

/// Writes a failure to standard error, one model violation per line.
pub fn report_error(e: &CliError) {
    match e {
        CliError::Core(riskmdp_core::Error::InvalidModel(r)) => {
            eprintln!("error: invalid model ({} violation(s))", r.violations.len());
            for v in &r.violations {
                eprintln!("  {v}");
            }
        }
        e => eprintln!("error: {e}"),
    }
}

fn load(a: &ModelArgs) -> Result<(FiniteModel, usize)> {
    let m = io::load_model(&a.model, a.renormalize)?;
    let x0 = m
        .find_state(&a.x0)
        .ok_or_else(|| CliError::Usage(format!("unknown initial state {:?}", a.x0)))?;
    Ok((m, x0))
}

fn risk_param(theta: f64) -> Result<RiskParam> {
    Ok(RiskParam::new(theta)?)
}

fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn solve(a: &SolveArgs, out: &mut String) -> Result<i32> {
    let (m, x0) = load(&a.model)?;
    let res = match a.objective.theta {
        Some(theta) => solve_exputil(&m, risk_param(theta)?),
        None => solve_risk_neutral(&m),
    };
    io::write(&out_file(&a.out, "values.csv"), &io::values_csv(&m, &res.values))?;
    io::write(&out_file(&a.out, "policy.csv"), &io::policy_csv(&m, &res.policy))?;
    let _ = writeln!(out, "{}", objective_line(a.objective.theta));
    let _ = writeln!(
        out,
        "V_0({}) = {:?}   action {}",
        m.state_labels()[x0],
        res.values.get(0, x0),
        m.action_labels()[res.policy.action(0, x0)]
    );
    Ok(exit::OK)
}

fn objective_line(theta: Option<f64>) -> String {
    match theta {
        Some(t) => format!("objective: exponential utility, theta = {t:?}"),
        None => "objective: risk-neutral".into(),
    }
}

fn evaluate(a: &EvaluateArgs, out: &mut String) -> Result<i32> {
    let (m, x0) = load(&a.model)?;
    let pi = io::load_policy(&a.policy, &m)?;
    let _ = writeln!(out, "{}", objective_line(a.objective.theta));
    let label = &m.state_labels()[x0];
    match a.objective.theta {
        Some(theta) => {
            let rp = risk_param(theta)?;
            let _ = writeln!(out, "exact value at {label}: {:?}", evaluate_policy(&m, &pi, rp, x0)?);
            if a.mc {
                let (seed, trials) = (a.seed.unwrap_or_default(), a.trials.unwrap_or_default());
                let mc = monte_carlo_risk(&m, &pi, rp, x0, seed, trials)?;
                let _ = writeln!(
                    out,
                    "monte carlo ({trials} trials, seed {seed}): {:?} +/- {:?}",
                    mc.estimate, mc.stderr
                );
            }
        }
        None => {
            let _ = writeln!(out, "exact value at {label}: {:?}", expected_cost(&m, &pi, x0)?);
        }
    }
    Ok(exit::OK)
}

fn certify_cmd(a: &CertifyArgs, out: &mut String) -> Result<i32> {
    let (m, x0) = load(&a.model)?;
    let rp = risk_param(a.theta)?;
    let mut caps = Caps::default();
    if let Some(n) = a.cap_policies {
        caps.markov_policies = n;
        caps.history_policies = n;
    }
    if let Some(n) = a.cap_leaves {
        caps.leaves = n;
    }
    let c = certify(&m, rp, x0, &caps)?;
    let _ = writeln!(out, "x0: {}   theta = {:?}", m.state_labels()[x0], a.theta);
    let _ = writeln!(out, "dynamic programming:  {:?}", c.dp_value);
    let _ = writeln!(out, "markov brute force:   {:?}", c.markov_value);
    let _ = writeln!(out, "history brute force:  {:?}", c.history_value);
    let _ = writeln!(out, "max gap:              {:e}", c.max_gap);
    let _ = writeln!(out, "dp policy in argmin:  {}", if c.dp_policy_in_argmin { "yes" } else { "no" });
    let _ = writeln!(out, "{}", if c.pass { "PASS" } else { "FAIL" });
    Ok(if c.pass { exit::OK } else { exit::CERTIFY_FAIL })
}

fn sweep(a: &SweepArgs, out: &mut String) -> Result<i32> {
    let (m, x0) = load(&a.model)?;
    let thetas = a.thetas.iter().map(|&t| risk_param(t)).collect::<Result<Vec<_>>>()?;
    let rows = theta_sweep(&m, &thetas, x0)?;
    io::write(&out_file(&a.out, "sweep.csv"), &io::sweep_csv(&rows))?;
    for r in &rows {
        let _ = writeln!(
            out,
            "theta = {:?}: V_0({}) = {:?}{}",
            r.theta.theta(),
            m.state_labels()[x0],
            r.value,
            if r.policy_changed { "   (policy changed)" } else { "" }
        );
    }
    Ok(exit::OK)
}

fn simulate_cmd(a: &SimulateArgs, out: &mut String) -> Result<i32> {
    let (m, x0) = load(&a.model)?;
    let pi = io::load_policy(&a.policy, &m)?;
    let rp = a.theta.map(risk_param).transpose()?;
    let trajs = simulate(&m, &pi, x0, a.seed, a.trials)?;
    let ctg = trajs
        .iter()
        .map(|tr| (0..=tr.horizon()).map(|t| cost_to_go(&m, tr, t)).collect::<riskmdp_core::Result<Vec<_>>>())
        .collect::<riskmdp_core::Result<Vec<_>>>()?;
    io::write(&out_file(&a.out, "trajectories.csv"), &io::trajectories_csv(&m, &trajs, &ctg))?;
    let mean = ctg.iter().map(|z| z[0]).sum::<f64>() / ctg.len() as f64;
    let _ = writeln!(out, "{} trials, seed {}: mean cost {:?}", a.trials, a.seed, mean);
    if let Some(rp) = rp {
        let mc = monte_carlo_risk(&m, &pi, rp, x0, a.seed, a.trials)?;
        let _ = writeln!(out, "entropic estimate (theta = {:?}): {:?} +/- {:?}", rp.theta(), mc.estimate, mc.stderr);
    }
    Ok(exit::OK)
}

fn discretize_cmd(a: &DiscretizeArgs, out: &mut String) -> Result<i32> {
    let (spec, grid) = io::load_continuous_spec(&a.spec)?;
    let m = discretize(&spec, &grid)?;
    io::write(&a.out, io::model_to_json(&m).as_bytes())?;
    let _ = writeln!(
        out,
        "{} states, {} actions, {} noise atoms, horizon {} -> {}",
        m.num_states(),
        m.num_actions(),
        m.num_disturbances(),
        m.horizon(),
        a.out.display()
    );
    Ok(exit::OK)
}
