//! File formats: JSON model and continuous-spec documents, CSV policies and
//! result tables.
//!
//! Every real number written to CSV uses 17 significant digits, so a value
//! read back is bit-identical to the one written.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use riskmdp_core::discretizer::{Affine1DSpec, GridSpec};
use riskmdp_core::{FiniteModel, MarkovPolicy, ModelTables, SweepRow, Trajectory, ValueTables};

use crate::error::{CliError, Result};

/// Kernel rows within this distance of summing to one are rescaled when the
/// caller asks for renormalization at load time.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// On-disk model document. Nested arrays are indexed `[t][x][u][w]`
/// (`dynamics`, `kernel`), `[t][x][u]` (`stage_cost`) and `[x]`
/// (`terminal_cost`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub horizon: usize,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub disturbances: Vec<String>,
    pub dynamics: Vec<Vec<Vec<Vec<usize>>>>,
    pub kernel: Vec<Vec<Vec<Vec<f64>>>>,
    pub stage_cost: Vec<Vec<Vec<f64>>>,
    pub terminal_cost: Vec<f64>,
}

impl From<ModelFile> for ModelTables {
    fn from(f: ModelFile) -> Self {
        ModelTables {
            horizon: f.horizon,
            states: f.states,
            actions: f.actions,
            disturbances: f.disturbances,
            dynamics: f.dynamics,
            kernel: f.kernel,
            stage_cost: f.stage_cost,
            terminal_cost: f.terminal_cost,
        }
    }
}

impl From<ModelTables> for ModelFile {
    fn from(t: ModelTables) -> Self {
        ModelFile {
            horizon: t.horizon,
            states: t.states,
            actions: t.actions,
            disturbances: t.disturbances,
            dynamics: t.dynamics,
            kernel: t.kernel,
            stage_cost: t.stage_cost,
            terminal_cost: t.terminal_cost,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn parse_model(text: &str) -> serde_json::Result<ModelTables> {
    serde_json::from_str::<ModelFile>(text).map(Into::into)
}

/// Loads and validates a model file. With `renormalize`, kernel rows off by
/// at most [`RENORMALIZE_TOLERANCE`] are rescaled first.
pub fn load_model(path: &Path, renormalize: bool) -> Result<FiniteModel> {
    let mut tables = parse_model(&read(path)?).map_err(|e| CliError::format(path, e.to_string()))?;
    if renormalize {
        tables.renormalize_kernel(RENORMALIZE_TOLERANCE);
    }
    Ok(FiniteModel::new(tables)?)
}

pub fn model_to_json(m: &FiniteModel) -> String {
    let mut s = serde_json::to_string(&ModelFile::from(m.to_tables())).expect("model tables serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Affine1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub state_points: usize,
    pub noise_atoms: usize,
}

/// Continuous problem document for `discretize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousSpecFile {
    pub family: Family,
    pub horizon: usize,
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub x_bounds: [f64; 2],
    pub controls: Vec<f64>,
    pub q: f64,
    pub r: f64,
    #[serde(rename = "qN")]
    pub q_terminal: f64,
    pub grid: GridFile,
}

impl ContinuousSpecFile {
    pub fn into_specs(self) -> (Affine1DSpec, GridSpec) {
        let spec = Affine1DSpec {
            horizon: self.horizon,
            a: self.a,
            b: self.b,
            sigma: self.sigma,
            x_bounds: (self.x_bounds[0], self.x_bounds[1]),
            controls: self.controls,
            q: self.q,
            r: self.r,
            q_terminal: self.q_terminal,
        };
        let grid = GridSpec { state_points: self.grid.state_points, noise_atoms: self.grid.noise_atoms };
        (spec, grid)
    }
}

pub fn load_continuous_spec(path: &Path) -> Result<(Affine1DSpec, GridSpec)> {
    let file: ContinuousSpecFile =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::format(path, e.to_string()))?;
    Ok(file.into_specs())
}

/// Reads a `t,state,action` policy table. States and actions may be given by
/// label or index; every `(t, state)` pair must appear exactly once.
pub fn load_policy(path: &Path, m: &FiniteModel) -> Result<MarkovPolicy> {
    let text = read(path)?;
    parse_policy(&text, m).map_err(|msg| CliError::format(path, msg))
}

pub fn parse_policy(text: &str, m: &FiniteModel) -> std::result::Result<MarkovPolicy, String> {
    let (n, ns) = (m.horizon(), m.num_states());
    let mut table: Vec<Option<usize>> = vec![None; n * ns];
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "state", "action"] {
        return Err(format!("expected header t,state,action, found {}", headers.iter().collect::<Vec<_>>().join(",")));
    }
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = i + 2;
        if rec.len() != 3 {
            return Err(format!("line {line}: expected 3 fields, found {}", rec.len()));
        }
        let t: usize = rec[0].parse().map_err(|_| format!("line {line}: bad stage {:?}", &rec[0]))?;
        if t >= n {
            return Err(format!("line {line}: stage {t} out of range (horizon {n})"));
        }
        let x = m.find_state(&rec[1]).ok_or_else(|| format!("line {line}: unknown state {:?}", &rec[1]))?;
        let u = m.find_action(&rec[2]).ok_or_else(|| format!("line {line}: unknown action {:?}", &rec[2]))?;
        let slot = &mut table[t * ns + x];
        if slot.is_some() {
            return Err(format!("line {line}: duplicate entry for (t={t}, state={})", &rec[1]));
        }
        *slot = Some(u);
    }
    if let Some(k) = table.iter().position(Option::is_none) {
        return Err(format!(
            "policy has no entry for (t={}, state={})",
            k / ns,
            m.state_labels()[k % ns]
        ));
    }
    MarkovPolicy::from_flat(m, table.into_iter().flatten().collect()).map_err(|e| e.to_string())
}

/// Full-precision rendering used in every CSV column holding a real.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// `t,state,value` for `t = 0..=N`.
pub fn values_csv(m: &FiniteModel, v: &ValueTables) -> Vec<u8> {
    let labels = m.state_labels();
    csv_bytes(
        &["t", "state", "value"],
        (0..v.len()).flat_map(|t| {
            v.stage(t).iter().enumerate().map(move |(x, &val)| vec![t.to_string(), labels[x].clone(), real(val)])
        }),
    )
}

/// `t,state,action` for `t = 0..N`.
pub fn policy_csv(m: &FiniteModel, pi: &MarkovPolicy) -> Vec<u8> {
    let (states, actions) = (m.state_labels(), m.action_labels());
    csv_bytes(
        &["t", "state", "action"],
        pi.rows().enumerate().flat_map(|(t, row)| {
            row.iter().enumerate().map(move |(x, &u)| vec![t.to_string(), states[x].clone(), actions[u].clone()])
        }),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    csv_bytes(
        &["theta", "value_at_x0", "policy_changed_from_previous"],
        rows.iter().map(|r| {
            vec![real(r.theta.theta()), real(r.value), u8::from(r.policy_changed).to_string()]
        }),
    )
}

/// One row per visited stage: `trial,t,state,action,cost_to_go`; the action
/// field is empty at the terminal stage.
pub fn trajectories_csv(m: &FiniteModel, trajs: &[Trajectory], costs_to_go: &[Vec<f64>]) -> Vec<u8> {
    let (states, actions) = (m.state_labels(), m.action_labels());
    csv_bytes(
        &["trial", "t", "state", "action", "cost_to_go"],
        trajs.iter().zip(costs_to_go).enumerate().flat_map(|(i, (tr, z))| {
            (0..=tr.horizon()).map(move |t| {
                let action = if t < tr.horizon() { actions[tr.action(t)].clone() } else { String::new() };
                vec![i.to_string(), t.to_string(), states[tr.state(t)].clone(), action, real(z[t])]
            })
        }),
    )
}
