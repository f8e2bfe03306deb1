//! Batch experiments: phase-transition sweeps, overlap-scenario comparisons
//! against the lasso, and noisy recovery checks.
//!
//! Every trial derives its seed from `(master_seed, scenario, n, trial)`, so
//! the group method and the lasso see the same `(Φ, x*, θ)` and results do
//! not depend on scheduling. Trials run on the rayon pool and are merged in
//! `(n, trial, method)` order.

mod output;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use output::{
    emit_csv, emit_svg_plot, lemmas_to_csv, records_to_csv, summaries_to_csv, svg_plot, BoundMarker, CSV_HEADER,
};

use crate::bounds::{group_bound, noisy_bound};
use crate::error::{Error, Result};
use crate::group_model::{
    make_scenario, sample_signal, ActiveSet, GroupStructure, ScenarioKind, ScenarioParams, ValueLaw,
};
use crate::rng::{derive_seed, label};
use crate::sensing::{gaussian_matrix, measure};
use crate::solver::{lasso_recover, recover, RecoveryMode, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Latent group norm minimisation.
    Group,
    /// ℓ1 minimisation ignoring the groups.
    Lasso,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Group => "group",
            Method::Lasso => "lasso",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "group" => Ok(Method::Group),
            "lasso" => Ok(Method::Lasso),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    /// Number of groups `M`.
    pub m: usize,
    /// Group size `B`.
    pub b: usize,
    /// Active groups per signal.
    pub k: usize,
    /// Chain overlap; ignored by the other scenarios.
    #[serde(default)]
    pub overlap: usize,
    pub law: ValueLaw,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Fill `wall_ms`; off by default so output is byte-reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Group, Method::Lasso]
}

impl ExperimentConfig {
    /// `p = 200`, `M = 20` disjoint groups of 10, `k = 2`, uniform `[0, 1]`
    /// values, 50 trials; the grid includes the group bound `n = 82`.
    pub fn desk_lasso_comparison() -> Self {
        ExperimentConfig {
            scenario: ScenarioKind::Disjoint,
            m: 20,
            b: 10,
            k: 2,
            overlap: 0,
            law: ValueLaw::Uniform01,
            n_grid: vec![20, 30, 40, 50, 60, 70, 80, 82, 90, 100, 110, 120],
            trials: 50,
            master_seed: 2024,
            methods: default_methods(),
            solver: SolverConfig::default(),
            record_wall_time: false,
            output_dir: None,
        }
    }

    /// `p = 2000`, `M = 100` disjoint groups of 20, `k = 5`, 100 trials.
    pub fn full_lasso_comparison() -> Self {
        let mut n_grid: Vec<usize> = (1..=20).map(|i| 50 * i).collect();
        n_grid.push(381);
        n_grid.sort_unstable();
        ExperimentConfig { m: 100, b: 20, k: 5, n_grid, trials: 100, ..Self::desk_lasso_comparison() }
    }

    /// Overlap scenario at desk scale: `M = 20`, `B = 8`, `k = 2`, chain
    /// overlap `B/2`, uniform `[−1, 1]` values.
    pub fn desk_scenario(kind: ScenarioKind) -> Self {
        let mut cfg = ExperimentConfig {
            scenario: kind,
            m: 20,
            b: 8,
            k: 2,
            overlap: 4,
            law: ValueLaw::UniformSymmetric,
            n_grid: Vec::new(),
            trials: 50,
            master_seed: 2024,
            methods: vec![Method::Group],
            solver: SolverConfig::default(),
            record_wall_time: false,
            output_dir: None,
        };
        cfg.n_grid = vec![cfg.group_bound_measurements().unwrap_or(1)];
        cfg
    }

    /// Overlap scenario at the original scale: `M = 100`, `B = 40`, `k = 5`,
    /// chain overlap 20, 100 trials.
    pub fn full_scenario(kind: ScenarioKind) -> Self {
        let mut cfg = ExperimentConfig { m: 100, b: 40, k: 5, overlap: 20, trials: 100, ..Self::desk_scenario(kind) };
        cfg.n_grid = vec![cfg.group_bound_measurements().unwrap_or(1)];
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::InvalidParameter("n grid must be non-empty and positive".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n grid must be strictly increasing".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("at least one method is required".into()));
        }
        if self.k == 0 || self.k > self.m {
            return Err(Error::InvalidParameter(format!("need 1 <= k <= M, got k = {}", self.k)));
        }
        self.solver.validate()?;
        self.structure().map(|_| ())
    }

    pub fn scenario_params(&self) -> ScenarioParams {
        ScenarioParams {
            overlap: self.overlap,
            seed: derive_seed(self.master_seed, &[label("structure"), label(self.scenario.tag())]),
        }
    }

    /// The group structure shared by every trial.
    pub fn structure(&self) -> Result<GroupStructure> {
        make_scenario(self.scenario, self.m, self.b, self.scenario_params())
    }

    pub fn group_bound_measurements(&self) -> Result<usize> {
        Ok(group_bound(self.m, self.k, self.b)?.measurements as usize)
    }

    pub fn trial_seed(&self, n: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, &[label(self.scenario.tag()), n as u64, trial as u64])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub rel_error: f64,
    pub success: bool,
    pub wall_ms: f64,
}

/// One paired trial: the same signal and measurements for every method.
pub fn run_trial(
    cfg: &ExperimentConfig,
    structure: &GroupStructure,
    n: usize,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let seed = cfg.trial_seed(n, trial);
    let active = ActiveSet::random(structure, cfg.k, derive_seed(seed, &[label("active")]))?;
    let x_star = sample_signal(&active, cfg.law, derive_seed(seed, &[label("signal")])).x;
    let ensemble = gaussian_matrix(n, structure.p(), derive_seed(seed, &[label("matrix")]))?;
    let obs = measure(&ensemble, &x_star, 0.0, 0)?;

    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let result = match method {
                Method::Group => recover(&ensemble, &obs, structure, &cfg.solver, RecoveryMode::Exact)?,
                Method::Lasso => lasso_recover(&ensemble, &obs, &cfg.solver, RecoveryMode::Exact)?,
            }
            .with_truth(&x_star);
            let wall_ms = if cfg.record_wall_time { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            let rel_error = result.relative_error.unwrap_or(f64::INFINITY);
            Ok(TrialRecord {
                scenario: cfg.scenario.tag().to_string(),
                n,
                trial,
                seed,
                method,
                rel_error,
                success: rel_error <= cfg.solver.exact_recovery_threshold,
                wall_ms,
            })
        })
        .collect()
}

/// Runs every `(n, trial)` pair of the grid.
pub fn run_phase_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let structure = cfg.structure()?;
    let jobs: Vec<(usize, usize)> = cfg.n_grid.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect();
    let batches: Vec<Vec<TrialRecord>> =
        jobs.par_iter().map(|&(n, t)| run_trial(cfg, &structure, n, t)).collect::<Result<_>>()?;
    Ok(batches.into_iter().flatten().collect())
}

/// Runs each scenario at its own group-bound measurement count.
pub fn run_scenario_suite(configs: &[ExperimentConfig]) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for cfg in configs {
        let mut at_bound = cfg.clone();
        at_bound.n_grid = vec![cfg.group_bound_measurements()?];
        out.extend(run_phase_sweep(&at_bound)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: Method,
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Binomial standard error of `success_rate`.
    pub success_std_error: f64,
    pub mean_rel_error: f64,
}

/// Aggregates records per `(scenario, method, n)`, sorted by those keys.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, Method, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.scenario.clone(), r.method, r.n)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((scenario, method, n), rs)| {
            let trials = rs.len();
            let successes = rs.iter().filter(|r| r.success).count();
            let rate = successes as f64 / trials as f64;
            SummaryRow {
                scenario,
                method,
                n,
                trials,
                successes,
                success_rate: rate,
                success_std_error: (rate * (1.0 - rate) / trials as f64).sqrt(),
                mean_rel_error: rs.iter().map(|r| r.rel_error).sum::<f64>() / trials as f64,
            }
        })
        .collect()
}

/// Success rate of `method` at `n`, if present.
pub fn success_rate(records: &[TrialRecord], method: Method, n: usize) -> Option<f64> {
    let rs: Vec<_> = records.iter().filter(|r| r.method == method && r.n == n).collect();
    if rs.is_empty() {
        None
    } else {
        Some(rs.iter().filter(|r| r.success).count() as f64 / rs.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyRecord {
    pub trial: usize,
    pub n: usize,
    pub delta: f64,
    pub error: f64,
    /// `2δ/ε`
    pub guarantee: f64,
    pub within: bool,
    pub feasible: bool,
}

/// Noisy recovery at `n = ⌈noisy_bound(M, k, B, ε)⌉` with a measurement
/// matrix of entry variance `1/n` and `δ = relative_delta · ‖y‖`.
///
/// The error guarantee `‖x̂ − x*‖ ≤ 2δ/ε` is stated for variance-`1/n`
/// operators, hence the normalisation.
pub fn run_noisy_trials(cfg: &ExperimentConfig, epsilon: f64, relative_delta: f64) -> Result<Vec<NoisyRecord>> {
    if !(relative_delta > 0.0) {
        return Err(Error::InvalidParameter("relative noise level must be positive".into()));
    }
    let structure = cfg.structure()?;
    let n = noisy_bound(cfg.m, cfg.k, cfg.b, epsilon)?.measurements as usize;
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(cfg.trial_seed(n, trial), &[label("noisy")]);
            let active = ActiveSet::random(&structure, cfg.k, derive_seed(seed, &[label("active")]))?;
            let x_star = sample_signal(&active, cfg.law, derive_seed(seed, &[label("signal")])).x;
            let ensemble = gaussian_matrix(n, structure.p(), derive_seed(seed, &[label("matrix")]))?.normalized();
            let clean_norm = (ensemble.matrix() * &x_star).norm();
            let delta = relative_delta * clean_norm;
            let obs = measure(&ensemble, &x_star, delta, derive_seed(seed, &[label("noise")]))?;
            let result = recover(&ensemble, &obs, &structure, &cfg.solver, RecoveryMode::Noisy { delta })?;
            let error = (&result.x_hat - &x_star).norm();
            let guarantee = 2.0 * delta / epsilon;
            Ok(NoisyRecord { trial, n, delta, error, guarantee, within: error <= guarantee, feasible: result.feasible })
        })
        .collect()
}
