//! Latent group lasso solvers.
//!
//! Overlapping groups are handled by replication: every group owns a private
//! copy of its coordinates and the design acts as `Φ̃ x̃ = Φ R x̃`, where `R`
//! sums replicas. The penalty then becomes an ordinary non-overlapping group
//! lasso on the expanded space. `Φ̃` is never formed;
//! products go through [`ReplicationMap::collapse`] and
//! [`ReplicationMap::lift`].
//!
//! Two independent solvers are provided for the penalized problem
//!
//! ```text
//! minimize  ½‖y − Φ̃ x̃‖² + λ Σ_G ‖x̃_G‖
//! ```
//!
//! [`solve_group_lasso`] (spectral proximal gradient with a non-monotone line
//! search) and [`admm_oracle`] (consensus ADMM). [`recover`] approximates the
//! constrained programs by λ-continuation on top of the first.

mod admm;
mod sparsa;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::group_model::{replicate, GroupStructure, ReplicationMap};
use crate::sensing::{MeasurementEnsemble, Observation};
use crate::{Matrix, Vector};

pub(crate) use admm::latent_decomposition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Iteration cap per λ value.
    pub max_iter: usize,
    /// Stop when `‖x_{t+1} − x_t‖ ≤ rel_tol · ‖x_{t+1}‖`.
    pub rel_tol: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Length of the objective window for the non-monotone acceptance test;
    /// 1 makes the method monotone.
    pub nonmonotone_window: usize,
    pub sufficient_decrease: f64,
    /// First λ as a fraction of `λ_max = ‖Φ̃ᵀy‖*`.
    pub lambda_start: f64,
    /// Geometric decay of λ between continuation stages.
    pub lambda_decay: f64,
    /// Last λ as a fraction of the first.
    pub lambda_floor: f64,
    /// Exact mode stops once `‖y − Φx̂‖ ≤ residual_tol · ‖y‖`.
    pub residual_tol: f64,
    /// Relative ℓ2 error counted as exact recovery.
    pub exact_recovery_threshold: f64,
    pub admm_rho: f64,
    pub admm_tol: f64,
    pub admm_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 5000,
            rel_tol: 1e-8,
            alpha_min: 1e-30,
            alpha_max: 1e30,
            nonmonotone_window: 5,
            sufficient_decrease: 0.01,
            lambda_start: 0.5,
            lambda_decay: 0.5,
            lambda_floor: 1e-8,
            residual_tol: 1e-10,
            exact_recovery_threshold: 1e-4,
            admm_rho: 1.0,
            admm_tol: 1e-8,
            admm_max_iter: 200_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.max_iter == 0 || self.admm_max_iter == 0 {
            return bad("iteration caps must be positive");
        }
        if !(self.rel_tol > 0.0 && self.residual_tol > 0.0 && self.admm_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max) {
            return bad("step bounds must satisfy 0 < alpha_min < alpha_max");
        }
        if !(self.lambda_decay > 0.0 && self.lambda_decay < 1.0) {
            return bad("lambda_decay must lie in (0, 1)");
        }
        if !(self.lambda_start > 0.0 && self.lambda_floor > 0.0 && self.lambda_floor < 1.0) {
            return bad("lambda_start must be positive and lambda_floor in (0, 1)");
        }
        if self.nonmonotone_window == 0 {
            return bad("nonmonotone_window must be at least 1");
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return bad("sufficient_decrease must lie in (0, 1)");
        }
        if !(self.exact_recovery_threshold > 0.0) {
            return bad("exact_recovery_threshold must be positive");
        }
        if !(self.admm_rho > 0.0) {
            return bad("admm_rho must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMode {
    /// `min ‖x‖_𝒜  s.t.  y = Φx`
    Exact,
    /// `min ‖x‖_𝒜  s.t.  ‖y − Φx‖ ≤ δ`
    Noisy { delta: f64 },
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub x_hat: Vector,
    /// Solution on the replicated space; `x_hat` is its collapse.
    pub latent: Vector,
    /// Objective after every accepted step (all stages concatenated).
    pub objective_trace: Vec<f64>,
    /// Penalized objective at the returned point for the final λ.
    pub objective: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub stages: usize,
    pub residual_norm: f64,
    /// `‖x̂ − x*‖ / ‖x*‖`, filled in by [`RecoveryResult::with_truth`].
    pub relative_error: Option<f64>,
    /// `false` when an iteration cap was hit.
    pub converged: bool,
    /// `false` when a constrained program's residual target was not met.
    pub feasible: bool,
}

impl RecoveryResult {
    pub fn with_truth(mut self, x_star: &Vector) -> Self {
        let denom = x_star.norm();
        let err = (&self.x_hat - x_star).norm();
        self.relative_error = Some(if denom > 0.0 { err / denom } else { err });
        self
    }

    pub fn is_exact(&self, threshold: f64) -> bool {
        self.relative_error.is_some_and(|e| e <= threshold)
    }

    /// Per-group latent vectors on the replicated layout.
    pub fn latent_groups(&self, rep: &ReplicationMap) -> Vec<Vec<f64>> {
        rep.split(&self.latent)
    }
}

/// Proximal operator of `τ‖·‖₂`: `max(0, 1 − τ/‖v‖)·v`.
pub fn block_soft_threshold(v: &Vector, tau: f64) -> Vector {
    let mut out = v.clone();
    shrink_block(out.as_mut_slice(), tau);
    out
}

/// In-place block soft threshold of one block.
pub(crate) fn shrink_block(block: &mut [f64], tau: f64) {
    let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= tau {
        block.iter_mut().for_each(|v| *v = 0.0);
    } else {
        let scale = 1.0 - tau / norm;
        block.iter_mut().for_each(|v| *v *= scale);
    }
}

/// The replicated least-squares model `x̃ ↦ Φ R x̃`.
pub(crate) struct LatentProblem<'a> {
    pub phi: &'a Matrix,
    pub y: &'a Vector,
    pub rep: &'a ReplicationMap,
}

impl<'a> LatentProblem<'a> {
    pub fn new(phi: &'a Matrix, y: &'a Vector, rep: &'a ReplicationMap) -> Result<Self> {
        check_dim(phi.ncols(), rep.source().p())?;
        check_dim(phi.nrows(), y.len())?;
        Ok(LatentProblem { phi, y, rep })
    }

    pub fn forward(&self, latent: &Vector) -> Vector {
        self.phi * self.rep.collapse(latent)
    }

    pub fn adjoint(&self, r: &Vector) -> Vector {
        self.rep.lift(&self.phi.tr_mul(r))
    }

    pub fn penalty(&self, latent: &Vector) -> f64 {
        self.rep.ranges().iter().map(|r| latent.rows(r.start, r.len()).norm()).sum()
    }

    pub fn prox(&self, latent: &mut Vector, tau: f64) {
        let data = latent.as_mut_slice();
        for r in self.rep.ranges() {
            shrink_block(&mut data[r.clone()], tau);
        }
    }

    /// Dual norm of `Φ̃ᵀy` over the replicated groups, the smallest λ for
    /// which zero is optimal.
    pub fn lambda_max(&self) -> f64 {
        let g = self.adjoint(self.y);
        self.rep.ranges().iter().map(|r| g.rows(r.start, r.len()).norm()).fold(0.0, f64::max)
    }

    pub fn objective(&self, latent: &Vector, lambda: f64) -> f64 {
        let r = self.forward(latent) - self.y;
        0.5 * r.norm_squared() + lambda * self.penalty(latent)
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &LatentProblem<'_>,
    latent: Vector,
    lambda: f64,
    trace: Vec<f64>,
    iterations: usize,
    stages: usize,
    converged: bool,
    feasible: bool,
) -> RecoveryResult {
    let x_hat = problem.rep.collapse(&latent);
    let residual_norm = (problem.phi * &x_hat - problem.y).norm();
    let objective = problem.objective(&latent, lambda);
    RecoveryResult {
        x_hat,
        latent,
        objective_trace: trace,
        objective,
        lambda,
        iterations,
        stages,
        residual_norm,
        relative_error: None,
        converged,
        feasible,
    }
}

fn check_inputs(e: &MeasurementEnsemble, y: &Observation, g: &GroupStructure, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    check_dim(e.p(), g.p())?;
    check_dim(e.n(), y.y.len())
}

/// Penalized latent group lasso by spectral proximal gradient.
pub fn solve_group_lasso(
    e: &MeasurementEnsemble,
    y: &Observation,
    g: &GroupStructure,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_inputs(e, y, g, cfg)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let rep = replicate(g);
    let problem = LatentProblem::new(e.matrix(), &y.y, &rep)?;
    let start = Vector::zeros(rep.expanded_dim());
    let out = sparsa::solve(&problem, lambda, start, cfg);
    Ok(finish(&problem, out.latent, lambda, out.trace, out.iterations, 1, out.converged, true))
}

/// Penalized latent group lasso by consensus ADMM with fixed penalty
/// `cfg.admm_rho`. Independent of [`solve_group_lasso`].
pub fn admm_oracle(
    e: &MeasurementEnsemble,
    y: &Observation,
    g: &GroupStructure,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_inputs(e, y, g, cfg)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let rep = replicate(g);
    let problem = LatentProblem::new(e.matrix(), &y.y, &rep)?;
    let out = admm::group_lasso(&problem, lambda, cfg);
    Ok(finish(&problem, out.latent, lambda, out.trace, out.iterations, 1, out.converged, true))
}

/// Ordinary lasso: the singleton-group special case.
pub fn lasso_solve(
    e: &MeasurementEnsemble,
    y: &Observation,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    solve_group_lasso(e, y, &GroupStructure::singletons(e.p())?, lambda, cfg)
}

/// Approximates the constrained latent-norm program by a decreasing λ
/// sequence with warm starts.
///
/// Starting at `λ₀ = lambda_start · λ_max`, λ is multiplied by
/// `lambda_decay` after every stage. In exact mode the sequence stops once the
/// residual drops below `residual_tol · ‖y‖` or λ reaches
/// `lambda_floor · λ₀`. In noisy mode it stops at the first (largest) λ whose
/// solution satisfies `‖y − Φx̂‖ ≤ δ`; reaching the floor without meeting the
/// budget marks the result infeasible.
pub fn recover(
    e: &MeasurementEnsemble,
    y: &Observation,
    g: &GroupStructure,
    cfg: &SolverConfig,
    mode: RecoveryMode,
) -> Result<RecoveryResult> {
    check_inputs(e, y, g, cfg)?;
    if let RecoveryMode::Noisy { delta } = mode {
        if !(delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise budget must be >= 0, got {delta}")));
        }
    }
    let rep = replicate(g);
    let problem = LatentProblem::new(e.matrix(), &y.y, &rep)?;
    let y_norm = y.y.norm();
    let lambda_max = problem.lambda_max();
    let mut latent = Vector::zeros(rep.expanded_dim());
    if lambda_max == 0.0 {
        let feasible = match mode {
            RecoveryMode::Exact => y_norm == 0.0,
            RecoveryMode::Noisy { delta } => y_norm <= delta,
        };
        return Ok(finish(&problem, latent, 0.0, Vec::new(), 0, 0, true, feasible));
    }

    let lambda0 = cfg.lambda_start * lambda_max;
    let floor = cfg.lambda_floor * lambda0;
    let mut lambda = lambda0;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut stages = 0;
    let mut converged = true;
    loop {
        let out = sparsa::solve(&problem, lambda, latent, cfg);
        latent = out.latent;
        trace.extend(out.trace);
        iterations += out.iterations;
        stages += 1;
        converged &= out.converged;

        let residual = (problem.forward(&latent) - problem.y).norm();
        let at_floor = lambda * cfg.lambda_decay < floor;
        match mode {
            RecoveryMode::Exact => {
                if residual <= cfg.residual_tol * y_norm || at_floor {
                    // At the floor the residual is O(λ); anything well above
                    // that means y is not in the range of Φ restricted to the cover.
                    let feasible = residual <= 1e-6 * y_norm.max(f64::MIN_POSITIVE);
                    return Ok(finish(&problem, latent, lambda, trace, iterations, stages, converged, feasible));
                }
            }
            RecoveryMode::Noisy { delta } => {
                if residual <= delta {
                    return Ok(finish(&problem, latent, lambda, trace, iterations, stages, converged, true));
                }
                if at_floor {
                    return Ok(finish(&problem, latent, lambda, trace, iterations, stages, converged, false));
                }
            }
        }
        lambda *= cfg.lambda_decay;
    }
}

/// [`recover`] with singleton groups, i.e. ℓ1 minimization.
pub fn lasso_recover(
    e: &MeasurementEnsemble,
    y: &Observation,
    cfg: &SolverConfig,
    mode: RecoveryMode,
) -> Result<RecoveryResult> {
    recover(e, y, &GroupStructure::singletons(e.p())?, cfg, mode)
}
