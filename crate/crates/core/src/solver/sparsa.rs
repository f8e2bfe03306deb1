//! Spectral proximal gradient (SpaRSA-style).
//!
//! Each iteration takes the step `x⁺ = prox_{λ/α}(x − ∇f(x)/α)` where `α` is
//! the Barzilai-Borwein curvature estimate `⟨Δx, Δ∇f⟩ / ⟨Δx, Δx⟩`, clamped to
//! `[alpha_min, alpha_max]`. A step is accepted when the objective falls
//! below the maximum of the last `nonmonotone_window` accepted objectives by
//! `(σ/2)·α‖Δx‖²`; otherwise `α` is doubled and the step recomputed.

use std::collections::VecDeque;

use super::{LatentProblem, SolverConfig};
use crate::Vector;

pub(super) struct SparsaOutput {
    pub latent: Vector,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(super) fn solve(problem: &LatentProblem<'_>, lambda: f64, start: Vector, cfg: &SolverConfig) -> SparsaOutput {
    let mut x = start;
    let mut residual = problem.forward(&x) - problem.y;
    let mut grad = problem.adjoint(&residual);
    let mut objective = 0.5 * residual.norm_squared() + lambda * problem.penalty(&x);

    // Initial curvature from the gradient direction.
    let a_grad = problem.forward(&grad);
    let mut alpha = if grad.norm_squared() > 0.0 { a_grad.norm_squared() / grad.norm_squared() } else { 1.0 }
        .clamp(cfg.alpha_min, cfg.alpha_max);

    let mut window: VecDeque<f64> = VecDeque::with_capacity(cfg.nonmonotone_window);
    window.push_back(objective);
    let mut trace = Vec::new();

    for it in 1..=cfg.max_iter {
        let reference = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (x_new, residual_new, objective_new, dx_sq) = loop {
            let mut candidate = &x - &grad / alpha;
            problem.prox(&mut candidate, lambda / alpha);
            let dx_sq = (&candidate - &x).norm_squared();
            let r = problem.forward(&candidate) - problem.y;
            let obj = 0.5 * r.norm_squared() + lambda * problem.penalty(&candidate);
            let accept = obj <= reference - 0.5 * cfg.sufficient_decrease * alpha * dx_sq;
            if accept || alpha >= cfg.alpha_max || dx_sq == 0.0 {
                break (candidate, r, obj, dx_sq);
            }
            alpha = (2.0 * alpha).min(cfg.alpha_max);
        };

        if dx_sq == 0.0 {
            return SparsaOutput { latent: x, trace, iterations: it - 1, converged: true };
        }

        // ⟨Δx, Δ∇f⟩ = ‖Φ̃Δx‖² and Φ̃Δx is the change of residual.
        let curvature = (&residual_new - &residual).norm_squared();
        alpha = (curvature / dx_sq).clamp(cfg.alpha_min, cfg.alpha_max);

        let step = dx_sq.sqrt();
        x = x_new;
        residual = residual_new;
        grad = problem.adjoint(&residual);
        objective = objective_new;
        trace.push(objective);
        if window.len() == cfg.nonmonotone_window {
            window.pop_front();
        }
        window.push_back(objective);

        if step <= cfg.rel_tol * x.norm().max(f64::MIN_POSITIVE) {
            return SparsaOutput { latent: x, trace, iterations: it, converged: true };
        }
    }
    let _ = objective;
    SparsaOutput { latent: x, trace, iterations: cfg.max_iter, converged: false }
}
