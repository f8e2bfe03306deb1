//! Consensus ADMM on the replicated space.
//!
//! Both problems split the replicated variable into a copy `v` that carries
//! the smooth part or the linear constraint and a copy `z` that carries the
//! group penalty, with the scaled dual `u` enforcing `v = z`:
//!
//! ```text
//! v ← argmin f(v) + (ρ/2)‖v − z + u‖²
//! z ← prox_{(λ/ρ)Σ‖·‖}(v + u)
//! u ← u + v − z
//! ```

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;

use super::{shrink_block, LatentProblem, SolverConfig};
use crate::group_model::ReplicationMap;
use crate::{Matrix, Vector};

pub(super) struct AdmmOutput {
    pub latent: Vector,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `(ρI + Φ̃ᵀΦ̃) x = b`, factoring whichever of the two Gram systems is
/// smaller.
enum RidgeSolver {
    Primal(Cholesky<f64, Dyn>),
    Woodbury { design: Matrix, rho: f64, chol: Cholesky<f64, Dyn> },
}

impl RidgeSolver {
    fn new(design: Matrix, rho: f64) -> Self {
        let (n, p) = design.shape();
        if p <= n {
            let mut gram = design.tr_mul(&design);
            for i in 0..p {
                gram[(i, i)] += rho;
            }
            RidgeSolver::Primal(Cholesky::new(gram).expect("ρI + Φ̃ᵀΦ̃ is positive definite"))
        } else {
            let mut gram = &design * design.transpose();
            for i in 0..n {
                gram[(i, i)] += rho;
            }
            let chol = Cholesky::new(gram).expect("ρI + Φ̃Φ̃ᵀ is positive definite");
            RidgeSolver::Woodbury { design, rho, chol }
        }
    }

    fn solve(&self, b: &Vector) -> Vector {
        match self {
            RidgeSolver::Primal(chol) => chol.solve(b),
            RidgeSolver::Woodbury { design, rho, chol } => {
                let inner = chol.solve(&(design * b));
                (b - design.tr_mul(&inner)) / *rho
            }
        }
    }
}

fn prox_blocks(ranges: &[std::ops::Range<usize>], x: &mut Vector, tau: f64) {
    let data = x.as_mut_slice();
    for r in ranges {
        shrink_block(&mut data[r.clone()], tau);
    }
}

pub(super) fn group_lasso(problem: &LatentProblem<'_>, lambda: f64, cfg: &SolverConfig) -> AdmmOutput {
    let rho = cfg.admm_rho;
    let rep = problem.rep;
    let design =
        Matrix::from_fn(problem.phi.nrows(), rep.expanded_dim(), |i, j| problem.phi[(i, rep.source_index()[j])]);
    let rhs = design.tr_mul(problem.y);
    let ridge = RidgeSolver::new(design, rho);

    let dim = rep.expanded_dim();
    let mut z = Vector::zeros(dim);
    let mut u = Vector::zeros(dim);
    let mut trace = Vec::new();
    for it in 1..=cfg.admm_max_iter {
        let x = ridge.solve(&(&rhs + (&z - &u) * rho));
        let z_old = std::mem::replace(&mut z, &x + &u);
        prox_blocks(rep.ranges(), &mut z, lambda / rho);
        u += &x - &z;

        let primal = (&x - &z).norm();
        let dual = rho * (&z - &z_old).norm();
        trace.push(problem.objective(&z, lambda));
        let primal_scale = x.norm().max(z.norm()).max(1.0);
        let dual_scale = (rho * u.norm()).max(1.0);
        if primal <= cfg.admm_tol * primal_scale && dual <= cfg.admm_tol * dual_scale {
            return AdmmOutput { latent: z, trace, iterations: it, converged: true };
        }
    }
    AdmmOutput { latent: z, trace, iterations: cfg.admm_max_iter, converged: false }
}

pub(crate) struct LatentAdmmOutput {
    /// Feasible decomposition on the replicated space: `R latent = x`.
    pub latent: Vector,
    /// Dual certificate `η ∈ ℝ^p` with `‖η‖* ≈ 1` and `⟨η, x⟩ ≈ ‖x‖_𝒜`.
    pub certificate: Vector,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimum-norm latent decomposition: `min Σ_G ‖v_G‖ s.t. R v = x`.
///
/// `x` must vanish off the cover. The problem is solved for `x/‖x‖` and
/// rescaled, so `tol` is relative.
pub(crate) fn latent_decomposition(x: &Vector, rep: &ReplicationMap, tol: f64, max_iter: usize) -> LatentAdmmOutput {
    let p = rep.source().p();
    let dim = rep.expanded_dim();
    let scale = x.norm();
    if scale == 0.0 {
        return LatentAdmmOutput {
            latent: Vector::zeros(dim),
            certificate: Vector::zeros(p),
            iterations: 0,
            converged: true,
        };
    }
    let target = x / scale;
    let inv_mult =
        Vector::from_iterator(p, rep.multiplicity().iter().map(|&m| if m > 0 { 1.0 / m as f64 } else { 0.0 }));
    // Projection onto {v : R v = target}.
    let project = |w: &Vector| -> Vector {
        let correction = (rep.collapse(w) - &target).component_mul(&inv_mult);
        w - rep.lift(&correction)
    };

    let rho = 1.0;
    let mut z = project(&Vector::zeros(dim));
    let mut u = Vector::zeros(dim);
    let mut v = z.clone();
    let mut converged = false;
    let mut iterations = max_iter;
    for it in 1..=max_iter {
        v = project(&(&z - &u));
        let z_old = std::mem::replace(&mut z, &v + &u);
        prox_blocks(rep.ranges(), &mut z, 1.0 / rho);
        u += &v - &z;
        let primal = (&v - &z).norm();
        let dual = rho * (&z - &z_old).norm();
        if primal <= tol && dual <= tol {
            converged = true;
            iterations = it;
            break;
        }
    }
    let certificate = rep.collapse(&(&u * rho)).component_mul(&inv_mult);
    LatentAdmmOutput { latent: v * scale, certificate, iterations, converged }
}
