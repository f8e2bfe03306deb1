//! Numerical checks of the normal-cone argument behind the group bound.
//!
//! A vector `v` lies in the normal cone of the latent group norm at `x*`
//! (active groups `𝒢*`) iff for some `γ ≥ 0`
//!
//! ```text
//! ⟨v, x*⟩ = γ‖x*‖_𝒜,   ‖v_G‖ = γ for G ∈ 𝒢*,   ‖v_G‖ ≤ γ for G ∉ 𝒢*.
//! ```
//!
//! The squared Gaussian width of the tangent cone is bounded by
//! `E[dist(w, 𝒩)²]`, which [`estimate_width_sq`] bounds from above by
//! building an explicit cone member `r(w)` for every Gaussian draw `w`:
//! `r_S = t(w)·v_S`, `r_{S^c} = w_{S^c}` with `t(w) = max_{G ∉ 𝒢*} ‖w_G‖`.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{chisq_max_bound, group_bound};
use crate::error::{check_dim, Error, Result};
use crate::group_model::{make_scenario, sample_signal, ActiveSet, ScenarioKind, ScenarioParams, ValueLaw};
use crate::norms::{atomic_norm, dual_atomic_norm};
use crate::rng::{derive_seed, label, rng_from_seed};
use crate::Vector;

/// Tolerance used when membership-checking the constructed cone points.
pub const CONE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalConeCertificate {
    pub gamma: f64,
    pub active_norms: Vec<f64>,
    pub inactive_max: f64,
    /// `|⟨v, x*⟩ − γ‖x*‖_𝒜|`
    pub gap: f64,
    pub member: bool,
}

/// Checks normal-cone membership with `γ = max_{G ∈ 𝒢*} ‖v_G‖`.
///
/// Conditions are tested with tolerances scaled by `1 + γ` (and by
/// `1 + γ‖x*‖_𝒜` for the inner product).
pub fn check_normal_cone(
    v: &Vector,
    x_star: &Vector,
    active: &ActiveSet<'_>,
    tol: f64,
) -> Result<NormalConeCertificate> {
    let (norm, _) = atomic_norm(x_star, active.structure(), (tol * 1e-3).min(1e-8))?;
    check_normal_cone_with_norm(v, x_star, norm, active, tol)
}

/// [`check_normal_cone`] with `‖x*‖_𝒜` supplied by the caller.
pub fn check_normal_cone_with_norm(
    v: &Vector,
    x_star: &Vector,
    x_star_norm: f64,
    active: &ActiveSet<'_>,
    tol: f64,
) -> Result<NormalConeCertificate> {
    let g = active.structure();
    check_dim(g.p(), v.len())?;
    check_dim(g.p(), x_star.len())?;
    let active_norms: Vec<f64> = active.active().iter().map(|&gi| g.group_norm(v, gi)).collect();
    let gamma = active_norms.iter().copied().fold(0.0, f64::max);
    let inactive_max = active.inactive().map(|gi| g.group_norm(v, gi)).fold(0.0, f64::max);
    let gap = (v.dot(x_star) - gamma * x_star_norm).abs();

    let slack = tol * (1.0 + gamma);
    let member = gap <= tol * (1.0 + gamma * x_star_norm)
        && active_norms.iter().all(|n| (n - gamma).abs() <= slack)
        && inactive_max <= gamma + slack;
    Ok(NormalConeCertificate { gamma, active_norms, inactive_max, gap, member })
}

/// Closed-form normal-cone point for disjoint groups.
///
/// Active blocks are `γ·x*_G/‖x*_G‖` (per-group normalisation), inactive
/// blocks are `w_G` projected onto the ball of radius `γ`, and uncovered
/// coordinates are zero. An active block where `x*` vanishes gets `γ` times
/// the first basis vector of the group.
pub fn disjoint_cone_point(x_star: &Vector, active: &ActiveSet<'_>, gamma: f64, w: &Vector) -> Result<Vector> {
    let g = active.structure();
    if !g.is_disjoint() {
        return Err(Error::Unsupported("closed-form normal cone points require disjoint groups".into()));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
    }
    check_dim(g.p(), x_star.len())?;
    check_dim(g.p(), w.len())?;
    let mut z = Vector::zeros(g.p());
    for gi in 0..g.num_groups() {
        let group = g.group(gi);
        if active.is_active(gi) {
            let norm = g.group_norm(x_star, gi);
            if norm > 0.0 {
                for &i in group {
                    z[i] = gamma * x_star[i] / norm;
                }
            } else {
                z[group[0]] = gamma;
            }
        } else {
            let norm = g.group_norm(w, gi);
            let factor = if norm > gamma { gamma / norm } else { 1.0 };
            for &i in group {
                z[i] = factor * w[i];
            }
        }
    }
    Ok(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    /// Mean of `‖r(w) − w‖²` over accepted trials.
    pub mean: f64,
    pub std_error: f64,
    /// Mean of `min_{γ ≥ t(w)} ‖γ v_S − w_S‖²`: the same construction with
    /// the scale optimised, a tighter upper bound on `E[dist(w, 𝒩)²]`.
    pub projected_mean: f64,
    pub projected_std_error: f64,
    pub mean_t_sq: f64,
    /// `‖v_S‖²` of the unit-dual-norm cone element.
    pub v_norm_sq: f64,
    pub support_size: usize,
    pub trials: usize,
    pub accepted: usize,
    /// Trials whose constructed point failed the membership check.
    pub rejected: usize,
    /// Set when the cone element came from a numerical certificate
    /// (overlapping groups) rather than the disjoint closed form.
    pub heuristic: bool,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    fn std_error(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Upper estimate of the squared Gaussian width for a signal on `active`.
///
/// A signal with uniform `[−1, 1]` entries on `S` is drawn from `seed`; see
/// [`estimate_width_sq_for`].
pub fn estimate_width_sq(active: &ActiveSet<'_>, trials: usize, seed: u64) -> Result<WidthEstimate> {
    let x_star = sample_signal(active, ValueLaw::UniformSymmetric, derive_seed(seed, &[label("signal")])).x;
    estimate_width_sq_for(&x_star, active, trials, seed)
}

/// Monte Carlo estimate of `E‖r(w) − w‖²` for a given `x*`.
///
/// For disjoint groups `v` is the closed-form point of
/// [`disjoint_cone_point`] with `γ = 1`. For overlapping groups `v` is the
/// dual certificate of an optimal latent decomposition of `x*`, rescaled to
/// unit dual norm and restricted to `S`; this is a heuristic and every `r(w)`
/// built from it is membership-checked, with failures counted as rejected.
pub fn estimate_width_sq_for(
    x_star: &Vector,
    active: &ActiveSet<'_>,
    trials: usize,
    seed: u64,
) -> Result<WidthEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let g = active.structure();
    check_dim(g.p(), x_star.len())?;
    let (x_norm, decomposition) = atomic_norm(x_star, g, 1e-10)?;
    let support = active.union_support();
    let in_support = active.support_mask();

    let heuristic = !g.is_disjoint();
    let mut v = if heuristic {
        let eta = decomposition.certificate();
        let dual = dual_atomic_norm(eta, g)?;
        if dual > 0.0 {
            eta / dual
        } else {
            eta.clone()
        }
    } else {
        disjoint_cone_point(x_star, active, 1.0, &Vector::zeros(g.p()))?
    };
    for i in 0..g.p() {
        if !in_support[i] {
            v[i] = 0.0;
        }
    }
    let v_norm_sq: f64 = support.iter().map(|&i| v[i] * v[i]).sum();
    let inactive: Vec<usize> = active.inactive().collect();

    let per_trial: Vec<Option<(f64, f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(derive_seed(seed, &[label("width"), trial as u64]));
            let w = Vector::from_fn(g.p(), |_, _| rng.sample(StandardNormal));
            let t = inactive.iter().map(|&gi| g.group_norm(&w, gi)).fold(0.0, f64::max);
            let mut r = w.clone();
            for &i in &support {
                r[i] = t * v[i];
            }
            let cert = check_normal_cone_with_norm(&r, x_star, x_norm, active, CONE_TOL).ok()?;
            if !cert.member {
                return None;
            }
            let dist_sq = (&r - &w).norm_squared();
            let proj = if v_norm_sq > 0.0 {
                let c: f64 = support.iter().map(|&i| w[i] * v[i]).sum::<f64>() / v_norm_sq;
                let gamma = c.max(t);
                support.iter().map(|&i| (gamma * v[i] - w[i]).powi(2)).sum()
            } else {
                dist_sq
            };
            Some((dist_sq, proj, t * t))
        })
        .collect();

    let (mut dist, mut proj, mut tsq) = (Moments::default(), Moments::default(), Moments::default());
    for (d, pr, t2) in per_trial.iter().flatten() {
        dist.push(*d);
        proj.push(*pr);
        tsq.push(*t2);
    }
    Ok(WidthEstimate {
        mean: dist.mean(),
        std_error: dist.std_error(),
        projected_mean: proj.mean(),
        projected_std_error: proj.std_error(),
        mean_t_sq: tsq.mean(),
        v_norm_sq,
        support_size: support.len(),
        trials,
        accepted: dist.count,
        rejected: trials - dist.count,
        heuristic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloMean {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Empirical `E[max of L independent χ²_d]`.
///
/// Trial `i` consumes its own stream, drawing the `L` variables in order, so
/// estimates for different `L` with the same seed are coupled and the
/// estimate is non-decreasing in `L`.
pub fn estimate_chisq_max(l: usize, d: usize, trials: usize, seed: u64) -> Result<MonteCarloMean> {
    if l == 0 || d == 0 || trials == 0 {
        return Err(Error::InvalidParameter("L, d and trials must be >= 1".into()));
    }
    let maxima: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(derive_seed(seed, &[label("chisq"), d as u64, trial as u64]));
            (0..l)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            let z: f64 = rng.sample(StandardNormal);
                            z * z
                        })
                        .sum::<f64>()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let mut m = Moments::default();
    maxima.iter().for_each(|&x| m.push(x));
    Ok(MonteCarloMean { mean: m.mean(), std_error: m.std_error(), trials })
}

/// `‖v‖ ≤ √|𝒢*|·‖v‖*_𝒜` for `v` supported on the union of `active`.
///
/// Returns `(‖v‖, √|𝒢*|·‖v‖*)`. Both sides sum squares in index order so the
/// equality case compares identical floating point sums.
pub fn ball_bound_sides(v: &Vector, active: &ActiveSet<'_>) -> Result<(f64, f64)> {
    let g = active.structure();
    check_dim(g.p(), v.len())?;
    let lhs = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let rhs = (active.k() as f64).sqrt() * dual_atomic_norm(v, g)?;
    Ok((lhs, rhs))
}

/// One row of a lemma verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRecord {
    pub check: String,
    pub parameters: String,
    pub empirical: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Expected maximum of χ² variables against its closed-form bound, with a
/// slack of three standard errors.
pub fn chisq_suite(ls: &[usize], ds: &[usize], trials: usize, seed: u64) -> Result<Vec<LemmaRecord>> {
    let mut out = Vec::new();
    for &l in ls {
        for &d in ds {
            let est = estimate_chisq_max(l, d, trials, seed)?;
            let bound = chisq_max_bound(l, d);
            out.push(LemmaRecord {
                check: "chisq_max".into(),
                parameters: format!("L={l};d={d};trials={trials}"),
                empirical: est.mean,
                bound,
                pass: est.mean <= bound + 3.0 * est.std_error,
            });
        }
    }
    Ok(out)
}

/// Ball bound on random vectors supported on random active sets of every
/// scenario. Reports the worst ratio `‖v‖ / (√k‖v‖*)` per scenario.
pub fn ball_bound_suite(m: usize, b: usize, vectors: usize, seed: u64) -> Result<Vec<LemmaRecord>> {
    let mut out = Vec::new();
    for kind in ScenarioKind::ALL {
        let params = ScenarioParams { overlap: b / 2, seed };
        let g = make_scenario(kind, m, b, params)?;
        let mut rng = rng_from_seed(derive_seed(seed, &[label("ball"), label(kind.tag())]));
        let mut worst: f64 = 0.0;
        let mut violations = 0usize;
        for _ in 0..vectors {
            let k = rng.random_range(1..=m);
            let active = ActiveSet::random(&g, k, rng.random())?;
            let mut v = Vector::zeros(g.p());
            for i in active.union_support() {
                v[i] = rng.sample(StandardNormal);
            }
            let (lhs, rhs) = ball_bound_sides(&v, &active)?;
            if lhs > rhs {
                violations += 1;
            }
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
            }
        }
        out.push(LemmaRecord {
            check: "ball_bound".into(),
            parameters: format!("scenario={kind};M={m};B={b};vectors={vectors};violations={violations}"),
            empirical: worst,
            bound: 1.0,
            pass: violations == 0,
        });
    }
    Ok(out)
}

/// Width estimates against the group bound on disjoint structures.
pub fn width_suite(configs: &[(usize, usize, usize)], trials: usize, seed: u64) -> Result<Vec<LemmaRecord>> {
    let mut out = Vec::new();
    for &(m, k, b) in configs {
        let g = make_scenario(ScenarioKind::Disjoint, m, b, ScenarioParams::default())?;
        let active = ActiveSet::random(&g, k, derive_seed(seed, &[label("active"), m as u64]))?;
        let est = estimate_width_sq(&active, trials, seed)?;
        let bound = group_bound(m, k, b)?.raw;
        out.push(LemmaRecord {
            check: "width_chain".into(),
            parameters: format!(
                "M={m};k={k};B={b};trials={trials};rejected={};std_error={:.4}",
                est.rejected, est.std_error
            ),
            empirical: est.mean,
            bound,
            pass: est.rejected == 0 && est.mean <= bound + 3.0 * est.std_error,
        });
    }
    Ok(out)
}
