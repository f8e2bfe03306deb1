//! The latent (overlapping) group lasso norm
//!
//! ```text
//! ‖x‖_𝒜 = inf { Σ_G ‖v_G‖ : Σ_G v_G = x, supp(v_G) ⊆ G }
//! ```
//!
//! which is the gauge of the convex hull of unit-norm vectors supported on a
//! single group, and its dual `‖u‖*_𝒜 = max_G ‖u_G‖`. The atom set itself is
//! never materialised.

use crate::error::{check_dim, Error, Result};
use crate::group_model::{replicate, GroupStructure};
use crate::solver::latent_decomposition;
use crate::Vector;

/// Default relative tolerance of [`atomic_norm`].
pub const DEFAULT_TOL: f64 = 1e-8;

const MAX_ITER: usize = 500_000;

/// A latent decomposition `x = Σ_G v_G` with each `v_G` supported on `G`.
#[derive(Debug, Clone)]
pub struct GroupDecomposition {
    structure: GroupStructure,
    /// `latents[g][j]` is the coefficient of index `structure.group(g)[j]`.
    latents: Vec<Vec<f64>>,
    value: f64,
    certificate: Vector,
    iterations: usize,
    converged: bool,
}

impl GroupDecomposition {
    pub fn structure(&self) -> &GroupStructure {
        &self.structure
    }

    pub fn latents(&self) -> &[Vec<f64>] {
        &self.latents
    }

    /// `v_G` as a dense vector in `ℝ^p`.
    pub fn latent(&self, g: usize) -> Vector {
        let mut v = Vector::zeros(self.structure.p());
        for (&i, &val) in self.structure.group(g).iter().zip(&self.latents[g]) {
            v[i] = val;
        }
        v
    }

    /// `Σ_G ‖v_G‖`.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn group_norms(&self) -> Vec<f64> {
        self.latents.iter().map(|v| v.iter().map(|a| a * a).sum::<f64>().sqrt()).collect()
    }

    /// Number of latents with norm above `tol`.
    pub fn active_count(&self, tol: f64) -> usize {
        self.group_norms().into_iter().filter(|&n| n > tol).count()
    }

    /// `Σ_G v_G`.
    pub fn reconstruct(&self) -> Vector {
        let mut x = Vector::zeros(self.structure.p());
        for (group, v) in self.structure.groups().iter().zip(&self.latents) {
            for (&i, &val) in group.iter().zip(v) {
                x[i] += val;
            }
        }
        x
    }

    /// Dual certificate `η` with `‖η‖* ≤ 1` (up to solver tolerance) and
    /// `⟨η, x⟩ = ‖x‖_𝒜`: a subgradient of the norm at `x`.
    pub fn certificate(&self) -> &Vector {
        &self.certificate
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }
}

/// `max_G ‖u_G‖`.
pub fn dual_atomic_norm(u: &Vector, g: &GroupStructure) -> Result<f64> {
    check_dim(g.p(), u.len())?;
    Ok((0..g.num_groups()).map(|gi| g.group_norm(u, gi)).fold(0.0, f64::max))
}

/// Fails when `x` has mass on a coordinate no group covers.
pub(crate) fn check_cover(x: &Vector, g: &GroupStructure) -> Result<()> {
    let cover = g.cover_mask();
    if let Some(i) = (0..x.len()).find(|&i| !cover[i] && x[i] != 0.0) {
        return Err(Error::Infeasible(format!("coordinate {i} is non-zero but not covered by any group")));
    }
    Ok(())
}

/// Evaluates `‖x‖_𝒜` numerically and returns an optimal decomposition.
///
/// The decomposition is exactly feasible (up to round-off), so the returned
/// value is an upper bound on the norm that is tight to `tol` relative.
pub fn atomic_norm(x: &Vector, g: &GroupStructure, tol: f64) -> Result<(f64, GroupDecomposition)> {
    check_dim(g.p(), x.len())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    check_cover(x, g)?;
    let rep = replicate(g);
    let out = latent_decomposition(x, &rep, tol, MAX_ITER);
    let latents = rep.split(&out.latent);
    let value = latents.iter().map(|v| v.iter().map(|a| a * a).sum::<f64>().sqrt()).sum();
    let decomposition = GroupDecomposition {
        structure: g.clone(),
        latents,
        value,
        certificate: out.certificate,
        iterations: out.iterations,
        converged: out.converged,
    };
    Ok((value, decomposition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::{make_scenario, sample_signal, ActiveSet, ScenarioKind, ScenarioParams, ValueLaw};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    /// Golden-section search for min_t √(1+t²) + √(1+(1−t)²).
    fn split_oracle() -> f64 {
        let f = |t: f64| (1.0 + t * t).sqrt() + (1.0 + (1.0 - t) * (1.0 - t)).sqrt();
        let (mut a, mut b) = (-2.0f64, 3.0f64);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        f(0.5 * (a + b))
    }

    #[test]
    fn dual_norm_examples() {
        let u = v(&[3.0, -1.0, 2.0]);
        let singles = GroupStructure::singletons(3).unwrap();
        assert_eq!(dual_atomic_norm(&u, &singles).unwrap(), 3.0);
        let whole = GroupStructure::new(3, vec![vec![0, 1, 2]]).unwrap();
        assert!((dual_atomic_norm(&u, &whole).unwrap() - 14f64.sqrt()).abs() < 1e-15);
        let g = GroupStructure::new(2, vec![vec![0], vec![1], vec![0, 1]]).unwrap();
        assert_eq!(dual_atomic_norm(&v(&[3.0, 4.0]), &g).unwrap(), 5.0);
        assert!(dual_atomic_norm(&v(&[1.0]), &g).is_err());
        // zero on the cover, non-zero off it
        let partial = GroupStructure::new(3, vec![vec![0, 1]]).unwrap();
        assert_eq!(dual_atomic_norm(&v(&[0.0, 0.0, 7.0]), &partial).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_pair_matches_line_search_oracle() {
        let expected = split_oracle();
        assert!((expected - 2.0 * 1.25f64.sqrt()).abs() < 1e-12);
        let g = GroupStructure::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let (value, dec) = atomic_norm(&v(&[1.0, 1.0, 1.0]), &g, DEFAULT_TOL).unwrap();
        assert!((value - expected).abs() < 1e-7 * expected, "{value} vs {expected}");
        assert!(dec.converged());
        assert!((dec.reconstruct() - v(&[1.0, 1.0, 1.0])).norm() < 1e-12);
        // coordinate 1 is split evenly
        assert!((dec.latents()[0][1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn disjoint_and_single_group_closed_forms() {
        let g = make_scenario(ScenarioKind::Disjoint, 4, 3, ScenarioParams::default()).unwrap();
        let a = ActiveSet::new(&g, vec![0, 2, 3]).unwrap();
        let x = sample_signal(&a, ValueLaw::UniformSymmetric, 1).x;
        let closed: f64 = (0..4).map(|gi| g.group_norm(&x, gi)).sum();
        let (value, _) = atomic_norm(&x, &g, DEFAULT_TOL).unwrap();
        assert!((value - closed).abs() < 1e-8 * closed);

        let c = make_scenario(ScenarioKind::Chain, 3, 4, ScenarioParams { overlap: 2, seed: 0 }).unwrap();
        let mut x = Vector::zeros(c.p());
        for &i in c.group(1) {
            x[i] = i as f64 - 3.0;
        }
        let (value, _) = atomic_norm(&x, &c, DEFAULT_TOL).unwrap();
        assert!((value - x.norm()).abs() < 1e-7 * x.norm(), "{value} vs {}", x.norm());
    }

    #[test]
    fn support_outside_cover_is_an_error() {
        let g = GroupStructure::new(3, vec![vec![0, 1]]).unwrap();
        assert!(matches!(atomic_norm(&v(&[1.0, 0.0, 2.0]), &g, DEFAULT_TOL), Err(Error::Infeasible(_))));
        let (value, _) = atomic_norm(&v(&[1.0, 0.0, 0.0]), &g, DEFAULT_TOL).unwrap();
        assert!((value - 1.0).abs() < 1e-8);
        assert_eq!(atomic_norm(&Vector::zeros(3), &g, DEFAULT_TOL).unwrap().0, 0.0);
    }

    #[test]
    fn unit_atoms_have_dual_norm_at_most_one() {
        let g = make_scenario(ScenarioKind::RandomOverlap, 8, 3, ScenarioParams { overlap: 0, seed: 4 }).unwrap();
        let mut rng = rng_from_seed(2);
        for gi in 0..g.num_groups() {
            let mut a = Vector::zeros(g.p());
            for &i in g.group(gi) {
                a[i] = rng.random_range(-1.0..1.0);
            }
            let a = a.normalize();
            assert!(dual_atomic_norm(&a, &g).unwrap() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn certificate_is_a_subgradient() {
        let g = make_scenario(ScenarioKind::Chain, 5, 4, ScenarioParams { overlap: 2, seed: 0 }).unwrap();
        let a = ActiveSet::new(&g, vec![1, 2]).unwrap();
        let x = sample_signal(&a, ValueLaw::UniformSymmetric, 8).x;
        let (value, dec) = atomic_norm(&x, &g, 1e-10).unwrap();
        let eta = dec.certificate();
        assert!(dual_atomic_norm(eta, &g).unwrap() <= 1.0 + 1e-6);
        assert!((eta.dot(&x) - value).abs() < 1e-6 * value);
    }

    fn chain() -> GroupStructure {
        make_scenario(ScenarioKind::Chain, 4, 3, ScenarioParams { overlap: 1, seed: 0 }).unwrap()
    }

    fn random_vec(p: usize, seed: u64) -> Vector {
        let mut rng = rng_from_seed(seed);
        Vector::from_fn(p, |_, _| rng.random_range(-1.0..1.0))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn duality_inequality(sx in any::<u64>(), su in any::<u64>()) {
            let g = chain();
            let x = random_vec(g.p(), sx);
            let u = random_vec(g.p(), su);
            let (nx, _) = atomic_norm(&x, &g, DEFAULT_TOL).unwrap();
            prop_assert!(x.dot(&u) <= nx * dual_atomic_norm(&u, &g).unwrap() + 1e-8);
        }

        #[test]
        fn positive_homogeneity(sx in any::<u64>(), c in 0.0f64..50.0) {
            let g = chain();
            let x = random_vec(g.p(), sx);
            let (nx, _) = atomic_norm(&x, &g, DEFAULT_TOL).unwrap();
            let (ncx, _) = atomic_norm(&(&x * c), &g, DEFAULT_TOL).unwrap();
            prop_assert!((ncx - c * nx).abs() <= 1e-7 * (c * nx).max(1e-12));
        }

        #[test]
        fn triangle_inequality(sx in any::<u64>(), sy in any::<u64>()) {
            let g = chain();
            let x = random_vec(g.p(), sx);
            let y = random_vec(g.p(), sy);
            let n = |z: &Vector| atomic_norm(z, &g, DEFAULT_TOL).unwrap().0;
            let lhs = n(&(&x + &y));
            prop_assert!(lhs <= (n(&x) + n(&y)) * (1.0 + 1e-7));
        }

        #[test]
        fn decomposition_value_dominates_ball_bound(sx in any::<u64>()) {
            let g = chain();
            let x = random_vec(g.p(), sx);
            let (value, dec) = atomic_norm(&x, &g, DEFAULT_TOL).unwrap();
            let used = dec.active_count(0.0).max(1) as f64;
            prop_assert!(value >= dec.reconstruct().norm() / used.sqrt() - 1e-12);
            prop_assert!((dec.reconstruct() - &x).norm() <= DEFAULT_TOL * x.norm());
            for gi in 0..g.num_groups() {
                let latent = dec.latent(gi);
                let outside = (0..g.p()).filter(|i| !g.group(gi).contains(i)).all(|i| latent[i] == 0.0);
                prop_assert!(outside);
            }
        }
    }
}
