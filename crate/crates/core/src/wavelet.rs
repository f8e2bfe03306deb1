//! Orthonormal 1-D Haar transform, the piecewise-constant "blocks" test
//! signal, and parent-child groups on the coefficient tree.
//!
//! Coefficients use the pyramid layout: after `L` levels on a length `p`
//! signal, `data[..p/2^L]` holds the approximation, followed by the detail
//! bands from coarsest to finest. At full depth this is heap order: index 0
//! is the scaling coefficient, index 1 the coarsest detail, and detail `i`
//! has children `2i` and `2i + 1`.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::bounds::group_bound;
use crate::error::{Error, Result};
use crate::group_model::GroupStructure;
use crate::sensing::{gaussian_matrix, measure};
use crate::solver::{recover, RecoveryMode, SolverConfig};
use crate::Vector;

/// Breakpoints of the blocks signal on `[0, 1]`.
pub const BLOCKS_BREAKPOINTS: [f64; 11] = [0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
/// Jump heights at [`BLOCKS_BREAKPOINTS`].
pub const BLOCKS_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    levels: usize,
    data: Vector,
}

impl WaveletCoeffs {
    pub fn from_parts(levels: usize, data: Vector) -> Result<Self> {
        let p = data.len();
        check_power_of_two(p)?;
        if levels == 0 || levels > p.trailing_zeros() as usize {
            return Err(Error::InvalidParameter(format!(
                "levels must lie in 1..={} for length {p}",
                p.trailing_zeros()
            )));
        }
        Ok(WaveletCoeffs { levels, data })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_vector(&self) -> &Vector {
        &self.data
    }

    pub fn into_vector(self) -> Vector {
        self.data
    }

    pub fn approximation(&self) -> &[f64] {
        &self.data.as_slice()[..self.data.len() >> self.levels]
    }

    /// Detail band `level`, where 1 is the finest.
    pub fn detail(&self, level: usize) -> &[f64] {
        assert!((1..=self.levels).contains(&level), "detail level out of range");
        let p = self.data.len();
        &self.data.as_slice()[p >> level..p >> (level - 1)]
    }
}

fn check_power_of_two(p: usize) -> Result<()> {
    if p < 2 || !p.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("length must be a power of two >= 2, got {p}")));
    }
    Ok(())
}

pub fn haar_forward(x: &Vector, levels: usize) -> Result<WaveletCoeffs> {
    let p = x.len();
    check_power_of_two(p)?;
    let mut data = x.clone();
    let mut scratch = vec![0.0; p];
    let mut len = p;
    for _ in 0..levels.min(p.trailing_zeros() as usize) {
        let half = len / 2;
        for i in 0..half {
            let (a, b) = (data[2 * i], data[2 * i + 1]);
            scratch[i] = (a + b) * FRAC_1_SQRT_2;
            scratch[half + i] = (a - b) * FRAC_1_SQRT_2;
        }
        data.as_mut_slice()[..len].copy_from_slice(&scratch[..len]);
        len = half;
    }
    WaveletCoeffs::from_parts(levels, data)
}

pub fn haar_inverse(c: &WaveletCoeffs) -> Vector {
    let p = c.len();
    let mut data = c.data.clone();
    let mut scratch = vec![0.0; p];
    let mut len = p >> c.levels;
    for _ in 0..c.levels {
        for i in 0..len {
            let (a, d) = (data[i], data[len + i]);
            scratch[2 * i] = (a + d) * FRAC_1_SQRT_2;
            scratch[2 * i + 1] = (a - d) * FRAC_1_SQRT_2;
        }
        len *= 2;
        data.as_mut_slice()[..len].copy_from_slice(&scratch[..len]);
    }
    data
}

/// Blocks signal sampled at `t = i/p`, `i = 0..p`: the sum of the heights of
/// all breakpoints at or before `t`.
pub fn blocks_signal(p: usize) -> Result<Vector> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("blocks signal needs p >= 2, got {p}")));
    }
    Ok(Vector::from_fn(p, |i, _| {
        let t = i as f64 / p as f64;
        BLOCKS_BREAKPOINTS.iter().zip(BLOCKS_HEIGHTS).filter(|(&b, _)| t >= b).map(|(_, h)| h).sum()
    }))
}

/// One group `{i, child}` per edge of the full-depth detail tree, in heap
/// indexing (see the module docs). `M = p − 2`, `B = 2`; the scaling
/// coefficient (index 0) is left uncovered.
pub fn parent_child_groups(p: usize) -> Result<GroupStructure> {
    check_power_of_two(p)?;
    if p < 4 {
        return Err(Error::InvalidParameter(format!("parent-child groups need p >= 4, got {p}")));
    }
    let groups = (1..p / 2).flat_map(|i| [vec![i, 2 * i], vec![i, 2 * i + 1]]).collect();
    GroupStructure::new(p, groups)
}

/// [`parent_child_groups`] plus the singleton `{0}` for the scaling
/// coefficient, so every coefficient is recoverable.
pub fn recovery_groups(p: usize) -> Result<GroupStructure> {
    let pc = parent_child_groups(p)?;
    let mut groups = vec![vec![0]];
    groups.extend(pc.groups().iter().cloned());
    GroupStructure::new(p, groups)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCount {
    /// Smallest number of groups of [`recovery_groups`] whose union covers
    /// the support.
    pub cover: usize,
    /// Number of groups of [`recovery_groups`] touching the support.
    pub intersecting: usize,
    pub support: usize,
}

/// Counts active groups for full-depth Haar coefficients thresholded at
/// `threshold`.
///
/// The minimum cover is `|support| − ν`, with `ν` a maximum matching of the
/// tree edges inside the support: every support node can be paired with
/// some neighbour, and each matched edge saves one group. The greedy
/// deepest-first matching is optimal on trees.
pub fn count_active_groups(coeffs: &Vector, threshold: f64) -> Result<GroupCount> {
    let p = coeffs.len();
    let structure = recovery_groups(p)?;
    let in_support: Vec<bool> = coeffs.iter().map(|c| c.abs() > threshold).collect();
    let support: Vec<usize> = (0..p).filter(|&i| in_support[i]).collect();

    let mut matched = vec![false; p];
    let mut matching = 0;
    for i in (2..p).rev() {
        let parent = i / 2;
        if in_support[i] && in_support[parent] && !matched[i] && !matched[parent] {
            matched[i] = true;
            matched[parent] = true;
            matching += 1;
        }
    }
    Ok(GroupCount {
        cover: support.len() - matching,
        intersecting: structure.groups_intersecting(&support).len(),
        support: support.len(),
    })
}

/// Threshold for counting a coefficient as part of the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct WaveletReport {
    pub p: usize,
    /// Parent-child groups, `p − 2`.
    pub m: usize,
    pub groups: GroupCount,
    pub n: usize,
    pub bound_raw: f64,
    pub relative_error: f64,
    pub signal: Vector,
    pub reconstruction: Vector,
    pub converged: bool,
}

/// Measures the Haar coefficients of the blocks signal with
/// `n = ⌈group_bound(p − 2, k, 2)⌉` Gaussian rows, where `k` is the minimum
/// group cover of the support, and recovers them with the latent group norm.
pub fn blocks_experiment(p: usize, seed: u64, cfg: &SolverConfig) -> Result<WaveletReport> {
    let signal = blocks_signal(p)?;
    let coeffs = haar_forward(&signal, p.trailing_zeros() as usize)?;
    let groups = count_active_groups(coeffs.as_vector(), SUPPORT_THRESHOLD)?;
    let m = p - 2;
    let bound = group_bound(m, groups.cover, 2)?;
    let n = bound.measurements as usize;
    let structure = recovery_groups(p)?;
    let ensemble = gaussian_matrix(n, p, seed)?;
    let obs = measure(&ensemble, coeffs.as_vector(), 0.0, 0)?;
    let result = recover(&ensemble, &obs, &structure, cfg, RecoveryMode::Exact)?.with_truth(coeffs.as_vector());
    let recovered = WaveletCoeffs::from_parts(coeffs.levels(), result.x_hat.clone())?;
    let reconstruction = haar_inverse(&recovered);
    let relative_error = (&reconstruction - &signal).norm() / signal.norm();
    Ok(WaveletReport {
        p,
        m,
        groups,
        n,
        bound_raw: bound.raw,
        relative_error,
        signal,
        reconstruction,
        converged: result.converged,
    })
}
