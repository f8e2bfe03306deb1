//! Gaussian measurement ensembles and observations.
//!
//! Entries are i.i.d. `N(0, 1)`. The equality-constrained recovery program is
//! invariant to a global rescaling of `(Φ, y)`, so this agrees with the
//! `N(0, 1/n)` convention used in width-based recovery guarantees; use
//! [`MeasurementEnsemble::normalized`] where the `1/n` scaling matters (the
//! noise-robustness statement).

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::rng::rng_from_seed;
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    matrix: Matrix,
    seed: u64,
    entry_scale: f64,
}

impl MeasurementEnsemble {
    /// Wraps an explicit matrix. Used for structured test operators.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidParameter("measurement matrix must be non-empty".into()));
        }
        Ok(MeasurementEnsemble { matrix, seed: 0, entry_scale: f64::NAN })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Standard deviation of the entries (`NaN` for explicit matrices).
    pub fn entry_scale(&self) -> f64 {
        self.entry_scale
    }

    pub fn scaled(&self, factor: f64) -> Self {
        MeasurementEnsemble { matrix: &self.matrix * factor, seed: self.seed, entry_scale: self.entry_scale * factor }
    }

    /// The same draw rescaled to entry variance `1/n`.
    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / (self.n() as f64).sqrt())
    }
}

/// `n × p` matrix of i.i.d. standard normals, drawn in row-major order from
/// the ChaCha20 stream keyed by `seed`.
pub fn gaussian_matrix(n: usize, p: usize, seed: u64) -> Result<MeasurementEnsemble> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter(format!("measurement dimensions must be positive, got {n} x {p}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut matrix = Matrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            matrix[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(MeasurementEnsemble { matrix, seed, entry_scale: 1.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: Vector,
    /// Noise budget δ with `‖y − Φx*‖ ≤ δ`.
    pub delta: f64,
    pub noise_seed: u64,
}

impl Observation {
    /// An observation with no noise model attached.
    pub fn noiseless(y: Vector) -> Self {
        Observation { y, delta: 0.0, noise_seed: 0 }
    }
}

/// `y = Φx + θ` with `θ` uniform on the sphere of radius `delta`
/// (`θ = 0` when `delta = 0`).
pub fn measure(e: &MeasurementEnsemble, x: &Vector, delta: f64, noise_seed: u64) -> Result<Observation> {
    check_dim(e.p(), x.len())?;
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise budget must be >= 0, got {delta}")));
    }
    let mut y = e.matrix() * x;
    if delta > 0.0 {
        let mut rng = rng_from_seed(noise_seed);
        let mut theta = Vector::from_fn(e.n(), |_, _| rng.sample(StandardNormal));
        // Zero draw: resample.
        while theta.norm() == 0.0 {
            theta = Vector::from_fn(e.n(), |_, _| rng.sample(StandardNormal));
        }
        y += theta.normalize() * delta;
    }
    Ok(Observation { y, delta, noise_seed })
}
