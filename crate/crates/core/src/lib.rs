//! Recovery of signals whose support lies in a union of (possibly overlapping)
//! groups, by minimizing the latent group lasso norm under Gaussian
//! measurements.
//!
//! The crate is organised bottom-up:
//!
//! * [`group_model`]: group structures, experimental scenarios, signal
//!   sampling and the replication map that makes overlapping groups disjoint.
//! * [`norms`]: the latent group norm, its dual, and optimal decompositions.
//! * [`sensing`]: Gaussian measurement ensembles and observations.
//! * [`solver`]: proximal gradient (Barzilai-Borwein) and ADMM solvers plus
//!   λ-continuation for the equality and noise-constrained programs.
//! * [`bounds`]: closed-form measurement bounds.
//! * [`geometry_lab`]: normal-cone certificates and Monte Carlo checks of the
//!   width argument.
//! * [`wavelet`]: orthonormal Haar transform, the blocks test signal and
//!   parent-child coefficient groups.
//! * [`experiments`]: phase-transition sweeps with CSV and SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod geometry_lab;
pub mod group_model;
pub mod norms;
pub mod rng;
pub mod sensing;
pub mod solver;
pub mod wavelet;

pub use bounds::{BoundKind, BoundReport};
pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, Method, TrialRecord};
pub use geometry_lab::LemmaRecord;
pub use group_model::{ActiveSet, GroupStructure, ReplicationMap, ScenarioKind, ScenarioParams, ValueLaw};
pub use norms::GroupDecomposition;
pub use sensing::{MeasurementEnsemble, Observation};
pub use solver::{RecoveryMode, RecoveryResult, SolverConfig};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
