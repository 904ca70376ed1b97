//! Robust optimal harvesting of a physiologically heterogeneous population.
//!
//! The crate evaluates the entropic worst-case Hamiltonian of a
//! Kullback–Leibler-penalized harvesting problem, runs an explicit monotone
//! upwind scheme for the resulting Hamilton–Jacobi–Bellman–Isaacs equation,
//! extracts optimal harvesting rates and worst-case distortions of the
//! heterogeneity density, integrates controlled population paths and fits the
//! uncertain logistic growth model to body-weight observations.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats and the command-line driver live in `harvest-cli`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod calibrate;
mod error;
pub mod growth;
pub mod policy;
pub mod robust;
pub mod solver;

pub use error::Error;

pub use calibrate::{
    grid_search_fit, loss, theoretical_moments, Candidate, FitRanges, FitResult, Observation, ObservationSet,
    ParamRange,
};
pub use growth::{density_weights, mean_weight, weight, DensityKind, GrowthSpec, HeterogeneityDensity, QuadratureGrid};
pub use policy::{
    distorted_weight_path, gradient_n, integrate_backward, integrate_forward, optimal_harvest, query, row_gradient,
    visit_policy, Direction, PolicyQuery, Trajectory, TrajectorySample,
};
pub use robust::{
    distorted_mean_weight, hamiltonian, hamiltonian_dz, hamiltonian_limit, hamiltonian_modified, kl_divergence,
    worst_case_distortion, DistortionField, Model, Mortality, Mu, ObjectiveSpec, PiecewiseLinear, Snapshot,
    TerminalUtility,
};
pub use solver::{cfl_max_dt, solve, sweep, HamiltonianForm, SolveGrid, SolveOptions, SolveWarning, ValueField};

pub type Result<T, E = Error> = core::result::Result<T, E>;
