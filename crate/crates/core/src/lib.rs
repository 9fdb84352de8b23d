//! Numerical ground states of the zero-temperature Bogoliubov energy functional
//! for a translation-invariant Bose gas with a radial interaction.
//!
//! The functional acts on a one-particle density `gamma(p)`, a real pairing
//! function `alpha(p)` and a condensate density `rho0`. Everything here works on
//! a radial momentum grid with the `(2 pi)^-3` factor folded into the measure,
//! so that `integral dp V̂(p) = V(0)`.
//!
//! Layout:
//! - [`potential`]: admissible interactions and their Fourier transforms.
//! - [`grid`]: radial quadrature and the convolution operator `g -> V̂ * g`.
//! - [`functional`]: states, energy, functional derivatives, pure-state reduction.
//! - [`solver`]: fixed-point and projected-gradient minimization, cutoff and
//!   parameter sweeps, fixed-density minimization.
//! - [`verify`]: checks of the quantitative properties of minimizers.
//! - [`io`]: the three-column state file format.

pub mod error;
pub mod functional;
pub mod grid;
pub mod io;
pub mod potential;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use functional::{
    densities, derivatives, energy, pure_gamma_of_alpha, pure_gradient, Derivatives,
    EnergyBreakdown, LowerBound, Model, State,
};
pub use grid::{build_grid, build_kernel, ConvolutionKernel, GridScheme, RadialGrid};
pub use potential::{AdmissibilityReport, Family, PotentialSpec};
pub use solver::{
    init_trial, kappa_sweep, minimize, minimize_fixed_density, minimize_restricted, mu_sweep,
    Engine, Init, KappaSweep, MuRow, SolverConfig, SolverReport,
};
pub use verify::{CheckRecord, CheckStatus, VerificationReport, VerifyOptions};
pub use io::StateFile;

/// `(2 pi)^-3 * 4 pi`: radial weight of the absorbed measure, `dp -> RADIAL_MEASURE * p^2 dp`.
pub const RADIAL_MEASURE: f64 = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
