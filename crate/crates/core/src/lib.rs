//! Exact reduced dynamics of quadratic fermionic systems coupled to a Gaussian
//! environment.
//!
//! The pipeline has three stages:
//!
//! 1. [`model`]: the system Hamiltonian, its Bogoliubov diagonalization and the
//!    Majorana-basis generator.
//! 2. [`kernels`] and [`dyson`]: the bare environment correlation, the
//!    system self-energy and the series solution of the real-time Dyson
//!    equation for the dressed kernel.
//! 3. [`propagator`]: the memory matrix, the Lyapunov coefficients and the
//!    Runge–Kutta integration of the covariance matrix.
//!
//! [`oracle`] evolves a finite discretized bath exactly and serves as ground
//! truth; [`fock`] is a brute-force many-body reference for a handful of modes.

pub mod dyson;
pub mod error;
pub mod fock;
pub mod grid;
pub mod io;
pub mod kernels;
mod linalg;
pub mod model;
pub mod oracle;
pub mod propagator;

pub use num_complex::Complex64 as C64;

pub use dyson::{solve_dyson, DysonProblem, DysonSolution, SelfEnergy};
pub use error::{GmeError, Result};
pub use grid::TimeGrid;
pub use kernels::{SpectralDensity, StepConvention, TwoTimeKernel};
pub use model::{
    BogoliubovData, InitialState, MajoranaGenerator, NambuMatrix, QuadraticModel, Statistics,
};
pub use oracle::{DiscreteBath, OracleRun};
pub use propagator::{
    CovarianceState, LyapunovCoefficients, MidpointRule, Mode, RunConfig, RunOutput, Trajectory,
};
