//! One-dimensional quantum trajectories from the quantum stationary
//! Hamilton-Jacobi equation.
//!
//! The pipeline is:
//!
//! 1. [`basis`]: two independent real solutions of the stationary
//!    Schrödinger equation (closed form for the free particle, Numerov
//!    otherwise).
//! 2. [`action`]: the reduced action `S0`, its derivatives, the quantum
//!    coordinate, the Lagrangian weight `f` and the residual checks.
//! 3. [`dynamics`]: trajectories from the velocity law `P = 2(E - V)/v` by
//!    quadrature, and from the third-order first integral by an adaptive
//!    Runge–Kutta integrator; energy recovery from raw kinematics.
//! 4. [`floyd`]: trajectories from Jacobi's theorem `t - t0 = dS0/dE` at fixed
//!    x, for comparison, plus the cycle-averaged classical limit.
//! 5. [`analytic`]: free-particle closed forms used as oracles.

pub mod action;
pub mod analytic;
pub mod basis;
pub mod dynamics;
pub mod error;
pub mod floyd;
pub mod grid;
mod interp;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod roots;
pub mod units;

pub use analytic::{
    free_action_of_time, free_state, free_trajectory, free_trajectory_states, microstate_to_trajectory_constants,
    FreeTrajectoryParams,
};
pub use action::{build_action, convert_mu_nu, ActionField, ActionPoint, Microstate, MuNuConversion};
pub use basis::{solve_basis, solve_basis_with, wronskian, BasisPair, Convention, Solver, WronskianReport};
pub use dynamics::{
    conservation_residual, derive_initial_state, fiqnl_lhs, fiqnl_residual, guarded_end, integrate_classical, integrate_fiqnl,
    integrate_quadrature, jerk_rhs, solve_energy, state_at, velocity_law, Diagnostics, EnergyRoots, RootPolicy, Route,
    StepControl, Trajectory, TrajectoryState,
};
pub use floyd::{
    cycle_average_classical_limit, floyd_free_closed, floyd_time_numeric, floyd_trajectory, sigma_gamma, CycleAverage,
    CycleSample, FloydTrajectoryPoint, SigmaGamma, Stencil,
};
pub use error::{Error, Result};
pub use grid::Grid;
pub use potential::Potential;
pub use units::Units;

/// Relative width of the turning-point guard band, in units of
/// `max(|E|, max |V| on the grid)`.
pub const TURNING_REL: f64 = 1e-9;

/// Numerical tolerances shared by the integrators.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Relative (and absolute) target of the adaptive quadrature.
    pub quad_tol: f64,
    /// Per-step relative tolerance of the embedded Runge–Kutta pair.
    pub ode_tol: f64,
    /// Relative turning-point guard.
    pub turning_rel: f64,
    /// Energy step for dS0/dE, relative to E.
    pub energy_step_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { quad_tol: 1e-10, ode_tol: 1e-9, turning_rel: TURNING_REL, energy_step_rel: 1e-6 }
    }
}
