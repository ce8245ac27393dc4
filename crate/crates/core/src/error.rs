use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid units: {0}")]
    InvalidUnits(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid energy: {0}")]
    InvalidEnergy(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("basis field became non-finite at x = {x}; shrink the domain")]
    NonFiniteField { x: f64 },

    #[error("basis solutions are not independent (Wronskian = {wronskian})")]
    DegenerateBasis { wronskian: f64 },

    #[error("degenerate microstate: {0}")]
    DegenerateMicrostate(String),

    #[error("basis energy {basis} does not match microstate energy {microstate}")]
    EnergyMismatch { basis: f64, microstate: f64 },

    #[error("operation requires the {expected} basis convention")]
    ConventionMismatch { expected: &'static str },

    #[error("x = {x} lies outside the grid [{x_min}, {x_max}]")]
    OutOfDomain { x: f64, x_min: f64, x_max: f64 },

    #[error("phase advance between grid points near x = {x} is too large to unwrap; refine the grid")]
    UnresolvedPhase { x: f64 },

    #[error("path [{from}, {to}] enters the classically forbidden region")]
    ForbiddenRegion { from: f64, to: f64 },

    #[error("turning point: |E - V(x)| = {gap:e} at x = {x} is below the guard")]
    TurningPoint { x: f64, gap: f64 },

    #[error("turning point inside the arc [{from}, {to}]")]
    TurningPointInPath { from: f64, to: f64 },

    #[error("invalid arc: {0}")]
    InvalidArc(String),

    #[error("adaptive quadrature failed: estimated error {error:e} above tolerance {tolerance:e}")]
    QuadratureFailure { error: f64, tolerance: f64 },

    #[error("ODE step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("velocity vanished (v = {v:e})")]
    ZeroVelocity { v: f64 },

    #[error("no admissible real root for the energy quartic")]
    NoRealRoot,

    #[error("state carries no jerk; the energy quartic needs all four kinematic values")]
    MissingJerk,

    #[error("Jacobi-theorem time denominator vanishes at x = {x}")]
    SingularDenominator { x: f64 },

    #[error("branch unwrapping differs between E - dE and E + dE at x = {x}")]
    BranchMismatch { x: f64 },
}
