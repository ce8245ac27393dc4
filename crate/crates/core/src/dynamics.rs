//! Quantum trajectories: the velocity law, the third-order first integral,
//! and recovery of the energy from kinematic data.

use serde::{Deserialize, Serialize};

use crate::action::{ActionField, Microstate};
use crate::error::{Error, Result};
use crate::interp::quintic_hermite;
use crate::ode::{dopri5, Stepping};
use crate::potential::Potential;
use crate::roots::real_roots;
use crate::units::Units;
use crate::TURNING_REL;

/// How a trajectory was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Route {
    /// t(x) from the velocity law by quadrature.
    Quadrature,
    /// Time integration of the third-order equation of motion.
    Fiqnl,
    /// Jacobi's theorem t - t0 = dS0/dE.
    FloydJacobi,
    /// Free-particle closed form.
    ClosedForm,
    /// Newton's law (no quantum correction).
    Classical,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Quadrature => "quadrature",
            Self::Fiqnl => "fiqnl",
            Self::FloydJacobi => "floyd",
            Self::ClosedForm => "closed-form",
            Self::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub acc: f64,
    pub jerk: Option<f64>,
}

/// Per-state consistency checks. `None` where a check cannot be evaluated
/// (no action field, state outside its grid, or no jerk).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub conservation: Option<f64>,
    pub fiqnl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub route: Route,
    pub energy: f64,
    pub microstate: Option<Microstate>,
    pub states: Vec<TrajectoryState>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub(crate) fn new(route: Route, energy: f64, microstate: Option<Microstate>, states: Vec<TrajectoryState>, diagnostics: Vec<Diagnostics>) -> Self {
        Self { route, energy, microstate, states, diagnostics }
    }

    pub fn start(&self) -> &TrajectoryState {
        &self.states[0]
    }

    pub fn end(&self) -> &TrajectoryState {
        self.states.last().expect("trajectories hold at least one state")
    }

    pub fn max_conservation(&self) -> Option<f64> {
        max_abs(self.diagnostics.iter().map(|d| d.conservation))
    }

    pub fn max_fiqnl(&self) -> Option<f64> {
        max_abs(self.diagnostics.iter().map(|d| d.fiqnl))
    }

    /// x(t) by quintic Hermite interpolation of (x, v, acc) between stored
    /// states. `None` outside the covered time span.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let (first, last) = (self.start().t, self.end().t);
        let (lo, hi) = if first <= last { (first, last) } else { (last, first) };
        if !(lo..=hi).contains(&t) {
            return None;
        }
        if self.states.len() == 1 {
            return Some(self.states[0].x);
        }
        let ascending = first <= last;
        let k = self.states.partition_point(|s| if ascending { s.t < t } else { s.t > t });
        let i = k.clamp(1, self.states.len() - 1) - 1;
        let (s0, s1) = (&self.states[i], &self.states[i + 1]);
        let h = s1.t - s0.t;
        if h == 0.0 {
            return Some(s0.x);
        }
        let frac = ((t - s0.t) / h).clamp(0.0, 1.0);
        Some(quintic_hermite([s0.x, s0.v, s0.acc], [s1.x, s1.v, s1.acc], h, frac).0)
    }
}

fn max_abs(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().map(f64::abs).reduce(f64::max)
}

/// Time-stepping control for the equation-of-motion integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepControl {
    /// Embedded-error control with `rtol = atol = ode_tol`. Without an explicit
    /// cap the step is limited to 1/200 of the span so that output is dense
    /// enough for interpolation.
    Adaptive { ode_tol: f64, max_step: Option<f64> },
    Fixed { dt: f64 },
}

impl StepControl {
    pub fn adaptive(ode_tol: f64) -> Self {
        Self::Adaptive { ode_tol, max_step: None }
    }

    fn stepping(&self, span: f64) -> Result<Stepping> {
        match *self {
            Self::Adaptive { ode_tol, max_step } => {
                if !(ode_tol > 0.0 && ode_tol.is_finite()) {
                    return Err(Error::InvalidArc(format!("ode tolerance must be positive, got {ode_tol}")));
                }
                let cap = max_step.unwrap_or(span.abs() / 200.0);
                Ok(Stepping::Adaptive { rtol: ode_tol, atol: ode_tol, max_step: Some(cap) })
            }
            Self::Fixed { dt } => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(Error::InvalidArc(format!("fixed step must be positive, got {dt}")));
                }
                Ok(Stepping::Fixed { dt })
            }
        }
    }
}

/// v = 2 (E - V(x)) / P(x).
pub fn velocity_law(field: &ActionField, x: f64) -> Result<f64> {
    let gap = field.gap(x)?;
    let p = field.at(x)?.p;
    Ok(2.0 * gap / p)
}

/// Kinematic state at `x`, time stamp `t`, all derived from the action field.
pub fn state_at(field: &ActionField, x: f64, t: f64) -> Result<TrajectoryState> {
    let gap = field.gap(x)?;
    let pt = field.at(x)?;
    let pot = field.potential();
    let (dv, d2v) = (pot.dv(x), pot.d2v(x));
    let v = 2.0 * gap / pt.p;
    let acc = -v.powi(3) * pt.p_d1 / (2.0 * gap) - v * v * dv / gap;
    let jerk = (-2.0 * d2v / v + 6.0 * gap * acc * acc / v.powi(5) + 4.0 * acc * dv / v.powi(3) - pt.p_d2) * v.powi(4)
        / (2.0 * gap);
    Ok(TrajectoryState { t, x, v, acc, jerk: Some(jerk) })
}

/// Initial velocity, acceleration and jerk at `x0` (time stamp 0).
pub fn derive_initial_state(field: &ActionField, x0: f64) -> Result<TrajectoryState> {
    state_at(field, x0, 0.0)
}

/// Energy-conservation defect m v^2 f / 2 + V - E with f taken from the field.
pub fn conservation_residual(state: &TrajectoryState, field: &ActionField) -> Result<f64> {
    let f = field.f_factor(state.x)?;
    Ok(0.5 * field.units().mass() * state.v * state.v * f + field.potential().v(state.x) - field.energy())
}

/// Left-hand side of the fourth-order energy relation in y = E - V. Takes
/// raw `mass` and `hbar` so the classical limit hbar = 0 can be evaluated.
#[allow(clippy::too_many_arguments)]
pub fn fiqnl_lhs(x: f64, v: f64, acc: f64, jerk: f64, potential: &Potential, energy: f64, mass: f64, hbar: f64) -> f64 {
    let c = quartic_coefficients(x, v, acc, jerk, potential, mass, hbar);
    let y = energy - potential.v(x);
    crate::roots::horner(&c, y)
}

fn quartic_coefficients(x: f64, v: f64, acc: f64, jerk: f64, potential: &Potential, mass: f64, hbar: f64) -> [f64; 5] {
    let (dv, d2v) = (potential.dv(x), potential.d2v(x));
    let h2 = hbar * hbar;
    let c2 = if h2 == 0.0 { 0.0 } else { h2 / 8.0 * (1.5 * (acc / v).powi(2) - jerk / v) };
    [
        -3.0 * h2 / 16.0 * (v * dv).powi(2),
        -h2 / 8.0 * (v * v * d2v + acc * dv),
        c2,
        -0.5 * mass * v * v,
        1.0,
    ]
}

/// The relation above normalised by max(|E|, |V(x)|)^4; needs a jerk.
pub fn fiqnl_residual(state: &TrajectoryState, potential: &Potential, energy: f64, units: Units) -> Result<f64> {
    let jerk = state.jerk.ok_or(Error::MissingJerk)?;
    let lhs = fiqnl_lhs(state.x, state.v, state.acc, jerk, potential, energy, units.mass(), units.hbar());
    let scale = energy.abs().max(potential.v(state.x).abs());
    Ok(if scale > 0.0 { lhs / scale.powi(4) } else { lhs })
}

/// Jerk implied by the fourth-order energy relation at (x, v, acc).
pub fn jerk_rhs(x: f64, v: f64, acc: f64, potential: &Potential, energy: f64, units: Units) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::ZeroVelocity { v });
    }
    let vx = potential.v(x);
    let y = energy - vx;
    if y.abs() <= TURNING_REL * energy.abs().max(vx.abs()) {
        return Err(Error::TurningPoint { x, gap: y });
    }
    let (m, hbar) = (units.mass(), units.hbar());
    let h2 = hbar * hbar;
    let (dv, d2v) = (potential.dv(x), potential.d2v(x));
    let bracket = y.powi(4) - 0.5 * m * v * v * y.powi(3) - h2 / 8.0 * (v * v * d2v + acc * dv) * y - 3.0 * h2 / 16.0 * (v * dv).powi(2);
    Ok(1.5 * acc * acc / v + 8.0 * v / (h2 * y * y) * bracket)
}

fn diagnose(state: &TrajectoryState, potential: &Potential, energy: f64, units: Units, field: Option<&ActionField>) -> Diagnostics {
    let conservation = field.filter(|f| f.grid().contains(state.x)).and_then(|f| conservation_residual(state, f).ok());
    let fiqnl = fiqnl_residual(state, potential, energy, units).ok();
    Diagnostics { conservation, fiqnl }
}

/// End point of the arc from `x_start` towards `x_target` that stays clear of
/// turning points: `x_target` itself when the arc keeps one sign of E - V,
/// otherwise the point before the first sign change where |E - V| equals
/// twice the turning-point guard. Arrival times at that point grow without
/// bound as the guard shrinks.
pub fn guarded_end(field: &ActionField, x_start: f64, x_target: f64) -> Result<f64> {
    let grid = field.grid();
    grid.check_contains(x_start)?;
    grid.check_contains(x_target)?;
    let e = field.energy();
    let pot = field.potential();
    let gap0 = field.gap(x_start)?;
    let side = gap0.signum();
    let level = 2.0 * field.turning_guard();
    let clear = |x: f64| side * (e - pot.v(x)) - level;
    if clear(x_start) <= 0.0 {
        return Err(Error::TurningPoint { x: x_start, gap: gap0 });
    }

    // march in grid-sized steps, then bisect the first bracket
    let h = grid.spacing();
    let n = ((x_target - x_start).abs() / h).ceil().max(1.0) as usize;
    let mut prev = x_start;
    for i in 1..=n {
        let x = if i == n { x_target } else { x_start + (x_target - x_start) * i as f64 / n as f64 };
        if clear(x) <= 0.0 {
            let (mut inside, mut outside) = (prev, x);
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if mid == inside || mid == outside {
                    break;
                }
                if clear(mid) > 0.0 {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            return Ok(inside);
        }
        prev = x;
    }
    Ok(x_target)
}

/// Trajectory from `x_start` to `x_end` by t = t0 + integral of P / (2 (E - V)).
///
/// States are reported at `x_start`, every grid node strictly between, and
/// `x_end`. The arc must follow the sign of the velocity and must not cross a
/// turning point.
pub fn integrate_quadrature(field: &ActionField, x_start: f64, x_end: f64, t_start: f64, tol: f64) -> Result<Trajectory> {
    let grid = field.grid();
    grid.check_contains(x_start)?;
    grid.check_contains(x_end)?;
    let (lo, hi) = if x_start <= x_end { (x_start, x_end) } else { (x_end, x_start) };
    let e = field.energy();
    let pot = field.potential();
    let guard = field.turning_guard();
    let allowed = e - pot.max_on(lo, hi) > guard;
    let forbidden = pot.min_on(lo, hi) - e > guard;
    if !allowed && !forbidden {
        return Err(Error::TurningPointInPath { from: x_start, to: x_end });
    }

    let first = state_at(field, x_start, t_start)?;
    let dir = x_end - x_start;
    if dir != 0.0 && dir.signum() != first.v.signum() {
        return Err(Error::InvalidArc(format!(
            "velocity at x = {x_start} is {:e}; the arc towards {x_end} runs against the motion",
            first.v
        )));
    }

    let mut xs = vec![x_start];
    let interior = grid.points().filter(|&x| x > lo && x < hi);
    if dir > 0.0 {
        xs.extend(interior);
    } else {
        let mut v: Vec<f64> = interior.collect();
        v.reverse();
        xs.extend(v);
    }
    if dir != 0.0 {
        xs.push(x_end);
    }

    let integrand = |x: f64| -> Result<f64> {
        let gap = e - pot.v(x);
        Ok(field.at(x)?.p / (2.0 * gap))
    };
    let units = field.units();
    let mut states = vec![first];
    let mut t = t_start;
    for w in xs.windows(2) {
        t += field.integrate_cells(integrand, w[0], w[1], tol)?;
        states.push(state_at(field, w[1], t)?);
    }
    let diagnostics = states.iter().map(|s| diagnose(s, pot, e, units, Some(field))).collect();
    Ok(Trajectory::new(Route::Quadrature, e, Some(field.microstate()), states, diagnostics))
}

/// Integrate the third-order equation of motion (x, v, acc) from `initial`
/// to `t_end`. With a field, per-state conservation residuals are recorded.
pub fn integrate_fiqnl(
    initial: TrajectoryState,
    potential: &Potential,
    energy: f64,
    units: Units,
    t_end: f64,
    control: StepControl,
    field: Option<&ActionField>,
) -> Result<Trajectory> {
    if t_end < initial.t {
        return Err(Error::InvalidArc(format!("t_end = {t_end} precedes the initial time {}", initial.t)));
    }
    let stepping = control.stepping(t_end - initial.t)?;
    let rhs = |_t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        Ok([y[1], y[2], jerk_rhs(y[0], y[1], y[2], potential, energy, units)?])
    };
    let solution = dopri5(rhs, initial.t, [initial.x, initial.v, initial.acc], t_end, stepping)?;
    let states: Vec<TrajectoryState> = solution
        .into_iter()
        .map(|(t, y)| {
            let jerk = jerk_rhs(y[0], y[1], y[2], potential, energy, units)?;
            Ok(TrajectoryState { t, x: y[0], v: y[1], acc: y[2], jerk: Some(jerk) })
        })
        .collect::<Result<_>>()?;
    let diagnostics = states.iter().map(|s| diagnose(s, potential, energy, units, field)).collect();
    Ok(Trajectory::new(Route::Fiqnl, energy, field.map(|f| f.microstate()), states, diagnostics))
}

/// Newtonian trajectory at energy E starting at `x0`, moving in the direction
/// of `direction`'s sign.
#[allow(clippy::too_many_arguments)]
pub fn integrate_classical(
    potential: &Potential,
    energy: f64,
    units: Units,
    x0: f64,
    direction: f64,
    t0: f64,
    t_end: f64,
    control: StepControl,
) -> Result<Trajectory> {
    let m = units.mass();
    let kinetic = energy - potential.v(x0);
    if kinetic < 0.0 {
        return Err(Error::ForbiddenRegion { from: x0, to: x0 });
    }
    if direction == 0.0 || !direction.is_finite() {
        return Err(Error::InvalidArc("direction must be a nonzero number".into()));
    }
    if t_end < t0 {
        return Err(Error::InvalidArc(format!("t_end = {t_end} precedes the initial time {t0}")));
    }
    let v0 = direction.signum() * (2.0 * kinetic / m).sqrt();
    let stepping = control.stepping(t_end - t0)?;
    let solution = dopri5(|_t, y: &[f64; 2]| Ok([y[1], -potential.dv(y[0]) / m]), t0, [x0, v0], t_end, stepping)?;
    let states: Vec<TrajectoryState> = solution
        .into_iter()
        .map(|(t, [x, v])| TrajectoryState { t, x, v, acc: -potential.dv(x) / m, jerk: Some(-potential.d2v(x) * v / m) })
        .collect();
    let diagnostics = states
        .iter()
        .map(|s| Diagnostics { conservation: Some(0.5 * m * s.v * s.v + potential.v(s.x) - energy), fiqnl: None })
        .collect();
    Ok(Trajectory::new(Route::Classical, energy, None, states, diagnostics))
}

/// Rule for picking one energy among the real roots of the quartic.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum RootPolicy {
    /// Root whose kinetic share y = E - V is closest to m v^2 / 2.
    #[default]
    ClosestToClassical,
    /// Root closest to a reference energy (continuation along a trajectory).
    NearestTo(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRoots {
    /// Every real root, as an energy, ascending.
    pub roots: Vec<f64>,
    pub selected: f64,
    pub policy: RootPolicy,
}

/// Recover the energy from (x, v, acc, jerk).
///
/// The quartic in y = E - V is the energy relation multiplied through by y^2,
/// so when V'(x) = 0 it acquires a spurious root y = 0 that is never a valid
/// energy (the relation divides by E - V). Roots inside the turning-point band
/// are therefore listed but never selected.
pub fn solve_energy(state: &TrajectoryState, potential: &Potential, units: Units, policy: RootPolicy) -> Result<EnergyRoots> {
    let v = state.v;
    if v == 0.0 || !v.is_finite() {
        return Err(Error::ZeroVelocity { v });
    }
    let jerk = state.jerk.ok_or(Error::MissingJerk)?;
    let c = quartic_coefficients(state.x, v, state.acc, jerk, potential, units.mass(), units.hbar());
    let vx = potential.v(state.x);
    let ys = real_roots(&c);
    let classical = 0.5 * units.mass() * v * v;
    let guard = TURNING_REL * vx.abs().max(classical);

    let selected_y = ys
        .iter()
        .copied()
        .filter(|y| y.abs() > guard)
        .min_by(|a, b| {
            let key = |y: f64| match policy {
                RootPolicy::ClosestToClassical => (y - classical).abs(),
                RootPolicy::NearestTo(e) => (y + vx - e).abs(),
            };
            key(*a).total_cmp(&key(*b))
        })
        .ok_or(Error::NoRealRoot)?;
    Ok(EnergyRoots { roots: ys.iter().map(|y| y + vx).collect(), selected: selected_y + vx, policy })
}
