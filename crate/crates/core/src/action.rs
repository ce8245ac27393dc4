//! Reduced action field built from a basis pair and a microstate.
//!
//! With `phi1 = theta2` and `phi2 = a theta1 + b theta2` the reduced action is
//! `S0 = hbar * arctan(phi2 / phi1) + hbar * lambda`, unwrapped into a
//! continuous function. The momentum is `P = hbar * W_phi / (phi1^2 + phi2^2)`
//! with the constant `W_phi = -a W` taken from the Wronskian at x_min, and the
//! higher derivatives follow analytically with `phi'' = q phi`. Because the
//! constant (not the pointwise) Wronskian enters `P`, the QSHJE residual
//! measures exactly the basis error.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisPair, BasisPoint, Convention};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::Potential;
use crate::quadrature;
use crate::units::Units;
use crate::TURNING_REL;

/// Non-classical integration constants selecting one reduced action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Microstate {
    pub energy: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

impl Microstate {
    pub fn new(energy: f64, a: f64, b: f64) -> Result<Self> {
        if !(energy.is_finite() && a.is_finite() && b.is_finite()) {
            return Err(Error::DegenerateMicrostate("constants must be finite".into()));
        }
        if a == 0.0 {
            return Err(Error::DegenerateMicrostate("a must be nonzero".into()));
        }
        Ok(Self { energy, a, b, lambda: 0.0 })
    }

    /// The microstate `(a, b) = (1, 0)`.
    pub fn classical(energy: f64) -> Self {
        Self { energy, a: 1.0, b: 0.0, lambda: 0.0 }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }
}

/// Result of rewriting `(mu, nu)` constants in the canonical `(a, b)` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuNuConversion {
    pub microstate: Microstate,
    /// The basis must be recombined as `(theta1, mu theta1 + theta2)`.
    pub mu: f64,
}

impl MuNuConversion {
    pub fn recombine(&self, pair: &BasisPair) -> BasisPair {
        pair.recombine(self.mu)
    }
}

/// `a = 1 - mu nu`, `b = nu`, against the basis `(theta1, mu theta1 + theta2)`.
pub fn convert_mu_nu(energy: f64, mu: f64, nu: f64) -> Result<MuNuConversion> {
    let a = 1.0 - mu * nu;
    if a == 0.0 {
        return Err(Error::DegenerateMicrostate(format!("mu * nu = 1 (mu = {mu}, nu = {nu})")));
    }
    Ok(MuNuConversion { microstate: Microstate::new(energy, a, nu)?, mu })
}

/// S0 and its first three spatial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionPoint {
    pub s0: f64,
    /// P = dS0/dx
    pub p: f64,
    /// d^2 S0 / dx^2
    pub p_d1: f64,
    /// d^3 S0 / dx^3
    pub p_d2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionField {
    pair: BasisPair,
    microstate: Microstate,
    w_phi: f64,
    guard: f64,
    angle: Vec<f64>,
    s0: Vec<f64>,
    s0_d1: Vec<f64>,
    s0_d2: Vec<f64>,
    s0_d3: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub values: Vec<f64>,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub values: Vec<Complex64>,
    /// Largest |-(hbar^2/2m) phi'' + (V - E) phi| over interior nodes.
    pub max_residual: f64,
    /// Largest imaginary part after removing the phase (arg alpha + arg beta)/2,
    /// relative to max |phi|. Zero when |alpha| = |beta|.
    pub reality_defect: f64,
}

struct Local {
    angle: f64,
    point: ActionPoint,
}

pub fn build_action(pair: &BasisPair, microstate: Microstate) -> Result<ActionField> {
    if microstate.a == 0.0 {
        return Err(Error::DegenerateMicrostate("a must be nonzero".into()));
    }
    let scale = pair.energy().abs().max(1.0);
    if (pair.energy() - microstate.energy).abs() > 1e-12 * scale {
        return Err(Error::EnergyMismatch { basis: pair.energy(), microstate: microstate.energy });
    }
    let w_phi = -microstate.a * pair.wronskian().value;
    let guard = TURNING_REL * pair.energy().abs().max(pair.potential().energy_scale(pair.grid()));
    let mut field = ActionField {
        pair: pair.clone(),
        microstate,
        w_phi,
        guard,
        angle: Vec::new(),
        s0: Vec::new(),
        s0_d1: Vec::new(),
        s0_d2: Vec::new(),
        s0_d3: Vec::new(),
    };

    let grid = *pair.grid();
    let n = grid.len();
    let hbar = pair.units().hbar();
    let mut unwrapped = 0.0;
    let mut anchor = 0.0;
    for i in 0..n {
        let x = grid.x(i);
        let local = field.local(x, pair.node(i));
        if i == 0 {
            unwrapped = local.angle;
            let (phi1, phi2) = field.phis(pair.node(0));
            let principal = if phi1 == 0.0 { FRAC_PI_2.copysign(phi2) } else { (phi2 / phi1).atan() };
            anchor = hbar * (principal + microstate.lambda) - hbar * local.angle;
        } else {
            let step = wrap(local.angle - field.angle[i - 1]);
            if step.abs() >= FRAC_PI_2 {
                return Err(Error::UnresolvedPhase { x });
            }
            unwrapped += step;
        }
        field.angle.push(local.angle);
        field.s0.push(anchor + hbar * unwrapped);
        field.s0_d1.push(local.point.p);
        field.s0_d2.push(local.point.p_d1);
        field.s0_d3.push(local.point.p_d2);
    }
    Ok(field)
}

/// Wrap an angle into (-pi, pi].
fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

impl ActionField {
    fn phis(&self, b: BasisPoint) -> (f64, f64) {
        (b.theta2, self.microstate.a * b.theta1 + self.microstate.b * b.theta2)
    }

    fn local(&self, x: f64, b: BasisPoint) -> Local {
        let Microstate { a, b: bb, .. } = self.microstate;
        let hbar = self.pair.units().hbar();
        let (phi1, phi2) = self.phis(b);
        let dphi1 = b.theta2_prime;
        let dphi2 = a * b.theta1_prime + bb * b.theta2_prime;
        let q = self.pair.q_at(x);

        let r = phi1 * phi1 + phi2 * phi2;
        let dr = 2.0 * (phi1 * dphi1 + phi2 * dphi2);
        let d2r = 2.0 * (dphi1 * dphi1 + dphi2 * dphi2) + 2.0 * q * r;
        let p = hbar * self.w_phi / r;
        let p_d1 = -p * dr / r;
        let p_d2 = p * (2.0 * dr * dr / (r * r) - d2r / r);
        Local { angle: phi2.atan2(phi1), point: ActionPoint { s0: f64::NAN, p, p_d1, p_d2 } }
    }

    /// S0 and its derivatives at any x in the grid interval.
    pub fn at(&self, x: f64) -> Result<ActionPoint> {
        let b = self.pair.eval(x)?;
        let local = self.local(x, b);
        let i = self.grid().nearest(x);
        let s0 = self.s0[i] + self.units().hbar() * wrap(local.angle - self.angle[i]);
        Ok(ActionPoint { s0, ..local.point })
    }

    pub fn grid(&self) -> &Grid {
        self.pair.grid()
    }

    pub fn pair(&self) -> &BasisPair {
        &self.pair
    }

    pub fn microstate(&self) -> Microstate {
        self.microstate
    }

    pub fn energy(&self) -> f64 {
        self.microstate.energy
    }

    pub fn units(&self) -> Units {
        self.pair.units()
    }

    pub fn potential(&self) -> &Potential {
        self.pair.potential()
    }

    pub fn convention(&self) -> Convention {
        self.pair.convention()
    }

    /// Constant phi1 phi2' - phi1' phi2 = -a W.
    pub fn w_phi(&self) -> f64 {
        self.w_phi
    }

    pub fn turning_guard(&self) -> f64 {
        self.guard
    }

    /// Override the relative turning-point guard (default 1e-9).
    pub fn with_turning_rel(mut self, rel: f64) -> Self {
        self.guard = rel * self.energy().abs().max(self.potential().energy_scale(self.grid()));
        self
    }

    pub fn s0(&self) -> &[f64] {
        &self.s0
    }

    pub fn s0_d1(&self) -> &[f64] {
        &self.s0_d1
    }

    pub fn s0_d2(&self) -> &[f64] {
        &self.s0_d2
    }

    pub fn s0_d3(&self) -> &[f64] {
        &self.s0_d3
    }

    pub fn min_abs_momentum(&self) -> f64 {
        self.s0_d1.iter().map(|p| p.abs()).fold(f64::INFINITY, f64::min)
    }

    /// E - V(x), failing inside the turning-point guard band.
    pub fn gap(&self, x: f64) -> Result<f64> {
        let gap = self.energy() - self.potential().v(x);
        if gap.abs() <= self.guard {
            return Err(Error::TurningPoint { x, gap });
        }
        Ok(gap)
    }

    fn qshje(&self, x: f64, p: f64, p_d1: f64, p_d2: f64) -> f64 {
        let u = self.units();
        let m = u.mass();
        let hbar = u.hbar();
        let lhs = p * p / (2.0 * m) + self.potential().v(x) - self.energy();
        let quantum = hbar * hbar / (4.0 * m) * (1.5 * (p_d1 / p).powi(2) - p_d2 / p);
        lhs - quantum
    }

    /// Pointwise QSHJE residual on the grid nodes.
    pub fn qshje_residual(&self) -> ResidualField {
        let values: Vec<f64> = (0..self.grid().len())
            .map(|i| self.qshje(self.grid().x(i), self.s0_d1[i], self.s0_d2[i], self.s0_d3[i]))
            .collect();
        let max_abs = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        ResidualField { values, max_abs }
    }

    pub fn qshje_residual_at(&self, x: f64) -> Result<f64> {
        let pt = self.at(x)?;
        Ok(self.qshje(x, pt.p, pt.p_d1, pt.p_d2))
    }

    /// Lagrangian weight f = P^2 / (2m (E - V)).
    pub fn f_factor(&self, x: f64) -> Result<f64> {
        let gap = self.gap(x)?;
        let p = self.at(x)?.p;
        Ok(p * p / (2.0 * self.units().mass() * gap))
    }

    /// L = m v^2 f / 2 - V.
    pub fn lagrangian(&self, x: f64, v: f64) -> Result<f64> {
        let f = self.f_factor(x)?;
        Ok(0.5 * self.units().mass() * v * v * f - self.potential().v(x))
    }

    /// Quantum coordinate: integral of P / sqrt(2m (E - V)) from `x_ref` to `x`.
    /// Only defined when the whole path is classically allowed.
    pub fn quantum_coordinate(&self, x_ref: f64, x: f64, tol: f64) -> Result<f64> {
        self.grid().check_contains(x_ref)?;
        self.grid().check_contains(x)?;
        if self.energy() - self.potential().max_on(x_ref, x) <= self.guard {
            return Err(Error::ForbiddenRegion { from: x_ref, to: x });
        }
        let two_m = 2.0 * self.units().mass();
        let integrand = |y: f64| -> Result<f64> {
            let gap = self.energy() - self.potential().v(y);
            Ok(self.at(y)?.p / (two_m * gap).sqrt())
        };
        self.integrate_cells(integrand, x_ref, x, tol)
    }

    /// Integrate across grid cells so the Hermite-interpolated data are smooth
    /// on every piece.
    pub(crate) fn integrate_cells<F>(&self, f: F, a: f64, b: f64, tol: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if a == b {
            return Ok(0.0);
        }
        if self.pair.is_analytic() {
            return quadrature::try_integrate(&f, a, b, tol, tol).map(|q| q.value);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let grid = self.grid();
        let mut cuts = vec![lo];
        let (first, _) = grid.locate(lo);
        for i in first + 1..grid.len() {
            let xi = grid.x(i);
            if xi >= hi {
                break;
            }
            if xi > lo {
                cuts.push(xi);
            }
        }
        cuts.push(hi);
        let span = hi - lo;
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let share = tol * (w[1] - w[0]) / span;
            total += quadrature::try_integrate(&f, w[0], w[1], share, tol)?.value;
        }
        Ok(sign * total)
    }

    /// phi = |P|^(-1/2) [alpha exp(i S0/hbar) + beta exp(-i S0/hbar)] on the grid.
    ///
    /// For negative P the factor (S0')^(-1/2) only contributes a constant phase,
    /// which is dropped.
    pub fn reconstruct_wavefunction(&self, alpha: Complex64, beta: Complex64) -> Wavefunction {
        let hbar = self.units().hbar();
        let values: Vec<Complex64> = self
            .s0
            .iter()
            .zip(&self.s0_d1)
            .map(|(&s, &p)| {
                let phase = Complex64::from_polar(1.0, s / hbar);
                (alpha * phase + beta * phase.conj()) / p.abs().sqrt()
            })
            .collect();

        let grid = self.grid();
        let h = grid.spacing();
        let u = self.units();
        let kin = hbar * hbar / (2.0 * u.mass());
        let n = values.len();
        let max_residual = (2..n - 2)
            .map(|i| {
                let d2 = (-values[i - 2] + 16.0 * values[i - 1] - 30.0 * values[i] + 16.0 * values[i + 1] - values[i + 2])
                    / (12.0 * h * h);
                let x = grid.x(i);
                (-kin * d2 + (self.potential().v(x) - self.energy()) * values[i]).norm()
            })
            .fold(0.0, f64::max);

        let chi = 0.5 * (alpha.arg() + beta.arg());
        let rot = Complex64::from_polar(1.0, -chi);
        let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let reality_defect = values.iter().map(|v| (v * rot).im.abs()).fold(0.0, f64::max) / peak;

        Wavefunction { values, max_residual, reality_defect }
    }
}
