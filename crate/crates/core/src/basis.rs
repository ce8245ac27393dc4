//! Pairs of independent real solutions of the stationary Schrödinger equation
//!
//! ```text
//! -(hbar^2 / 2m) theta'' + V theta = E theta
//! ```
//!
//! on a uniform grid. The free particle is solved in closed form; every other
//! potential goes through a Numerov recursion started from x_min. Both members
//! and their first derivatives are stored so downstream code differentiates
//! the same data. Between grid nodes a [`BasisPair`] is evaluated exactly
//! (closed form) or by quintic Hermite interpolation using theta'' = q theta.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interp::quintic_hermite;
use crate::potential::Potential;
use crate::units::Units;

/// Normalization of the initial data at x_min.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    /// theta1 = 0, theta1' = 1, theta2 = 1, theta2' = 0. Wronskian is -1.
    SlopeOne,
    /// theta1' = sqrt(2m|E|)/hbar instead of 1, giving sin(kx), cos(kx) for
    /// the free particle with x_min = 0.
    FloydWave,
}

impl Convention {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SlopeOne => "slope_one",
            Self::FloydWave => "floyd_wave",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Closed form when the potential allows it, Numerov otherwise.
    #[default]
    Auto,
    Numerov,
}

/// Basis values at one point: `[theta1, theta1', theta2, theta2']`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPoint {
    pub theta1: f64,
    pub theta1_prime: f64,
    pub theta2: f64,
    pub theta2_prime: f64,
}

impl BasisPoint {
    pub fn wronskian(&self) -> f64 {
        self.theta1 * self.theta2_prime - self.theta1_prime * self.theta2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WronskianReport {
    /// W at x_min.
    pub value: f64,
    pub max_relative_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Free particle: rows of `mix` combine the base functions `(u1, u2)`.
    Free { mode: FreeMode, mix: [[f64; 2]; 2] },
    /// Numerov samples; `q` holds 2m(V - E)/hbar^2 at the nodes.
    Sampled { q: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum FreeMode {
    /// E > 0: u1 = c sin(k s), u2 = cos(k s).
    Oscillating { k: f64, c: f64 },
    /// E < 0: u1 = c sinh(k s), u2 = cosh(k s).
    Growing { k: f64, c: f64 },
    /// E = 0: u1 = s, u2 = 1.
    Linear,
}

impl FreeMode {
    fn eval(&self, s: f64) -> [f64; 4] {
        match *self {
            Self::Oscillating { k, c } => {
                let (sn, cs) = (k * s).sin_cos();
                [c * sn, c * k * cs, cs, -k * sn]
            }
            Self::Growing { k, c } => {
                let (sh, ch) = ((k * s).sinh(), (k * s).cosh());
                [c * sh, c * k * ch, ch, k * sh]
            }
            Self::Linear => [s, 1.0, 1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    grid: Grid,
    energy: f64,
    convention: Convention,
    units: Units,
    potential: Potential,
    theta1: Vec<f64>,
    theta1_prime: Vec<f64>,
    theta2: Vec<f64>,
    theta2_prime: Vec<f64>,
    repr: Repr,
}

pub fn solve_basis(
    potential: &Potential,
    energy: f64,
    grid: Grid,
    units: Units,
    convention: Convention,
) -> Result<BasisPair> {
    solve_basis_with(potential, energy, grid, units, convention, Solver::Auto)
}

pub fn solve_basis_with(
    potential: &Potential,
    energy: f64,
    grid: Grid,
    units: Units,
    convention: Convention,
    solver: Solver,
) -> Result<BasisPair> {
    if !energy.is_finite() {
        return Err(Error::InvalidPotential(format!("energy must be finite, got {energy}")));
    }
    let first_slope = match convention {
        Convention::SlopeOne => 1.0,
        Convention::FloydWave => units.wavenumber(energy),
    };
    if first_slope == 0.0 {
        return Err(Error::DegenerateBasis { wronskian: 0.0 });
    }
    for x in [grid.x_min(), grid.x_max()] {
        if !(potential.v(x).is_finite() && potential.dv(x).is_finite()) {
            return Err(Error::InvalidPotential(format!("V is not finite at x = {x}")));
        }
    }

    let pair = match (solver, potential) {
        (Solver::Auto, Potential::Free) => free_pair(energy, grid, units, convention, first_slope),
        _ => numerov_pair(potential, energy, grid, units, convention, first_slope)?,
    };
    let w = pair.wronskian().value;
    if w == 0.0 || !w.is_finite() {
        return Err(Error::DegenerateBasis { wronskian: w });
    }
    Ok(pair)
}

fn free_pair(energy: f64, grid: Grid, units: Units, convention: Convention, first_slope: f64) -> BasisPair {
    let k = units.wavenumber(energy);
    let c = 1.0 / if k == 0.0 { 1.0 } else { k } * first_slope;
    let mode = if energy > 0.0 {
        FreeMode::Oscillating { k, c }
    } else if energy < 0.0 {
        FreeMode::Growing { k, c }
    } else {
        FreeMode::Linear
    };
    let repr = Repr::Free { mode, mix: [[1.0, 0.0], [0.0, 1.0]] };
    let mut pair = BasisPair {
        grid,
        energy,
        convention,
        units,
        potential: Potential::Free,
        theta1: Vec::new(),
        theta1_prime: Vec::new(),
        theta2: Vec::new(),
        theta2_prime: Vec::new(),
        repr,
    };
    pair.fill_from_closed_form();
    pair
}

fn numerov_pair(
    potential: &Potential,
    energy: f64,
    grid: Grid,
    units: Units,
    convention: Convention,
    first_slope: f64,
) -> Result<BasisPair> {
    let scale = 2.0 * units.mass() / (units.hbar() * units.hbar());
    let q: Vec<f64> = grid.points().map(|x| scale * (potential.v(x) - energy)).collect();
    if let Some(i) = q.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidPotential(format!("V is not finite at x = {}", grid.x(i))));
    }

    let x0 = grid.x_min();
    let dq = [scale * potential.dv(x0), scale * potential.d2v(x0), scale * potential.d3v(x0)];
    let theta1 = numerov(&q, grid, 0.0, first_slope, dq)?;
    let theta2 = numerov(&q, grid, 1.0, 0.0, dq)?;
    let theta1_prime = derivative(&theta1, grid.spacing(), first_slope);
    let theta2_prime = derivative(&theta2, grid.spacing(), 0.0);

    Ok(BasisPair {
        grid,
        energy,
        convention,
        units,
        potential: potential.clone(),
        theta1,
        theta1_prime,
        theta2,
        theta2_prime,
        repr: Repr::Sampled { q },
    })
}

/// Numerov recursion for theta'' = q theta. The second sample comes from a
/// Taylor expansion through h^5, so the start does not limit the global
/// fourth-order accuracy.
fn numerov(q: &[f64], grid: Grid, y0: f64, dy0: f64, dq: [f64; 3]) -> Result<Vec<f64>> {
    const OVERFLOW: f64 = 1e150;
    let h = grid.spacing();
    let n = q.len();
    let q0 = q[0];
    let [q1, q2, q3] = dq;

    let d2 = q0 * y0;
    let d3 = q1 * y0 + q0 * dy0;
    let d4 = (q2 + q0 * q0) * y0 + 2.0 * q1 * dy0;
    let d5 = (q3 + 4.0 * q0 * q1) * y0 + (3.0 * q2 + q0 * q0) * dy0;
    let y1 = y0 + h * (dy0 + h * (d2 / 2.0 + h * (d3 / 6.0 + h * (d4 / 24.0 + h * d5 / 120.0))));

    let mut y = vec![0.0; n];
    y[0] = y0;
    y[1] = y1;
    let w = h * h / 12.0;
    for i in 1..n - 1 {
        let next = (2.0 * (1.0 + 5.0 * w * q[i]) * y[i] - (1.0 - w * q[i - 1]) * y[i - 1]) / (1.0 - w * q[i + 1]);
        if !next.is_finite() || next.abs() > OVERFLOW {
            return Err(Error::NonFiniteField { x: grid.x(i + 1) });
        }
        y[i + 1] = next;
    }
    Ok(y)
}

/// Fourth-order finite-difference derivative; the first entry is the exact
/// initial slope.
fn derivative(y: &[f64], h: f64, dy0: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = vec![0.0; n];
    let c = 1.0 / (12.0 * h);
    d[0] = dy0;
    d[1] = c * (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]);
    for i in 2..n - 2 {
        d[i] = c * (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]);
    }
    d[n - 2] = c * (-y[n - 5] + 6.0 * y[n - 4] - 18.0 * y[n - 3] + 10.0 * y[n - 2] + 3.0 * y[n - 1]);
    d[n - 1] = c * (3.0 * y[n - 5] - 16.0 * y[n - 4] + 36.0 * y[n - 3] - 48.0 * y[n - 2] + 25.0 * y[n - 1]);
    d
}

impl BasisPair {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn theta1(&self) -> &[f64] {
        &self.theta1
    }

    pub fn theta1_prime(&self) -> &[f64] {
        &self.theta1_prime
    }

    pub fn theta2(&self) -> &[f64] {
        &self.theta2
    }

    pub fn theta2_prime(&self) -> &[f64] {
        &self.theta2_prime
    }

    /// True when the pair is a closed form rather than Numerov samples.
    pub fn is_analytic(&self) -> bool {
        matches!(self.repr, Repr::Free { .. })
    }

    pub fn node(&self, i: usize) -> BasisPoint {
        BasisPoint {
            theta1: self.theta1[i],
            theta1_prime: self.theta1_prime[i],
            theta2: self.theta2[i],
            theta2_prime: self.theta2_prime[i],
        }
    }

    /// 2m(V(x) - E)/hbar^2, so that theta'' = q theta.
    pub fn q_at(&self, x: f64) -> f64 {
        let u = self.units;
        2.0 * u.mass() * (self.potential.v(x) - self.energy) / (u.hbar() * u.hbar())
    }

    /// Both members and their slopes anywhere on the grid interval.
    pub fn eval(&self, x: f64) -> Result<BasisPoint> {
        self.grid.check_contains(x)?;
        Ok(match &self.repr {
            Repr::Free { mode, mix } => {
                let [u1, du1, u2, du2] = mode.eval(x - self.grid.x_min());
                BasisPoint {
                    theta1: mix[0][0] * u1 + mix[0][1] * u2,
                    theta1_prime: mix[0][0] * du1 + mix[0][1] * du2,
                    theta2: mix[1][0] * u1 + mix[1][1] * u2,
                    theta2_prime: mix[1][0] * du1 + mix[1][1] * du2,
                }
            }
            Repr::Sampled { q } => {
                let (i, s) = self.grid.locate(x);
                let h = self.grid.spacing();
                let t = (s / h).clamp(0.0, 1.0);
                let node = |f: &[f64], df: &[f64], j: usize| [f[j], df[j], q[j] * f[j]];
                let (t1, dt1) = quintic_hermite(
                    node(&self.theta1, &self.theta1_prime, i),
                    node(&self.theta1, &self.theta1_prime, i + 1),
                    h,
                    t,
                );
                let (t2, dt2) = quintic_hermite(
                    node(&self.theta2, &self.theta2_prime, i),
                    node(&self.theta2, &self.theta2_prime, i + 1),
                    h,
                    t,
                );
                BasisPoint { theta1: t1, theta1_prime: dt1, theta2: t2, theta2_prime: dt2 }
            }
        })
    }

    pub fn wronskian(&self) -> WronskianReport {
        let w: Vec<f64> = (0..self.grid.len()).map(|i| self.node(i).wronskian()).collect();
        let value = w[0];
        let max_relative_drift = w.iter().map(|wi| ((wi - value) / value).abs()).fold(0.0, f64::max);
        WronskianReport { value, max_relative_drift }
    }

    /// Largest Schrödinger residual |-(hbar^2/2m) theta'' + (V - E) theta| of
    /// each member over the interior nodes, theta'' by five-point central
    /// differences.
    pub fn schrodinger_residual(&self) -> [f64; 2] {
        let h = self.grid.spacing();
        let u = self.units;
        let kin = u.hbar() * u.hbar() / (2.0 * u.mass());
        let n = self.grid.len();
        let residual = |y: &[f64]| {
            (2..n - 2)
                .map(|i| {
                    let d2 = (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]) / (12.0 * h * h);
                    let x = self.grid.x(i);
                    (-kin * d2 + (self.potential.v(x) - self.energy) * y[i]).abs()
                })
                .fold(0.0, f64::max)
        };
        [residual(&self.theta1), residual(&self.theta2)]
    }

    /// Replace theta2 by `mu * theta1 + theta2`; the Wronskian is unchanged.
    pub fn recombine(&self, mu: f64) -> BasisPair {
        let mut out = self.clone();
        for i in 0..self.grid.len() {
            out.theta2[i] += mu * self.theta1[i];
            out.theta2_prime[i] += mu * self.theta1_prime[i];
        }
        if let Repr::Free { mix, .. } = &mut out.repr {
            mix[1][0] += mu * mix[0][0];
            mix[1][1] += mu * mix[0][1];
            out.fill_from_closed_form();
        }
        out
    }

    fn fill_from_closed_form(&mut self) {
        let n = self.grid.len();
        self.theta1 = Vec::with_capacity(n);
        self.theta1_prime = Vec::with_capacity(n);
        self.theta2 = Vec::with_capacity(n);
        self.theta2_prime = Vec::with_capacity(n);
        for i in 0..n {
            let p = self.eval(self.grid.x(i)).expect("grid node inside grid");
            self.theta1.push(p.theta1);
            self.theta1_prime.push(p.theta1_prime);
            self.theta2.push(p.theta2);
            self.theta2_prime.push(p.theta2_prime);
        }
    }
}

/// Wronskian at x_min and its largest relative drift over the grid.
pub fn wronskian(pair: &BasisPair) -> WronskianReport {
    pair.wronskian()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Units {
        Units::default()
    }

    #[test]
    fn free_slope_one_is_sin_cos() {
        let g = Grid::new(0.0, 10.0, 1001).unwrap();
        let p = solve_basis(&Potential::Free, 0.5, g, unit(), Convention::SlopeOne).unwrap();
        assert!(p.is_analytic());
        for i in (0..g.len()).step_by(37) {
            let x = g.x(i);
            assert!((p.theta1()[i] - x.sin()).abs() < 1e-13);
            assert!((p.theta2()[i] - x.cos()).abs() < 1e-13);
        }
        let w = p.wronskian();
        assert_eq!(w.value, -1.0);
        assert!(w.max_relative_drift <= 1e-12);
    }

    #[test]
    fn free_slope_one_scales_with_wavenumber() {
        let g = Grid::new(0.0, 10.0, 501).unwrap();
        let p = solve_basis(&Potential::Free, 2.0, g, unit(), Convention::SlopeOne).unwrap();
        for i in (0..g.len()).step_by(23) {
            let x = g.x(i);
            assert!((p.theta1()[i] - (2.0 * x).sin() / 2.0).abs() < 1e-13);
            assert!((p.theta2()[i] - (2.0 * x).cos()).abs() < 1e-13);
        }
        assert_eq!(p.wronskian().value, -1.0);
    }

    #[test]
    fn floyd_wave_is_unit_amplitude() {
        let g = Grid::new(0.0, 5.0, 101).unwrap();
        let p = solve_basis(&Potential::Free, 2.0, g, unit(), Convention::FloydWave).unwrap();
        let pt = p.eval(1.3).unwrap();
        assert!((pt.theta1 - (2.6f64).sin()).abs() < 1e-14);
        assert!((pt.theta2 - (2.6f64).cos()).abs() < 1e-14);
        assert!((p.wronskian().value + 2.0).abs() < 1e-14);
    }

    #[test]
    fn free_negative_and_zero_energy() {
        let g = Grid::new(0.0, 2.0, 64).unwrap();
        let p = solve_basis(&Potential::Free, -0.5, g, unit(), Convention::SlopeOne).unwrap();
        let pt = p.eval(1.0).unwrap();
        assert!((pt.theta1 - 1f64.sinh()).abs() < 1e-14);
        assert!((pt.theta2 - 1f64.cosh()).abs() < 1e-14);
        let z = solve_basis(&Potential::Free, 0.0, g, unit(), Convention::SlopeOne).unwrap();
        assert_eq!(z.eval(1.5).unwrap().theta1, 1.5);
        assert!(matches!(
            solve_basis(&Potential::Free, 0.0, g, unit(), Convention::FloydWave),
            Err(Error::DegenerateBasis { .. })
        ));
    }

    #[test]
    fn numerov_free_matches_closed_form() {
        let g = Grid::new(0.0, 10.0, 2001).unwrap();
        let p = solve_basis_with(&Potential::Free, 0.5, g, unit(), Convention::SlopeOne, Solver::Numerov).unwrap();
        assert!(!p.is_analytic());
        let max_err = (0..g.len())
            .map(|i| (p.theta1()[i] - g.x(i).sin()).abs().max((p.theta2()[i] - g.x(i).cos()).abs()))
            .fold(0.0, f64::max);
        assert!(max_err < 1e-9, "max err {max_err}");
        // Hermite evaluation between nodes
        let pt = p.eval(3.0517).unwrap();
        assert!((pt.theta1 - 3.0517f64.sin()).abs() < 1e-9);
        assert!((pt.theta1_prime - 3.0517f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn slope_one_wronskian_is_minus_one_at_start() {
        let g = Grid::new(-3.0, 3.0, 301).unwrap();
        for e in [-1.0, 0.2, 0.5, 3.0] {
            let p = solve_basis(&Potential::harmonic(1.0).unwrap(), e, g, unit(), Convention::SlopeOne).unwrap();
            assert_eq!(p.wronskian().value, -1.0);
        }
    }

    #[test]
    fn numerov_wronskian_drift_is_fourth_order() {
        let pot = Potential::harmonic(1.0).unwrap();
        let g = Grid::new(-2.0, 2.0, 201).unwrap();
        let d1 = solve_basis(&pot, 0.5, g, unit(), Convention::SlopeOne).unwrap().wronskian().max_relative_drift;
        let d2 = solve_basis(&pot, 0.5, g.refined(2), unit(), Convention::SlopeOne)
            .unwrap()
            .wronskian()
            .max_relative_drift;
        let ratio = d1 / d2;
        assert!((8.0..=32.0).contains(&ratio), "drift ratio {ratio} ({d1:e} -> {d2:e})");
    }

    #[test]
    fn schrodinger_residual_is_fourth_order() {
        let pot = Potential::linear(0.7).unwrap();
        let g = Grid::new(-2.0, 2.0, 161).unwrap();
        let r1 = solve_basis(&pot, 1.0, g, unit(), Convention::SlopeOne).unwrap().schrodinger_residual();
        let r2 = solve_basis(&pot, 1.0, g.refined(2), unit(), Convention::SlopeOne).unwrap().schrodinger_residual();
        for k in 0..2 {
            let ratio = r1[k] / r2[k];
            assert!((8.0..=32.0).contains(&ratio), "member {k}: ratio {ratio}");
        }
    }

    #[test]
    fn deep_forbidden_region_overflows() {
        let pot = Potential::harmonic(1.0).unwrap();
        let g = Grid::new(0.0, 60.0, 6001).unwrap();
        assert!(matches!(
            solve_basis(&pot, 0.5, g, unit(), Convention::SlopeOne),
            Err(Error::NonFiniteField { .. })
        ));
    }

    #[test]
    fn recombination_keeps_wronskian() {
        let g = Grid::new(0.0, 4.0, 401).unwrap();
        for pot in [Potential::Free, Potential::harmonic(1.0).unwrap()] {
            let p = solve_basis(&pot, 0.5, g, unit(), Convention::SlopeOne).unwrap();
            let r = p.recombine(0.7);
            let x = 1.234;
            let (a, b) = (p.eval(x).unwrap(), r.eval(x).unwrap());
            assert!((b.theta2 - (0.7 * a.theta1 + a.theta2)).abs() < 1e-12);
            assert!((r.wronskian().value - p.wronskian().value).abs() < 1e-14);
        }
    }

    #[test]
    fn eval_outside_grid_fails() {
        let g = Grid::new(0.0, 1.0, 32).unwrap();
        let p = solve_basis(&Potential::Free, 1.0, g, unit(), Convention::SlopeOne).unwrap();
        assert!(matches!(p.eval(1.5), Err(Error::OutOfDomain { .. })));
    }
}
