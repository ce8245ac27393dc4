//! Free-particle closed forms.
//!
//! The action constants (a_s, b_s) enter `S0 = hbar * arctan(a_s tan(kx) + b_s)`
//! and the trajectory constants (a_t, b_t) enter
//! `x(t) = x0 + arctan(a_t tan(omega (t - t0)) + b_t) / k`, with
//! `k = sqrt(2mE) / hbar` and `omega = 2E / hbar`. Inverting one into the
//! other gives `a_t = 1 / a_s`, `b_t = -b_s / a_s`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Diagnostics, Route, Trajectory, TrajectoryState};
use crate::error::{Error, Result};
use crate::units::Units;
use std::f64::consts::PI;

/// arctan(a tan u + b) continued across the poles of tan, so that it is
/// continuous in u and vanishes where tan u = -b / a.
pub fn unwrapped_arctan(u: f64, a: f64, b: f64) -> f64 {
    // reduce first so the branch index and the sign of tan agree at the poles
    let n = (u / PI).round();
    let r = u - n * PI;
    (a * r.tan() + b).atan() + a.signum() * PI * n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeTrajectoryParams {
    pub a_t: f64,
    pub b_t: f64,
    pub energy: f64,
    pub x0: f64,
    pub t0: f64,
}

impl FreeTrajectoryParams {
    pub fn new(a_t: f64, b_t: f64, energy: f64, x0: f64, t0: f64) -> Result<Self> {
        if a_t == 0.0 || !a_t.is_finite() || !b_t.is_finite() {
            return Err(Error::DegenerateMicrostate(format!("trajectory constants ({a_t}, {b_t}) need finite a != 0")));
        }
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(Error::InvalidEnergy(format!("free trajectories need E > 0, got {energy}")));
        }
        Ok(Self { a_t, b_t, energy, x0, t0 })
    }

    /// Trajectory through `(t_start, x_start)` for the action constants
    /// `(a_s, b_s)`.
    pub fn from_microstate(a_s: f64, b_s: f64, energy: f64, units: Units, x_start: f64, t_start: f64) -> Result<Self> {
        let (a_t, b_t) = microstate_to_trajectory_constants(a_s, b_s)?;
        let mut p = Self::new(a_t, b_t, energy, 0.0, 0.0)?;
        let s0 = units.hbar() * unwrapped_arctan(units.wavenumber(energy) * x_start, a_s, b_s);
        p.t0 = t_start - s0 / (2.0 * energy);
        Ok(p)
    }

    fn sigma_gamma(&self) -> (f64, f64, f64) {
        let (a, b) = (self.a_t, self.b_t);
        let cos_part = 1.0 + b * b - a * a;
        let sin_part = 2.0 * a * b;
        (a * a + b * b + 1.0, cos_part.hypot(sin_part), (0.0 - sin_part).atan2(cos_part))
    }
}

pub fn microstate_to_trajectory_constants(a_s: f64, b_s: f64) -> Result<(f64, f64)> {
    if a_s == 0.0 || !a_s.is_finite() {
        return Err(Error::DegenerateMicrostate(format!("a must be finite and nonzero, got {a_s}")));
    }
    Ok((1.0 / a_s, -b_s / a_s))
}

pub fn free_trajectory(p: &FreeTrajectoryParams, units: Units, t: f64) -> f64 {
    let omega = 2.0 * p.energy / units.hbar();
    p.x0 + unwrapped_arctan(omega * (t - p.t0), p.a_t, p.b_t) / units.wavenumber(p.energy)
}

/// Position, velocity, acceleration and jerk of the closed-form trajectory.
pub fn free_state(p: &FreeTrajectoryParams, units: Units, t: f64) -> TrajectoryState {
    let omega = 2.0 * p.energy / units.hbar();
    let k = units.wavenumber(p.energy);
    let w = omega * (t - p.t0);
    let (c, sigma, gamma) = p.sigma_gamma();
    let phase = 2.0 * w + gamma;
    // R(w) = cos^2 w + (a sin w + b cos w)^2 and its w-derivatives
    let r = 0.5 * (c + sigma * phase.cos());
    let r1 = -sigma * phase.sin();
    let r2 = -2.0 * sigma * phase.cos();
    let scale = p.a_t / k;
    TrajectoryState {
        t,
        x: free_trajectory(p, units, t),
        v: scale * omega / r,
        acc: -scale * omega * omega * r1 / (r * r),
        jerk: Some(scale * omega.powi(3) * (2.0 * r1 * r1 / r.powi(3) - r2 / (r * r))),
    }
}

/// Closed-form states at the given times.
pub fn free_trajectory_states(p: &FreeTrajectoryParams, units: Units, times: &[f64]) -> Trajectory {
    let states: Vec<TrajectoryState> = times.iter().map(|&t| free_state(p, units, t)).collect();
    let diagnostics = vec![Diagnostics::default(); states.len()];
    Trajectory::new(Route::ClosedForm, p.energy, None, states, diagnostics)
}

/// S0 along a free trajectory as a function of time.
pub fn free_action_of_time(energy: f64, t: f64, t0: f64) -> f64 {
    2.0 * energy * (t - t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn classical_constants_give_uniform_motion() {
        for hbar in [1.0, 0.1, 3.0] {
            let u = Units::new(hbar, 1.0).unwrap();
            let p = FreeTrajectoryParams::new(1.0, 0.0, 0.5, 0.0, 0.0).unwrap();
            for t in [-4.0, 0.3, 1.6, 7.9] {
                assert!((free_trajectory(&p, u, t) - t).abs() < 1e-12 * t.abs().max(1.0));
            }
        }
    }

    #[test]
    fn half_a_example() {
        let p = FreeTrajectoryParams::new(0.5, 0.0, 0.5, 0.0, 0.0).unwrap();
        assert!((free_trajectory(&p, Units::default(), FRAC_PI_4) - 0.5f64.atan()).abs() < 1e-15);
    }

    #[test]
    fn continuous_across_poles() {
        let p = FreeTrajectoryParams::new(0.5, 0.2, 0.5, 0.0, 0.0).unwrap();
        let u = Units::default();
        let pole = std::f64::consts::FRAC_PI_2;
        let jump = free_trajectory(&p, u, pole + 1e-9) - free_trajectory(&p, u, pole - 1e-9);
        assert!(jump.abs() < 1e-7);
        assert!((free_trajectory(&p, u, pole) - free_trajectory(&p, u, pole - 1e-9)).abs() < 1e-7);
        let mut prev = free_trajectory(&p, u, -5.0);
        for i in 1..1000 {
            let x = free_trajectory(&p, u, -5.0 + i as f64 * 0.01);
            assert!(x > prev);
            prev = x;
        }
    }

    #[test]
    fn mapping() {
        assert_eq!(microstate_to_trajectory_constants(1.0, 0.0).unwrap(), (1.0, 0.0));
        assert_eq!(microstate_to_trajectory_constants(2.0, 0.0).unwrap(), (0.5, 0.0));
        assert_eq!(microstate_to_trajectory_constants(1.0, 1.0).unwrap(), (1.0, -1.0));
        assert!(microstate_to_trajectory_constants(0.0, 1.0).is_err());
    }

    #[test]
    fn from_microstate_passes_through_start() {
        let u = Units::new(0.7, 1.3).unwrap();
        let p = FreeTrajectoryParams::from_microstate(1.4, -0.6, 0.8, u, 2.3, -0.4).unwrap();
        assert!((free_trajectory(&p, u, -0.4) - 2.3).abs() < 1e-12);
    }

    #[test]
    fn kinematics_match_finite_differences() {
        let u = Units::new(0.8, 1.5).unwrap();
        let p = FreeTrajectoryParams::new(0.7, 0.4, 1.2, 0.3, 0.1).unwrap();
        let h = 1e-4;
        for t in [0.2, 1.1, 2.7] {
            let s = free_state(&p, u, t);
            let sp = free_state(&p, u, t + h);
            let sm = free_state(&p, u, t - h);
            assert!(((sp.x - sm.x) / (2.0 * h) - s.v).abs() < 1e-6);
            assert!(((sp.v - sm.v) / (2.0 * h) - s.acc).abs() < 1e-6);
            let (spp, smm) = (free_state(&p, u, t + 2.0 * h), free_state(&p, u, t - 2.0 * h));
            let fd = (smm.acc - 8.0 * sm.acc + 8.0 * sp.acc - spp.acc) / (12.0 * h);
            assert!((fd - s.jerk.unwrap()).abs() < 1e-7 * fd.abs().max(1.0), "{fd} vs {:?}", s.jerk);
        }
    }

    #[test]
    fn action_of_time() {
        assert_eq!(free_action_of_time(0.5, 1.0, 0.0), 1.0);
    }
}
