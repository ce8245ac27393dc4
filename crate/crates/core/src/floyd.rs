//! Trajectories from Jacobi's theorem, t - t0 = dS0/dE at fixed x and fixed
//! microstate constants, and their cycle-averaged classical limit.

use serde::{Deserialize, Serialize};

use crate::action::{build_action, ActionField, Microstate};
use crate::basis::{BasisPair, Convention};
use crate::error::{Error, Result};
use crate::quadrature;
use crate::units::Units;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloydTrajectoryPoint {
    pub x: f64,
    pub t_minus_t0: f64,
}

/// Amplitude and phase of the oscillating part of the free-particle
/// denominator: `(a^2 + b^2 + 1) + sigma cos(2kx + gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaGamma {
    pub sigma: f64,
    pub gamma: f64,
}

/// Finite-difference stencil for dS0/dE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Stencil {
    #[default]
    ThreePoint,
    FivePoint,
}

fn check_a(a: f64) -> Result<()> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::DegenerateMicrostate(format!("a must be finite and nonzero, got {a}")));
    }
    Ok(())
}

fn check_positive_energy(energy: f64) -> Result<()> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::InvalidEnergy(format!("free-particle closed forms need E > 0, got {energy}")));
    }
    Ok(())
}

/// With phi1 = cos u and phi2 = a sin u + b cos u,
/// 2 (phi1^2 + phi2^2) = (a^2 + b^2 + 1) + (1 + b^2 - a^2) cos 2u + 2ab sin 2u,
/// which fixes the quadrant of gamma.
pub fn sigma_gamma(a: f64, b: f64) -> Result<SigmaGamma> {
    check_a(a)?;
    let (cos_part, sin_part) = (1.0 + b * b - a * a, 2.0 * a * b);
    let sigma = cos_part.hypot(sin_part);
    // 0.0 - x keeps gamma = +pi rather than -pi when b = 0
    Ok(SigmaGamma { sigma, gamma: (0.0 - sin_part).atan2(cos_part) })
}

/// Closed-form free-particle Jacobi-theorem time at `x`.
pub fn floyd_free_closed(a: f64, b: f64, energy: f64, units: Units, x: f64) -> Result<f64> {
    check_positive_energy(energy)?;
    let SigmaGamma { sigma, gamma } = sigma_gamma(a, b)?;
    let c = a * a + b * b + 1.0;
    let k = units.wavenumber(energy);
    let den = c + sigma * (2.0 * k * x + gamma).cos();
    if den.abs() <= 1e-14 * c {
        return Err(Error::SingularDenominator { x });
    }
    Ok(a * (2.0 * units.mass() / energy).sqrt() * x / den)
}

const RETRIES: usize = 3;

/// Jacobi-theorem time at a single point; see [`floyd_trajectory`].
pub fn floyd_time_numeric<F>(basis_factory: F, microstate: Microstate, x: f64, energy_step: Option<f64>, stencil: Stencil) -> Result<f64>
where
    F: Fn(f64) -> Result<BasisPair>,
{
    Ok(floyd_trajectory(basis_factory, microstate, &[x], energy_step, stencil)?[0].t_minus_t0)
}

/// dS0/dE by central differences, re-solving the basis at shifted energies
/// with a, b and lambda held fixed. The default step is 1e-6 E. When the
/// phase unwrapping picks different branches at the shifted energies the
/// step is reduced tenfold, up to three times.
pub fn floyd_trajectory<F>(
    basis_factory: F,
    microstate: Microstate,
    xs: &[f64],
    energy_step: Option<f64>,
    stencil: Stencil,
) -> Result<Vec<FloydTrajectoryPoint>>
where
    F: Fn(f64) -> Result<BasisPair>,
{
    let e = microstate.energy;
    let mut de = energy_step.unwrap_or(1e-6 * e.abs());
    if !(de > 0.0 && de.is_finite()) {
        return Err(Error::InvalidEnergy(format!("energy step must be positive, got {de}")));
    }
    let mut last_err = None;
    for _ in 0..=RETRIES {
        match differentiate(&basis_factory, microstate, xs, de, stencil) {
            Err(err @ Error::BranchMismatch { .. }) => {
                last_err = Some(err);
                de /= 10.0;
            }
            other => return other,
        }
    }
    Err(last_err.expect("loop ran at least once"))
}

fn shifted_field<F>(factory: &F, microstate: Microstate, energy: f64) -> Result<ActionField>
where
    F: Fn(f64) -> Result<BasisPair>,
{
    let pair = factory(energy)?;
    if pair.convention() != Convention::FloydWave {
        return Err(Error::ConventionMismatch { expected: Convention::FloydWave.name() });
    }
    build_action(&pair, Microstate { energy, ..microstate })
}

fn differentiate<F>(factory: &F, microstate: Microstate, xs: &[f64], de: f64, stencil: Stencil) -> Result<Vec<FloydTrajectoryPoint>>
where
    F: Fn(f64) -> Result<BasisPair>,
{
    let e = microstate.energy;
    let offsets: &[f64] = match stencil {
        Stencil::ThreePoint => &[-1.0, 1.0],
        Stencil::FivePoint => &[-2.0, -1.0, 1.0, 2.0],
    };
    let fields: Vec<ActionField> = offsets.iter().map(|o| shifted_field(factory, microstate, e + o * de)).collect::<Result<_>>()?;
    let hbar = fields[0].units().hbar();

    xs.iter()
        .map(|&x| {
            let s: Vec<f64> = fields.iter().map(|f| f.at(x).map(|p| p.s0)).collect::<Result<_>>()?;
            // A branch slip shows up as a jump of order pi*hbar between neighbours.
            if s.windows(2).any(|w| (w[1] - w[0]).abs() > 0.5 * std::f64::consts::PI * hbar) {
                return Err(Error::BranchMismatch { x });
            }
            let t = match stencil {
                Stencil::ThreePoint => (s[1] - s[0]) / (2.0 * de),
                Stencil::FivePoint => (s[0] - 8.0 * s[1] + 8.0 * s[2] - s[3]) / (12.0 * de),
            };
            Ok(FloydTrajectoryPoint { x, t_minus_t0: t })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSample {
    pub halvings: u32,
    pub hbar: f64,
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleAverage {
    pub centre: f64,
    pub samples: Vec<CycleSample>,
    /// The classical slope sign(a) sqrt(m / 2E).
    pub classical: f64,
}

/// Cycle-averaged slope of the free Jacobi-theorem time as hbar is halved.
///
/// For hbar_k = hbar / 2^k the closed-form time is averaged over one period
/// `pi hbar_k / sqrt(2mE)` of its oscillating denominator, centred at
/// `centre`, and divided by `centre`. The default centre is one base
/// wavelength `2 pi hbar / sqrt(2mE)`, which is a whole number of periods for
/// every k.
pub fn cycle_average_classical_limit(
    a: f64,
    b: f64,
    energy: f64,
    units: Units,
    n_hbar_halvings: u32,
    centre: Option<f64>,
) -> Result<CycleAverage> {
    check_positive_energy(energy)?;
    check_a(a)?;
    let p_classical = (2.0 * units.mass() * energy).sqrt();
    let centre = centre.unwrap_or(2.0 * std::f64::consts::PI * units.hbar() / p_classical);
    if centre == 0.0 || !centre.is_finite() {
        return Err(Error::InvalidArc(format!("averaging centre must be finite and nonzero, got {centre}")));
    }

    let samples = (0..=n_hbar_halvings)
        .map(|k| {
            let hbar = units.hbar() / 2f64.powi(k as i32);
            let scaled = units.with_hbar(hbar)?;
            let period = std::f64::consts::PI * hbar / p_classical;
            let (lo, hi) = (centre - 0.5 * period, centre + 0.5 * period);
            let mut failure = None;
            let q = quadrature::integrate(
                |x| match floyd_free_closed(a, b, energy, scaled, x) {
                    Ok(t) => t,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                lo,
                hi,
                1e-14,
                1e-13,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(CycleSample { halvings: k, hbar, average: q.value / period / centre })
        })
        .collect::<Result<_>>()?;

    Ok(CycleAverage { centre, samples, classical: a.signum() * (units.mass() / (2.0 * energy)).sqrt() })
}
