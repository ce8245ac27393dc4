use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant and particle mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    hbar: f64,
    mass: f64,
}

impl Units {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidUnits(format!("hbar must be positive and finite, got {hbar}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidUnits(format!("mass must be positive and finite, got {mass}")));
        }
        Ok(Self { hbar, mass })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Same mass, different hbar. Used by the classical-limit sweeps.
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        Self::new(hbar, self.mass)
    }

    /// Wavenumber sqrt(2 m |E|) / hbar.
    pub fn wavenumber(&self, energy: f64) -> f64 {
        (2.0 * self.mass * energy.abs()).sqrt() / self.hbar
    }
}

impl Default for Units {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}
