use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

/// Uniform grid on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!("x_min = {x_min} must be below x_max = {x_max}")));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Same interval with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_points: (self.n_points - 1) * factor + 1,
            ..*self
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    pub(crate) fn check_contains(&self, x: f64) -> Result<()> {
        // Allow a few ulps of slack so endpoints computed elsewhere still land inside.
        let slack = 8.0 * f64::EPSILON * self.x_min.abs().max(self.x_max.abs()).max(1.0);
        if x >= self.x_min - slack && x <= self.x_max + slack {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x, x_min: self.x_min, x_max: self.x_max })
        }
    }

    /// Index of the cell containing `x` and the offset from its left node.
    pub(crate) fn locate(&self, x: f64) -> (usize, f64) {
        let h = self.spacing();
        let raw = ((x - self.x_min) / h).floor();
        let i = if raw < 0.0 { 0 } else { (raw as usize).min(self.n_points - 2) };
        (i, x - self.x(i))
    }

    pub(crate) fn nearest(&self, x: f64) -> usize {
        let raw = ((x - self.x_min) / self.spacing()).round();
        if raw < 0.0 {
            0
        } else {
            (raw as usize).min(self.n_points - 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_endpoints() {
        let g = Grid::new(0.0, 10.0, 101).unwrap();
        assert_eq!(g.spacing(), 0.1);
        assert_eq!(g.x(0), 0.0);
        assert_eq!(g.x(100), 10.0);
        assert_eq!(g.points().count(), 101);
    }

    #[test]
    fn validation() {
        assert!(Grid::new(1.0, 1.0, 32).is_err());
        assert!(Grid::new(2.0, 1.0, 32).is_err());
        assert!(Grid::new(0.0, 1.0, 15).is_err());
        assert!(Grid::new(0.0, f64::INFINITY, 32).is_err());
    }

    #[test]
    fn locate_clamps_to_last_cell() {
        let g = Grid::new(0.0, 1.0, 17).unwrap();
        assert_eq!(g.locate(1.0).0, 15);
        assert_eq!(g.locate(0.0), (0, 0.0));
        let (i, s) = g.locate(0.3);
        assert_eq!(i, 4);
        assert!((s - (0.3 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn refinement_halves_spacing() {
        let g = Grid::new(-1.0, 1.0, 21).unwrap();
        assert!((g.refined(2).spacing() - g.spacing() / 2.0).abs() < 1e-15);
    }
}
