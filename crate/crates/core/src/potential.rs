//! One-dimensional classical potentials with analytic derivative accessors.
//!
//! Tabulated potentials are represented by a natural cubic spline, so `dv`,
//! `d2v` and `d3v` are the exact derivatives of the interpolant.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Free,
    /// V(x) = slope * x
    Linear { slope: f64 },
    /// V(x) = stiffness * x^2 / 2
    Harmonic { stiffness: f64 },
    Tabulated(Arc<Spline>),
}

impl Potential {
    pub fn linear(slope: f64) -> Result<Self> {
        finite("slope", slope)?;
        Ok(Self::Linear { slope })
    }

    pub fn harmonic(stiffness: f64) -> Result<Self> {
        finite("stiffness", stiffness)?;
        Ok(Self::Harmonic { stiffness })
    }

    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self::Tabulated(Arc::new(Spline::new(xs, values)?)))
    }

    pub fn v(&self, x: f64) -> f64 {
        match self {
            Self::Free => 0.0,
            Self::Linear { slope } => slope * x,
            Self::Harmonic { stiffness } => 0.5 * stiffness * x * x,
            Self::Tabulated(s) => s.eval(x)[0],
        }
    }

    pub fn dv(&self, x: f64) -> f64 {
        match self {
            Self::Free => 0.0,
            Self::Linear { slope } => *slope,
            Self::Harmonic { stiffness } => stiffness * x,
            Self::Tabulated(s) => s.eval(x)[1],
        }
    }

    pub fn d2v(&self, x: f64) -> f64 {
        match self {
            Self::Free | Self::Linear { .. } => 0.0,
            Self::Harmonic { stiffness } => *stiffness,
            Self::Tabulated(s) => s.eval(x)[2],
        }
    }

    /// Third derivative; only needed to start the Numerov recursion accurately.
    pub fn d3v(&self, x: f64) -> f64 {
        match self {
            Self::Tabulated(s) => s.eval(x)[3],
            _ => 0.0,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Self::Free)
    }

    /// Upper bound of V over `[a, b]` (exact for the analytic kinds).
    pub fn max_on(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        match self {
            Self::Free => 0.0,
            Self::Linear { .. } => self.v(lo).max(self.v(hi)),
            Self::Harmonic { stiffness } => {
                let ends = self.v(lo).max(self.v(hi));
                if *stiffness < 0.0 && lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else {
                    ends
                }
            }
            Self::Tabulated(s) => s.max_on(lo, hi),
        }
    }

    /// Lower bound of V over `[a, b]` (exact for the analytic kinds).
    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        match self {
            Self::Free => 0.0,
            Self::Linear { .. } => self.v(lo).min(self.v(hi)),
            Self::Harmonic { stiffness } => {
                let ends = self.v(lo).min(self.v(hi));
                if *stiffness > 0.0 && lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else {
                    ends
                }
            }
            Self::Tabulated(s) => -s.negated_max_on(lo, hi),
        }
    }

    /// Largest |V| on the grid nodes; sets the scale of the turning-point guard.
    pub fn energy_scale(&self, grid: &Grid) -> f64 {
        grid.points().map(|x| self.v(x).abs()).fold(0.0, f64::max)
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPotential(format!("{name} must be finite")))
    }
}

/// Natural cubic spline through `(xs[i], values[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the nodes.
    m: Vec<f64>,
}

impl Spline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() {
            return Err(Error::InvalidPotential("x and V tables differ in length".into()));
        }
        if n < 4 {
            return Err(Error::InvalidPotential("need at least 4 tabulated points".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("tabulated values must be finite".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPotential("tabulated x must be strictly increasing".into()));
        }

        // Tridiagonal system for the interior second derivatives (Thomas algorithm).
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            let sub = h0 / 6.0;
            let diag = (h0 + h1) / 3.0;
            let sup = h1 / 6.0;
            let rhs = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
            let denom = diag - sub * c_prime[i - 1];
            c_prime[i] = sup / denom;
            d_prime[i] = (rhs - sub * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(Self { xs, ys, m })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    fn cell(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// `[S, S', S'', S''']` at `x`; outside the table the end cubics are extended.
    pub fn eval(&self, x: f64) -> [f64; 4] {
        let i = self.cell(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = 1.0 - a;
        let (y0, y1, m0, m1) = (self.ys[i], self.ys[i + 1], self.m[i], self.m[i + 1]);
        let s = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let ds = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2s = a * m0 + b * m1;
        let d3s = (m1 - m0) / h;
        [s, ds, d2s, d3s]
    }

    fn max_on(&self, lo: f64, hi: f64) -> f64 {
        self.sampled_max(lo, hi, 1.0)
    }

    fn negated_max_on(&self, lo: f64, hi: f64) -> f64 {
        self.sampled_max(lo, hi, -1.0)
    }

    fn sampled_max(&self, lo: f64, hi: f64, sign: f64) -> f64 {
        const PER_CELL: usize = 16;
        let mut best = (sign * self.eval(lo)[0]).max(sign * self.eval(hi)[0]);
        let i0 = self.cell(lo);
        let i1 = self.cell(hi);
        for i in i0..=i1 {
            let (xa, xb) = (self.xs[i].max(lo), self.xs[i + 1].min(hi));
            if xb <= xa {
                continue;
            }
            for k in 0..=PER_CELL {
                let x = xa + (xb - xa) * k as f64 / PER_CELL as f64;
                best = best.max(sign * self.eval(x)[0]);
            }
        }
        best
    }
}
