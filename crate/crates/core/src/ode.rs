//! Dormand–Prince 5(4) integrator for small fixed-size systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping {
    Adaptive { rtol: f64, atol: f64, max_step: Option<f64> },
    Fixed { dt: f64 },
}

const MAX_STEPS: usize = 2_000_000;

/// Integrate `dy/dt = f(t, y)` from `t0` to `t_end` (> t0). Returns every
/// accepted step including the initial point.
pub fn dopri5<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t_end: f64, stepping: Stepping) -> Result<Vec<(f64, [f64; N])>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut out = vec![(t0, y0)];
    if t_end <= t0 {
        return Ok(out);
    }
    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y)?;

    let (mut h, max_step) = match stepping {
        Stepping::Adaptive { rtol, max_step, .. } => {
            let cap = max_step.unwrap_or(span).min(span);
            (cap.min(0.5 * span * rtol.powf(0.2)).max(1e-6 * span), cap)
        }
        Stepping::Fixed { dt } => (dt, dt),
    };

    for _ in 0..MAX_STEPS {
        if t >= t_end {
            return Ok(out);
        }
        let last = t + h >= t_end;
        let step = if last { t_end - t } else { h };

        let mut k = [[0.0; N]; 7];
        k[0] = k0;
        let mut stage = [0.0; N];
        for s in 1..7 {
            for i in 0..N {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                stage[i] = y[i] + step * acc;
            }
            k[s] = f(t + C[s] * step, &stage)?;
        }
        // stage 7 is evaluated at the fifth-order solution (FSAL)
        let y_new = stage;

        let accept = match stepping {
            Stepping::Fixed { .. } => {
                h = max_step;
                true
            }
            Stepping::Adaptive { rtol, atol, .. } => {
                let mut sum = 0.0;
                for i in 0..N {
                    let mut err = 0.0;
                    for s in 0..7 {
                        err += E[s] * k[s][i];
                    }
                    let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
                    sum += (step * err / sc).powi(2);
                }
                let norm = (sum / N as f64).sqrt();
                let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                if norm <= 1.0 {
                    h = (step * factor).min(max_step);
                    true
                } else {
                    h = step * factor.min(1.0);
                    false
                }
            }
        };

        if accept {
            t = if last { t_end } else { t + step };
            y = y_new;
            k0 = k[6];
            out.push((t, y));
        } else if h <= 1e-14 * t.abs().max(span) {
            return Err(Error::StepFailure { t });
        }
    }
    Err(Error::StepFailure { t })
}
