//! Quintic Hermite interpolation from values and first two derivatives.

/// Value and first derivative of the quintic Hermite interpolant on a cell of
/// width `h`, at fractional position `t` in `[0, 1]`.
///
/// `left` and `right` are `[f, f', f'']` at the cell ends.
pub(crate) fn quintic_hermite(left: [f64; 3], right: [f64; 3], h: f64, t: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;

    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    let h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 0.5 * t3 - t4 + 0.5 * t5;

    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;

    let [f0, g0, c0] = left;
    let [f1, g1, c1] = right;
    let value = f0 * h0 + h * g0 * h1 + h * h * c0 * h2 + f1 * h3 + h * g1 * h4 + h * h * c1 * h5;
    let slope = (f1 - f0) * (-d0) / h + g0 * d1 + g1 * d4 + h * (c0 * d2 + c1 * d5);
    (value, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_quintics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) + 0.25 * x.powi(5);
        let df = |x: f64| -2.0 + 1.5 * x * x + 1.25 * x.powi(4);
        let d2f = |x: f64| 3.0 * x + 5.0 * x.powi(3);
        let (a, b) = (0.4, 1.1);
        let h = b - a;
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let x = a + t * h;
            let (v, s) = quintic_hermite([f(a), df(a), d2f(a)], [f(b), df(b), d2f(b)], h, t);
            assert!((v - f(x)).abs() < 1e-14);
            assert!((s - df(x)).abs() < 1e-13);
        }
    }
}
