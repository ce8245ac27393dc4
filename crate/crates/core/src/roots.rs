//! Real roots of low-degree polynomials via companion-matrix eigenvalues.

use nalgebra::DMatrix;

/// Evaluate `sum c[i] x^i`.
pub fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect()
}

/// Magnitude reference for judging |p(x)|: sum |c_i| |x|^i.
pub fn scale_at(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x.abs() + ci.abs())
}

/// All distinct real roots of `sum c[i] x^i`, ascending. Exact zero roots
/// (vanishing low-order coefficients) are factored out before the eigenvalue
/// solve so repeated roots at the origin stay exact.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    let mut roots = Vec::new();
    if c.len() <= 1 {
        return roots;
    }
    let mut reduced: &[f64] = &c;
    if reduced[0] == 0.0 {
        roots.push(0.0);
        while reduced.len() > 1 && reduced[0] == 0.0 {
            reduced = &reduced[1..];
        }
    }

    let degree = reduced.len() - 1;
    if degree >= 1 {
        let lead = reduced[degree];
        let mut companion = DMatrix::<f64>::zeros(degree, degree);
        for i in 1..degree {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..degree {
            companion[(i, degree - 1)] = -reduced[i] / lead;
        }
        let d = derivative(reduced);
        for z in companion.complex_eigenvalues().iter() {
            if z.im.abs() > 1e-6 * z.re.abs().max(1.0) {
                continue;
            }
            let mut x = z.re;
            for _ in 0..50 {
                let dp = horner(&d, x);
                if dp == 0.0 {
                    break;
                }
                let step = horner(reduced, x) / dp;
                x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1e-300) {
                    break;
                }
            }
            if horner(reduced, x).abs() <= 1e-8 * scale_at(reduced, x) {
                roots.push(x);
            }
        }
    }

    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300));
    roots
}
