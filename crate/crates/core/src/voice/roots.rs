//! Polynomial roots via companion-matrix eigenvalues, polished with Newton
//! steps, and the inverse (polynomial from roots).

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Evaluates the monic polynomial `z^p + c1 z^(p-1) + ... + cp` at `z`.
pub fn eval_monic(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(1.0, 0.0), |acc, &c| acc * z + c)
}

fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(1.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        d = d * z + p;
        p = p * z + c;
    }
    (p, d)
}

/// Roots of the monic polynomial with coefficients `c1..cp`.
pub fn monic_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let p = coeffs.len();
    if p == 0 {
        return Vec::new();
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, &c) in coeffs.iter().enumerate() {
        companion[(0, j)] = -c;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|&z| polish(coeffs, z))
        .collect()
}

fn polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    let mut best = (eval_monic(coeffs, z).norm(), z);
    for _ in 0..8 {
        let (p, d) = eval_with_derivative(coeffs, z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - p / d;
        if !next.re.is_finite() || !next.im.is_finite() {
            break;
        }
        z = next;
        let r = eval_monic(coeffs, z).norm();
        if r < best.0 {
            best = (r, z);
        }
        if r == 0.0 {
            break;
        }
    }
    best.1
}

/// Expands `prod(z - r_i)` into monic coefficients `c1..cp`. Returns the
/// real parts together with the largest imaginary residue discarded.
pub fn poly_from_roots(roots: &[Complex64]) -> (Vec<f64>, f64) {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        c = next;
    }
    let max_imag = c.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    (c[1..].iter().map(|z| z.re).collect(), max_imag)
}
