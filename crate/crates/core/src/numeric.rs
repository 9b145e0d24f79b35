//! Scalar root finding and 2x2 linear algebra.

use num_complex::Complex64;

/// Bracketed root of a continuous function by the Illinois variant of
/// regula falsi, falling back to bisection when the bracket shrinks slowly.
/// Runs to the resolution of f64 so that finite differences taken through
/// the solve stay smooth. Returns `None` without a sign change.
pub fn find_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let mut side = 0i8;
    for it in 0..200 {
        let width = b - a;
        if width <= 2.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        // Every fourth iteration bisect to guarantee progress.
        if it % 4 == 3 || !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return Some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Some(if fa.abs() < fb.abs() { a } else { b })
}

/// Eigenvalues of a real 2x2 matrix, real pairs ordered ascending and
/// complex pairs with the positive imaginary part first.
pub fn eig2(j: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Roots of l^2 - tr l + det, in the cancellation-free form.
        let q = 0.5 * (tr + tr.signum() * s);
        let (a, b) = if q != 0.0 { (q, det / q) } else { (0.0, 0.0) };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)]
    }
}

/// Unit eigenvector of a real 2x2 matrix for the real eigenvalue `l`.
pub fn eigvec2(j: &[[f64; 2]; 2], l: f64) -> [f64; 2] {
    let a = [j[0][1], l - j[0][0]];
    let b = [l - j[1][1], j[1][0]];
    let na = a[0].hypot(a[1]);
    let nb = b[0].hypot(b[1]);
    let (v, n) = if na >= nb { (a, na) } else { (b, nb) };
    if n == 0.0 {
        [1.0, 0.0]
    } else {
        [v[0] / n, v[1] / n]
    }
}

pub fn frobenius2(j: &[[f64; 2]; 2]) -> f64 {
    (j[0][0].powi(2) + j[0][1].powi(2) + j[1][0].powi(2) + j[1][1].powi(2)).sqrt()
}
