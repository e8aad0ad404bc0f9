//! 2×2 complex matrices and the handful of operations the reduction needs.

use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

pub type Vec2 = [C64; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

const Z: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[Z, Z], [Z, Z]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, Z], [Z, ONE]]);

    pub fn new(a11: C64, a12: C64, a21: C64, a22: C64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn real(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2::new(a11.into(), a12.into(), a21.into(), a22.into())
    }

    pub fn diag(d1: C64, d2: C64) -> Self {
        Mat2::new(d1, Z, Z, d2)
    }

    pub fn anti(a12: C64, a21: C64) -> Self {
        Mat2::new(Z, a12, a21, Z)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn conj(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0].conj(), m[0][1].conj(), m[1][0].conj(), m[1][1].conj())
    }

    pub fn diagonal_part(&self) -> Self {
        Mat2::diag(self.0[0][0], self.0[1][1])
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let m = &self.0;
        (m[0][0].norm_sqr() + m[0][1].norm_sqr() + m[1][0].norm_sqr() + m[1][1].norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let m = &self.0;
        m[0][0].norm().max(m[0][1].norm()).max(m[1][0].norm()).max(m[1][1].norm())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    /// Exponential of a zero-diagonal matrix: `cosh(r)·I + sinh(r)/r·Q`, `r² = q12·q21`.
    pub fn exp_antidiagonal(q12: C64, q21: C64) -> Mat2 {
        let r2 = q12 * q21;
        let (ch, sh) = cosh_sinhc(r2);
        Mat2::new(ch, sh * q12, sh * q21, ch)
    }
}

/// `(cosh r, sinh(r)/r)` as functions of `r²` (both are even in `r`).
pub fn cosh_sinhc(r2: C64) -> (C64, C64) {
    if r2.norm() < 1e-4 {
        let r4 = r2 * r2;
        let ch = ONE + r2 / 2.0 + r4 / 24.0 + r4 * r2 / 720.0;
        let sh = ONE + r2 / 6.0 + r4 / 120.0 + r4 * r2 / 5040.0;
        (ch, sh)
    } else {
        let r = r2.sqrt();
        (r.cosh(), r.sinh() / r)
    }
}

/// `d/d(r²)` of `sinh(r)/r`, i.e. `(cosh r - sinh(r)/r)/(2r²)`.
pub fn sinhc_slope(r2: C64) -> C64 {
    if r2.norm() < 1e-2 {
        let mut term = ONE / 6.0;
        let mut sum = term;
        for j in 1..8 {
            let jf = j as f64;
            // ratio of consecutive coefficients (j+1)/(2j+3)! over j/(2j+1)!
            term = term * r2 * ((jf + 1.0) / (jf * (2.0 * jf + 2.0) * (2.0 * jf + 3.0)));
            sum += term;
        }
        sum
    } else {
        let (ch, sh) = cosh_sinhc(r2);
        (ch - sh) / (r2 * 2.0)
    }
}

pub fn vec_norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinhc_slope_matches_difference_quotient() {
        for &r2 in &[C64::new(1e-3, 2e-3), C64::new(0.3, -0.1), C64::new(-2.0, 1.0), C64::new(0.009, 0.0)] {
            let h = 1e-6;
            let fd = (cosh_sinhc(r2 + h).1 - cosh_sinhc(r2 - h).1) / (2.0 * h);
            assert!((sinhc_slope(r2) - fd).norm() < 1e-8, "{r2}");
        }
    }

    #[test]
    fn antidiagonal_exponential_matches_series() {
        let q12 = C64::new(0.3, -0.2);
        let q21 = C64::new(-0.1, 0.4);
        let q = Mat2::anti(q12, q21);
        let mut term = Mat2::IDENTITY;
        let mut sum = Mat2::IDENTITY;
        for n in 1..30 {
            term = (term * q).scale(C64::new(1.0 / n as f64, 0.0));
            sum = sum + term;
        }
        assert!((Mat2::exp_antidiagonal(q12, q21) - sum).max_abs() < 1e-15);
        let small = Mat2::exp_antidiagonal(C64::new(1e-3, 0.0), C64::new(2e-3, 1e-3));
        let big = Mat2::exp_antidiagonal(C64::new(1e-3, 0.0), C64::new(2e-3, 1e-3) * 1.0000001);
        assert!((small - big).max_abs() < 1e-9);
    }

    #[test]
    fn inverse_exponential() {
        let (q12, q21) = (C64::new(0.7, 0.1), C64::new(0.2, -0.5));
        let e = Mat2::exp_antidiagonal(q12, q21);
        let ei = Mat2::exp_antidiagonal(-q12, -q21);
        assert!(((e * ei) - Mat2::IDENTITY).max_abs() < 1e-14);
        assert!((e.det() - 1.0).norm() < 1e-14);
    }
}
