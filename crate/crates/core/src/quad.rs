//! Quadrature on finite intervals: adaptive Gauss-Kronrod and fixed Gauss-Legendre panels.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 8-point Gauss-Legendre nodes and weights on `[-1, 1]` (positive half).
pub const GL8_X: [f64; 4] = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
pub const GL8_W: [f64; 4] = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Globally adaptive G7-K15 on `[a, b]`; bisects the worst interval until
/// the summed error estimate drops below `max(abs_tol, rel_tol·|I|)`.
pub fn gauss_kronrod<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_intervals: usize) -> QuadResult {
    if a == b {
        return QuadResult { value: C64::new(0.0, 0.0), error: 0.0, evals: 0, converged: true };
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts: Vec<(f64, f64, C64, f64)> = alloc::vec![(a, b, v, e)];
    let mut evals = 15;
    loop {
        let total: C64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) || parts.len() >= max_intervals {
            let converged = err <= abs_tol.max(rel_tol * total.norm());
            return QuadResult { value: total, error: err, evals, converged };
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        evals += 30;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Composite 8-point Gauss-Legendre with `panels` equal panels.
pub fn gauss_legendre<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, panels: usize) -> C64 {
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut sum = C64::new(0.0, 0.0);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * w;
        let h = 0.5 * w;
        for j in 0..4 {
            sum += (f(c - h * GL8_X[j]) + f(c + h * GL8_X[j])) * (GL8_W[j] * h);
        }
    }
    sum
}

/// Real version of [`gauss_legendre`].
pub fn gauss_legendre_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    gauss_legendre(|x| C64::new(f(x), 0.0), a, b, panels).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_oscillatory() {
        let r = gauss_kronrod(|x| C64::new(x * x * x, 0.0), 0.0, 2.0, 1e-14, 1e-14, 100);
        assert!((r.value.re - 4.0).abs() < 1e-13);
        let r = gauss_kronrod(|x| C64::new(0.0, x).exp(), 0.0, 50.0, 1e-13, 1e-13, 500);
        let exact = (C64::new(0.0, 50.0).exp() - 1.0) / C64::new(0.0, 1.0);
        assert!((r.value - exact).norm() < 1e-12);
        let g = gauss_legendre_real(|x| x.exp(), 0.0, 1.0, 4);
        assert!((g - (1.0_f64.exp() - 1.0)).abs() < 1e-14);
    }
}
