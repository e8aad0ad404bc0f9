//! Scalar oscillatory kernels with the weight `g(t) = (t+1)^{-γ}`:
//!
//! - tail `S(η, x) = e^{-iηx}∫ₓ^∞ e^{iηt} g(t) dt` for `Im η ≥ 0`;
//! - head `F(ξ, x) = e^{iξx}∫₀^x e^{-iξt} g(t) dt` for `Im ξ ≥ 0`.
//!
//! Far out (`|η|(x+1) ≥ 40`) both come from the integration-by-parts series.
//! Closer in they are tabulated from their first-order ODEs
//! (`S' = -iηS - g`, `F' = iξF + g`) and read back by quintic Hermite
//! interpolation.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::ode::{self, State, ToleranceSpec};

const I: C64 = C64::new(0.0, 1.0);
/// `|η|(x+1)` above which the asymptotic series is used.
pub const SERIES_THRESHOLD: f64 = 40.0;

/// `-Σ_j (γ)_j (x+1)^{-γ-j} / (iη)^{j+1}`, summed to its smallest term.
///
/// Returns the sum and the magnitude of the first omitted term.
pub fn tail_series(eta: C64, gamma: f64, x: f64) -> (C64, f64) {
    let xp = x + 1.0;
    let ie = I * eta;
    let mut term = -xp.powf(-gamma) / ie;
    let mut sum = C64::new(0.0, 0.0);
    let mut j = 0.0;
    loop {
        sum += term;
        let ratio = (gamma + j) / (xp * ie);
        let next = term * ratio;
        if next.norm() <= 1e-17 * sum.norm() || ratio.norm() >= 1.0 || j > 200.0 {
            return (sum, next.norm());
        }
        term = next;
        j += 1.0;
    }
}

fn weight(gamma: f64, x: f64) -> (f64, f64) {
    let g = (x + 1.0).powf(-gamma);
    (g, -gamma * g / (x + 1.0))
}

fn table_nodes(scale: f64, x0: f64) -> Vec<f64> {
    let mut nodes = alloc::vec![0.0];
    let mut x = 0.0;
    while x < x0 {
        let h = (0.05 / scale).min(0.02 * (x + 1.0));
        x = (x + h).min(x0);
        nodes.push(x);
    }
    nodes
}

fn kernel_tolerance() -> ToleranceSpec {
    ToleranceSpec::new(1e-13, 1e-17)
}

#[derive(Clone, Debug)]
struct Table {
    nodes: Vec<f64>,
    /// value, first and second derivative
    vals: Vec<[C64; 3]>,
}

impl Table {
    fn eval(&self, x: f64) -> C64 {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&t| t <= x).clamp(1, n - 1) - 1;
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
        let h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 0.5 * t3 - t4 + 0.5 * t5;
        let (a, b) = (&self.vals[i], &self.vals[i + 1]);
        a[0] * h0 + a[1] * (h * h1) + a[2] * (h * h * h2) + b[0] * h3 + b[1] * (h * h4) + b[2] * (h * h * h5)
    }
}

/// Tabulated tail kernel `S(η, ·)`.
#[derive(Clone, Debug)]
pub struct TailKernel {
    pub eta: C64,
    pub gamma: f64,
    x0: f64,
    table: Option<Table>,
}

impl TailKernel {
    pub fn new(eta: C64, gamma: f64) -> Result<Self> {
        if eta.norm() < 1e-6 || eta.im < 0.0 {
            return Err(Error::ResonanceProximity { epsilon: eta.norm() });
        }
        let x0 = (SERIES_THRESHOLD / eta.norm() - 1.0).max(0.0);
        if x0 == 0.0 {
            return Ok(TailKernel { eta, gamma, x0, table: None });
        }
        let nodes = table_nodes(eta.norm(), x0);
        let start = tail_series(eta, gamma, x0).0;
        let rhs = move |x: f64, y: &State<1>| [-I * eta * y[0] - weight(gamma, x).0];
        let rev: Vec<f64> = nodes.iter().rev().copied().collect();
        let vals = ode::integrate_sampled(rhs, [start], x0, &rev, &[], kernel_tolerance())?;
        let mut table: Vec<[C64; 3]> = rev
            .iter()
            .zip(vals)
            .map(|(&x, y)| {
                let (g, dg) = weight(gamma, x);
                let d1 = -I * eta * y[0] - g;
                [y[0], d1, -I * eta * d1 - dg]
            })
            .collect();
        table.reverse();
        Ok(TailKernel { eta, gamma, x0, table: Some(Table { nodes, vals: table }) })
    }

    pub fn eval(&self, x: f64) -> C64 {
        match &self.table {
            Some(t) if x < self.x0 => t.eval(x),
            _ => tail_series(self.eta, self.gamma, x).0,
        }
    }

    /// `dS/dx = -iηS - g`.
    pub fn derivative(&self, x: f64, value: C64) -> C64 {
        -I * self.eta * value - weight(self.gamma, x).0
    }
}

/// Tabulated head kernel `F(ξ, ·)`.
#[derive(Clone, Debug)]
pub struct HeadKernel {
    pub xi: C64,
    pub gamma: f64,
    x0: f64,
    /// `F(x0) + S_p(-ξ, x0)`
    matched: C64,
    table: Option<Table>,
}

impl HeadKernel {
    pub fn new(xi: C64, gamma: f64) -> Result<Self> {
        if xi.norm() < 1e-6 || xi.im < 0.0 {
            return Err(Error::ResonanceProximity { epsilon: xi.norm() });
        }
        let x0 = (SERIES_THRESHOLD / xi.norm() - 1.0).max(0.0);
        if x0 == 0.0 {
            let matched = tail_series(-xi, gamma, 0.0).0;
            return Ok(HeadKernel { xi, gamma, x0, matched, table: None });
        }
        let nodes = table_nodes(xi.norm(), x0);
        let rhs = move |x: f64, y: &State<1>| [I * xi * y[0] + weight(gamma, x).0];
        let vals = ode::integrate_sampled(rhs, [C64::new(0.0, 0.0)], 0.0, &nodes, &[], kernel_tolerance())?;
        let f_end = vals.last().map(|v| v[0]).unwrap_or_default();
        let table: Vec<[C64; 3]> = nodes
            .iter()
            .zip(vals)
            .map(|(&x, y)| {
                let (g, dg) = weight(gamma, x);
                let d1 = I * xi * y[0] + g;
                [y[0], d1, I * xi * d1 + dg]
            })
            .collect();
        let matched = f_end + tail_series(-xi, gamma, x0).0;
        Ok(HeadKernel { xi, gamma, x0, matched, table: Some(Table { nodes, vals: table }) })
    }

    pub fn eval(&self, x: f64) -> C64 {
        match &self.table {
            Some(t) if x < self.x0 => t.eval(x),
            _ => -tail_series(-self.xi, self.gamma, x).0 + (I * self.xi * (x - self.x0)).exp() * self.matched,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_kronrod;

    fn tail_oracle(eta: C64, gamma: f64, x: f64) -> C64 {
        // rotate the contour: t = x + iτ/|η|-direction for Re η > 0 gives exponential decay
        let dir = I * eta.conj() / eta.norm();
        let r = gauss_kronrod(
            |s| {
                let t = C64::new(x, 0.0) + dir * s;
                (I * eta * (t - x)).exp() * (t + 1.0).powf(-gamma) * dir
            },
            0.0,
            60.0 / eta.norm(),
            1e-15,
            1e-14,
            2000,
        );
        r.value
    }

    #[test]
    fn tail_kernel_matches_rotated_contour() {
        for &(eta, gamma) in &[(C64::new(0.4, 0.0), 0.9), (C64::new(-1.3, 0.05), 1.0), (C64::new(2.7, 0.3), 0.6), (C64::new(55.0, 0.0), 0.75)] {
            let k = TailKernel::new(eta, gamma).unwrap();
            for &x in &[0.0, 0.37, 3.0, 17.5, 80.0, 400.0] {
                let want = tail_oracle(eta, gamma, x);
                let got = k.eval(x);
                assert!((got - want).norm() < 1e-11 * (1.0 + want.norm()), "η={eta} x={x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn head_kernel_matches_quadrature() {
        for &(xi, gamma) in &[(C64::new(0.45, 0.02), 0.9), (C64::new(-0.8, 0.2), 1.0), (C64::new(3.0, 0.0), 0.7)] {
            let k = HeadKernel::new(xi, gamma).unwrap();
            for &x in &[0.0, 0.5, 6.0, 40.0, 150.0, 600.0] {
                let r = gauss_kronrod(|t| (I * xi * (x - t)).exp() * (t + 1.0).powf(-gamma), 0.0, x, 1e-15, 1e-14, 4000);
                assert!((k.eval(x) - r.value).norm() < 1e-10 * (1.0 + r.value.norm()), "ξ={xi} x={x}");
            }
        }
    }
}
