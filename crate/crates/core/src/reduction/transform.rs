//! The Harris-Lutz matrix `Q(x, λ, μ)` that removes the non-summable
//! anti-diagonal part of the `v`-system.
//!
//! With `s(x) = sin(2ωx+δ)/(x+1)^γ`, `Q` has zero diagonal and solves
//! `Q₁₂' = -(2ik/a)Q₁₂ - c·s·p₊²/W`, `Q₂₁' = (2ik/a)Q₂₁ + c·s·p₋²/W`
//! (all at `λ`). The integration constants are fixed by
//! `Q₁₂ → 0` and, for the lower entry, by the real anchor `μ`:
//! `Q₂₁(x) = e^{2ik(λ)x/a}[∫₀^x e^{-2ik(λ)t/a}h(t)dt - ∫₀^∞ e^{-2ik(μ)t/a}h(t)dt]`
//! with `h = c·s·p₋²/W`. Expanding `p±²` in Fourier series turns both
//! entries into sums of the scalar kernels of [`super::kernel`].

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::periodic::{BlochData, FourierTable};

use super::bounds;
use super::kernel::{HeadKernel, TailKernel};
use super::resonance::{epsilon_value, in_neighbourhood};
use super::{validate_frequency, WvNTerm};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug)]
struct TailMode {
    coef: C64,
    theta: f64,
    kernel: TailKernel,
}

#[derive(Clone, Debug)]
struct HeadMode {
    coef: C64,
    theta: f64,
    kernel: HeadKernel,
}

/// `Q(x, λ, μ)` for one spectral point `λ` and anchor `μ`.
#[derive(Clone, Debug)]
pub struct HarrisLutzQ {
    pub mu: f64,
    pub lambda: C64,
    pub k: C64,
    pub k_mu: f64,
    pub period: f64,
    pub w: C64,
    pub wvn: WvNTerm,
    /// `ε(μ)`
    pub epsilon: f64,
    pub beta: f64,
    /// `λ = μ`: the lower entry is a pure tail and `Q₂₁ᴵ ≡ 0`.
    pub same_point: bool,
    /// `max (x+1)^γ max(‖Q‖, ‖Q'‖)` over sampled `x ∈ [0, 10³]`.
    pub c1: f64,
    bloch: BlochData,
    upper: Vec<TailMode>,
    lower_tail: Vec<TailMode>,
    lower_head: Vec<HeadMode>,
    lower_const: C64,
}

fn significant(t: &FourierTable) -> impl Iterator<Item = (i64, C64)> + '_ {
    let cut = 1e-15 * t.l1();
    t.iter().filter(move |(_, b)| b.norm() > cut)
}

/// Build `Q` at `bloch.lambda` anchored at the real in-band point `anchor.lambda`.
pub fn build_q(bloch: &BlochData, anchor: &BlochData, wvn: &WvNTerm, beta: f64) -> Result<HarrisLutzQ> {
    let a = bloch.period;
    if !anchor.on_band() || anchor.lambda.im != 0.0 {
        return Err(Error::InvalidInput("the anchor must be a real band-interior point"));
    }
    if bloch.lambda.im < 0.0 {
        return Err(Error::InvalidInput("lambda must lie in the closed upper half-plane"));
    }
    let check = validate_frequency(a, wvn.omega);
    if !check.passes {
        return Err(Error::FrequencyCondition { distance: check.distance });
    }
    let k = bloch.k;
    let k_mu = anchor.k.re;
    let epsilon = epsilon_value(C64::new(k_mu, 0.0), a, wvn.omega);
    if epsilon < 1e-9 {
        return Err(Error::ResonanceProximity { epsilon });
    }
    if !in_neighbourhood(k, k_mu, a, wvn.omega, beta) {
        return Err(Error::OutsideNeighbourhood);
    }
    let same_point = bloch.lambda == anchor.lambda;
    let pre = C64::new(wvn.c, 0.0) / (2.0 * I * bloch.w);
    let mut upper = Vec::new();
    let mut lower_tail = Vec::new();
    let mut lower_head = Vec::new();
    let mut lower_const = C64::new(0.0, 0.0);
    if wvn.c != 0.0 {
        for sigma in [1.0, -1.0] {
            let phase = C64::from_polar(sigma, sigma * wvn.delta);
            for (n, b) in significant(&bloch.b) {
                let theta = 2.0 * sigma * wvn.omega + 2.0 * PI * n as f64 / a;
                let eta = 2.0 * k / a + theta;
                upper.push(TailMode { coef: pre * b * phase, theta, kernel: TailKernel::new(eta, wvn.gamma)? });
            }
            for (n, b) in significant(&bloch.b_hat) {
                let theta = 2.0 * sigma * wvn.omega + 2.0 * PI * n as f64 / a;
                let zeta = C64::new(-2.0 * k_mu / a + theta, 0.0);
                let coef = pre * b * phase;
                let tail = TailKernel::new(zeta, wvn.gamma)?;
                if !same_point {
                    let xi1 = 2.0 * k / a - theta;
                    lower_head.push(HeadMode { coef, theta, kernel: HeadKernel::new(xi1, wvn.gamma)? });
                    lower_const += coef * tail.eval(0.0);
                }
                lower_tail.push(TailMode { coef, theta, kernel: tail });
            }
        }
    }
    let mut q = HarrisLutzQ {
        mu: anchor.lambda.re,
        lambda: bloch.lambda,
        k,
        k_mu,
        period: a,
        w: bloch.w,
        wvn: *wvn,
        epsilon,
        beta,
        same_point,
        c1: 0.0,
        bloch: bloch.clone(),
        upper,
        lower_tail,
        lower_head,
        lower_const,
    };
    q.c1 = q.sampled_decay_constant(1e3, 48);
    Ok(q)
}

impl HarrisLutzQ {
    pub fn bloch(&self) -> &BlochData {
        &self.bloch
    }

    pub fn q12(&self, x: f64) -> C64 {
        self.upper.iter().map(|m| m.coef * C64::from_polar(1.0, m.theta * x) * m.kernel.eval(x)).sum()
    }

    fn q21_tail_sum(&self, x: f64) -> C64 {
        self.lower_tail.iter().map(|m| m.coef * C64::from_polar(1.0, m.theta * x) * m.kernel.eval(x)).sum()
    }

    pub fn q21(&self, x: f64) -> C64 {
        if self.same_point {
            return -self.q21_tail_sum(x);
        }
        let head: C64 = self.lower_head.iter().map(|m| m.coef * C64::from_polar(1.0, m.theta * x) * m.kernel.eval(x)).sum();
        head - (2.0 * I * self.k * x / self.period).exp() * self.lower_const
    }

    /// `(Q₂₁ᴵ, Q₂₁ᴵᴵ)`: the finite-interval difference part and the tail part.
    pub fn q21_parts(&self, x: f64) -> (C64, C64) {
        let delta = (self.k - self.k_mu) / self.period;
        let second = -(2.0 * I * delta * x).exp() * self.q21_tail_sum(x);
        if self.same_point {
            return (C64::new(0.0, 0.0), second);
        }
        (self.q21(x) - second, second)
    }

    pub fn matrix(&self, x: f64) -> Mat2 {
        Mat2::anti(self.q12(x), self.q21(x))
    }

    /// `s(x)·c` and `(p₊², p₋²)` at `x`.
    fn forcing(&self, x: f64) -> (f64, C64, C64) {
        let (pp, pm) = self.bloch.p_pair(x);
        (self.wvn.value(x), pp * pp, pm * pm)
    }

    /// `Q'` from the defining equations (no differentiation).
    pub fn derivative_closed_form(&self, x: f64, q: &Mat2) -> Mat2 {
        let (cs, pp2, pm2) = self.forcing(x);
        let d = 2.0 * I * self.k / self.period;
        Mat2::anti(-d * q.get(0, 1) - pp2 * cs / self.w, d * q.get(1, 0) + pm2 * cs / self.w)
    }

    pub fn derivative(&self, x: f64) -> Mat2 {
        let q = self.matrix(x);
        self.derivative_closed_form(x, &q)
    }

    /// Anti-diagonal right-hand side `(-c·s·p₊²/W, c·s·p₋²/W)`.
    pub fn forcing_matrix(&self, x: f64) -> Mat2 {
        let (cs, pp2, pm2) = self.forcing(x);
        Mat2::anti(-pp2 * cs / self.w, pm2 * cs / self.w)
    }

    fn sampled_decay_constant(&self, x_max: f64, count: usize) -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..count {
            let x = (x_max + 1.0).powf(j as f64 / (count - 1) as f64) - 1.0;
            let q = self.matrix(x);
            let dq = self.derivative_closed_form(x, &q);
            best = best.max(q.norm().max(dq.norm()) * (x + 1.0).powf(self.wvn.gamma));
        }
        best
    }

    /// The analytic estimate of `‖Q(x)‖` on the real line from the tail bound
    /// and the estimate of the beginning (diagnostic only).
    pub fn analytic_bound(&self, x: f64) -> f64 {
        bounds::q_norm_bound(
            self.wvn.c,
            self.w.norm(),
            self.epsilon,
            self.beta,
            self.wvn.gamma,
            self.bloch.b.l1(),
            self.bloch.b_hat.l1(),
            x,
        )
    }
}

/// Five-point finite-difference derivative of `f` at `x ≥ 0` (one-sided near 0).
pub fn fd_derivative<F: Fn(f64) -> Mat2>(f: F, x: f64, h: f64) -> Mat2 {
    if x >= 2.0 * h {
        (f(x - 2.0 * h) - f(x - h).scale(C64::new(8.0, 0.0)) + f(x + h).scale(C64::new(8.0, 0.0)) - f(x + 2.0 * h))
            .scale(C64::new(1.0 / (12.0 * h), 0.0))
    } else {
        let c = [-25.0, 48.0, -36.0, 16.0, -3.0];
        let mut acc = Mat2::ZERO;
        for (j, cj) in c.iter().enumerate() {
            acc = acc + f(x + j as f64 * h).scale(C64::new(*cj, 0.0));
        }
        acc.scale(C64::new(1.0 / (12.0 * h), 0.0))
    }
}

/// `max ‖Q' + [Q, diag(-ik/a, ik/a)] - F‖` over `xs`, with `Q'` from finite
/// differences and `F` the anti-diagonal forcing.
pub fn verify_q_equation(q: &HarrisLutzQ, xs: &[f64]) -> f64 {
    let d = I * q.k / q.period;
    let diag = Mat2::diag(-d, d);
    let mut worst: f64 = 0.0;
    for &x in xs {
        let h = 2e-3;
        let dq = fd_derivative(|t| q.matrix(t), x, h);
        let qm = q.matrix(x);
        let res = dq + qm.commutator(&diag) - q.forcing_matrix(x);
        worst = worst.max(res.norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::{bloch_at, BlochOptions, PeriodicPotential};
    use crate::quad::gauss_kronrod;

    fn free_bloch(lambda: C64) -> BlochData {
        let p = PeriodicPotential::free(1.0).unwrap();
        // free a=1: band n holds k ∈ [nπ, (n+1)π] with k = √λ
        let band = (lambda.re.sqrt() / PI).floor() as usize;
        bloch_at(&p, lambda, band, &BlochOptions::default()).unwrap()
    }

    #[test]
    fn free_q12_against_quadrature() {
        let b = free_bloch(C64::new(4.0, 0.0));
        assert!((b.w - C64::new(0.0, 4.0)).norm() < 1e-9);
        let wvn = WvNTerm::new(1.0, 0.3, 0.0, 1.0).unwrap();
        let q = build_q(&b, &b, &wvn, 1.0).unwrap();
        // e^{-4ix}∫ₓ^∞ sin(0.6t)e^{4it}/(t+1)dt / W, contour rotated by t = x + is
        for &x in &[0.0, 2.0, 30.0] {
            let r = gauss_kronrod(
                |s| {
                    let t = C64::new(x, s);
                    let sin = ((I * 0.6 * t).exp() - (-I * 0.6 * t).exp()) / (2.0 * I);
                    sin * (I * 4.0 * (t - x)).exp() / (t + 1.0) * I
                },
                0.0,
                60.0,
                1e-15,
                1e-13,
                4000,
            );
            let want = r.value / b.w;
            assert!((q.q12(x) - want).norm() < 1e-10, "x={x}: {} vs {}", q.q12(x), want);
        }
        assert!(q.q21_parts(3.0).0.norm() == 0.0);
    }

    #[test]
    fn q_equation_holds() {
        let b = free_bloch(C64::new(4.0, 0.0));
        let wvn = WvNTerm::new(1.0, 0.3, 0.4, 1.0).unwrap();
        let q = build_q(&b, &b, &wvn, 1.0).unwrap();
        let xs: Vec<f64> = (0..50).map(|j| j as f64).collect();
        assert!(verify_q_equation(&q, &xs) < 1e-6);
        let off = free_bloch(C64::new(4.0, 0.05));
        let q = build_q(&off, &b, &wvn, 1.0).unwrap();
        assert!(verify_q_equation(&q, &xs) < 1e-6);
    }

    #[test]
    fn no_wvn_term_gives_zero() {
        let b = free_bloch(C64::new(4.0, 0.0));
        let wvn = WvNTerm::new(0.0, 0.3, 0.0, 1.0).unwrap();
        let q = build_q(&b, &b, &wvn, 1.0).unwrap();
        assert!(q.matrix(1.0).norm() == 0.0);
        assert!(verify_q_equation(&q, &[0.0, 1.0, 5.0]) == 0.0);
    }
}
