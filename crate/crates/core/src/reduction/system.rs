//! The Levinson-form system for `ṽ = e^{-Q}v`:
//! `ṽ' = (diag(ν, -ν) + R⁽²⁾)ṽ` with `ν = -ik/a - c·s·p₊p₋/W` and
//! `R⁽²⁾ = e^{-Q}(D + V + R⁽¹⁾)e^{Q} - D - V_d - e^{-Q}(e^{Q})'`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::levinson::DiagonalSystem;
use crate::linalg::{cosh_sinhc, sinhc_slope, Mat2};
use crate::quad::gauss_legendre_real;

use super::kernel::TailKernel;
use super::transform::HarrisLutzQ;
use super::{DecayingTerm, OperatorSpec};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevinsonOptions {
    /// Horizon of the numerical part of `∫‖R⁽²⁾‖`.
    pub horizon: f64,
    /// Whether to compute `∫‖R⁽²⁾‖` and `M` at construction.
    pub estimate: bool,
}

impl Default for LevinsonOptions {
    fn default() -> Self {
        LevinsonOptions { horizon: 1e4, estimate: true }
    }
}

#[derive(Clone, Debug)]
struct PhaseMode {
    coef: C64,
    theta: f64,
    kernel: TailKernel,
}

#[derive(Clone, Debug)]
pub struct LevinsonSystem {
    q: Arc<HarrisLutzQ>,
    q1: DecayingTerm,
    phase_modes: Arc<Vec<PhaseMode>>,
    /// `∫₀^∞ c·s·p₊p₋/W`
    phase_limit: C64,
    /// Estimated `∫₀^∞‖R⁽²⁾‖` (numerical part plus tail bound).
    pub remainder_l1: f64,
    /// Constant `C` of the tail bound `C/((2γ-1)(X+1)^{2γ-1})`.
    pub tail_constant: f64,
    pub horizon: f64,
    /// Estimated `M` with `∫ₓ^y Re ν ≥ -M`.
    pub m: f64,
}

/// Assemble `ν` and `R⁽²⁾` for `q.lambda` and estimate `∫‖R⁽²⁾‖` and `M`.
pub fn build_levinson_system(spec: &OperatorSpec, q: &HarrisLutzQ, opts: &LevinsonOptions) -> Result<LevinsonSystem> {
    let wvn = spec.wvn;
    if (spec.period() - q.period).abs() > 1e-12 * q.period || spec.wvn != q.wvn {
        return Err(Error::InvalidInput("operator and Q were built for different models"));
    }
    let b = q.bloch();
    let a = q.period;
    let pre = C64::new(wvn.c, 0.0) / (2.0 * I * q.w);
    let mut modes = Vec::new();
    let mut phase_limit = C64::new(0.0, 0.0);
    if wvn.c != 0.0 {
        let cut = 1e-15 * b.b_tilde.l1();
        for sigma in [1.0, -1.0] {
            let phase = C64::from_polar(sigma, sigma * wvn.delta);
            for (n, bt) in b.b_tilde.iter().filter(|(_, c)| c.norm() > cut) {
                let theta = 2.0 * sigma * wvn.omega + 2.0 * PI * n as f64 / a;
                let kernel = TailKernel::new(C64::new(theta, 0.0), wvn.gamma)?;
                let coef = pre * bt * phase;
                phase_limit += coef * kernel.eval(0.0);
                modes.push(PhaseMode { coef, theta, kernel });
            }
        }
    }
    let mut sys = LevinsonSystem {
        q: Arc::new(q.clone()),
        q1: spec.q1.clone(),
        phase_modes: Arc::new(modes),
        phase_limit,
        remainder_l1: f64::NAN,
        tail_constant: f64::NAN,
        horizon: opts.horizon,
        m: f64::NAN,
    };
    if opts.estimate {
        sys.estimate(opts.horizon);
    }
    Ok(sys)
}

impl LevinsonSystem {
    pub fn q(&self) -> &HarrisLutzQ {
        &self.q
    }

    fn d(&self) -> C64 {
        -I * self.q.k / self.q.period
    }

    /// `c·s·p₊p₋/W` and `q₁` parts at `x` (returns the matrix `V + R⁽¹⁾` too).
    fn perturbation(&self, x: f64) -> (C64, Mat2) {
        let (pp, pm) = self.q.bloch().p_pair(x);
        let total = self.q.wvn.value(x) + self.q1.value(x);
        let f = C64::new(total, 0.0) / self.q.w;
        let m = Mat2::new(-f * pp * pm, -f * pp * pp, f * pm * pm, f * pp * pm);
        let wv = C64::new(self.q.wvn.value(x), 0.0) / self.q.w * pp * pm;
        (wv, m)
    }

    /// `ν(x) = -ik/a - c·s·p₊p₋/W`.
    pub fn nu(&self, x: f64) -> C64 {
        self.d() - self.perturbation(x).0
    }

    /// `R⁽¹⁾ = (q₁/W)·[[-p₊p₋, -p₊²], [p₋², p₊p₋]]`.
    pub fn r1(&self, x: f64) -> Mat2 {
        let (pp, pm) = self.q.bloch().p_pair(x);
        let f = C64::new(self.q1.value(x), 0.0) / self.q.w;
        Mat2::new(-f * pp * pm, -f * pp * pp, f * pm * pm, f * pp * pm)
    }

    /// `∫₀ˣ c·s·p₊p₋/W` in closed form.
    pub fn wvn_phase(&self, x: f64) -> C64 {
        let tail: C64 = self.phase_modes.iter().map(|m| m.coef * C64::from_polar(1.0, m.theta * x) * m.kernel.eval(x)).sum();
        self.phase_limit - tail
    }

    /// `∫₀^∞ c·s·p₊p₋/W`.
    pub fn wvn_phase_limit(&self) -> C64 {
        self.phase_limit
    }

    /// `∫₀ˣ ν = -ikx/a - ∫₀ˣ c·s·p₊p₋/W`.
    pub fn phase_integral(&self, x: f64) -> C64 {
        self.d() * x - self.wvn_phase(x)
    }

    fn assemble(&self, x: f64, e_prime: impl Fn(&Mat2, C64, C64) -> Mat2) -> Mat2 {
        let qm = self.q.matrix(x);
        let (q12, q21) = (qm.get(0, 1), qm.get(1, 0));
        let (ch, sh) = cosh_sinhc(q12 * q21);
        let e = Mat2::new(ch, sh * q12, sh * q21, ch);
        let e_inv = Mat2::new(ch, -sh * q12, -sh * q21, ch);
        let d = self.d();
        let (wv, pert) = self.perturbation(x);
        let g = Mat2::diag(d, -d) + pert;
        let nu = d - wv;
        let ep = e_prime(&qm, ch, sh);
        e_inv * g * e - Mat2::diag(nu, -nu) - e_inv * ep
    }

    /// `R⁽²⁾(x)` with `(e^Q)'` from the closed-form `Q'`.
    pub fn remainder(&self, x: f64) -> Mat2 {
        self.assemble(x, |qm, _ch, sh| {
            let dq = self.q.derivative_closed_form(x, qm);
            let (q12, q21) = (qm.get(0, 1), qm.get(1, 0));
            let dr2 = dq.get(0, 1) * q21 + q12 * dq.get(1, 0);
            let dch = sh * dr2 / 2.0;
            let dsh = sinhc_slope(q12 * q21) * dr2;
            Mat2::diag(dch, dch) + qm.scale(dsh) + dq.scale(sh)
        })
    }

    /// `R⁽²⁾(x)` with `(e^Q)'` from central differences, step `10⁻⁴(x+1)`.
    pub fn remainder_fd(&self, x: f64) -> Mat2 {
        self.assemble(x, |_, _, _| {
            let h = 1e-4 * (x + 1.0);
            let ex = |t: f64| {
                let q = self.q.matrix(t);
                Mat2::exp_antidiagonal(q.get(0, 1), q.get(1, 0))
            };
            let inv = C64::new(1.0 / (2.0 * h), 0.0);
            if x >= h {
                (ex(x + h) - ex(x - h)).scale(inv)
            } else {
                (ex(x).scale(C64::new(-3.0, 0.0)) + ex(x + h).scale(C64::new(4.0, 0.0)) - ex(x + 2.0 * h)).scale(inv)
            }
        })
    }

    /// `max(|R₂₁ - conj R₁₂|, |R₂₂ - conj R₁₁|)` at `x`.
    pub fn conjugation_residual(&self, x: f64) -> f64 {
        let r = self.remainder(x);
        (r.get(1, 0) - r.get(0, 1).conj()).norm().max((r.get(1, 1) - r.get(0, 0).conj()).norm())
    }

    fn panel_width(&self) -> f64 {
        let a = self.q.period;
        let n_eff = self.q.bloch().b.cutoff.min(8) as f64;
        let fmax = 2.0 * self.q.k.norm() / a + 2.0 * self.q.wvn.omega.abs() + 2.0 * PI * n_eff / a;
        (2.0 / fmax).min(1.0)
    }

    /// `∫_{x0}^{x1}‖R⁽²⁾‖`, with extra panels at breakpoints of `q₁`.
    pub fn remainder_l1_between(&self, x0: f64, x1: f64) -> f64 {
        let mut pts = alloc::vec![x0];
        pts.extend(self.q1.q1.breakpoints_in(x0, x1));
        pts.extend(self.q.bloch().period_breaks(x0, x1));
        pts.push(x1);
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        let width = self.panel_width();
        pts.windows(2)
            .map(|w| {
                let panels = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
                gauss_legendre_real(|x| self.remainder(x).norm(), w[0], w[1], panels)
            })
            .sum()
    }

    /// Fill `remainder_l1`, `tail_constant` and `m` for horizon `X`.
    pub fn estimate(&mut self, horizon: f64) {
        let gamma = self.q.wvn.gamma;
        let body = self.remainder_l1_between(0.0, horizon);
        let mut c: f64 = 0.0;
        for j in 0..64 {
            let x = horizon * (0.5 + 0.5 * j as f64 / 63.0);
            let r = (self.remainder(x) - self.r1(x)).norm();
            c = c.max(r * (x + 1.0).powf(2.0 * gamma));
        }
        let mut tail = c / ((2.0 * gamma - 1.0) * (horizon + 1.0).powf(2.0 * gamma - 1.0));
        if let Some((cq, p)) = self.q1.envelope {
            let pmax = self.q.bloch().p_sup();
            tail += 2.0 * pmax * pmax / self.q.w.norm() * cq * (1.0 + horizon).powf(1.0 - p) / (p - 1.0);
        }
        self.remainder_l1 = body + tail;
        self.tail_constant = c;
        self.horizon = horizon;
        self.m = self.estimate_m(horizon);
    }

    /// `M` from the closed-form `Re ∫ν` on a grid of spacing `a/8`.
    pub fn estimate_m(&self, horizon: f64) -> f64 {
        let step = self.q.period / 8.0;
        let n = (horizon / step).ceil() as usize;
        let mut peak = f64::NEG_INFINITY;
        let mut worst: f64 = 0.0;
        for j in 0..=n {
            let v = self.phase_integral(j as f64 * step).re;
            peak = peak.max(v);
            worst = worst.max(peak - v);
        }
        worst
    }

    /// The generic system `(ν, R⁽²⁾, ∫‖R⁽²⁾‖, M)`.
    pub fn diagonal_system(&self) -> DiagonalSystem {
        let a = self.clone();
        let b = self.clone();
        DiagonalSystem::new(move |x| a.nu(x), move |x| b.remainder(x), self.remainder_l1, self.m)
    }
}
