//! Extraction of the asymptotic coefficient `A_α(λ)` from the regular solution.
//!
//! On a band `φ_α = A ψ₋ + conj(A) ψ₊ + o(1)`, so the coefficient of `ψ₋`,
//! `u₁[φ](x) = (ψ₊'φ - ψ₊φ')/W`, tends to `A`. Its approach is oscillatory;
//! window means over `[X, X + L]` on a doubling schedule of `X` remove most
//! of the oscillation. In the upper half-plane the same quantity tends to
//! `A(λ)` as well.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::levinson::{asymptotic_coefficient, HorizonSchedule, Regime};
use crate::linalg::Mat2;
use crate::ode::ToleranceSpec;
use crate::periodic::BlochData;
use crate::reduction::{HarrisLutzQ, LevinsonSystem};

use super::cauchy::{u_of, CauchyStream};

const I: C64 = C64::new(0.0, 1.0);

/// Window and schedule settings for the extraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractOptions {
    /// Window length in periods.
    pub window_periods: f64,
    pub samples_per_period: usize,
    /// First window start in periods; later starts double.
    pub first_start_periods: f64,
    /// Minimum number of windows before stabilization is tested.
    pub min_windows: usize,
    /// Default last window start in periods.
    pub x_max_periods: f64,
    /// Hard cap in periods for the adaptive extension.
    pub x_cap_periods: f64,
    /// Relative tolerance on `|A|` between consecutive windows
    /// (and on `A` itself off the real axis).
    pub tol: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            window_periods: 10.0,
            samples_per_period: 16,
            first_start_periods: 125.0,
            min_windows: 4,
            x_max_periods: 2000.0,
            x_cap_periods: 16000.0,
            tol: 1e-6,
        }
    }
}

/// One window of the schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowRecord {
    pub start: f64,
    /// Window mean of `u₁[φ_α]`.
    pub a: C64,
    /// Window mean for `θ_α = φ_{α+π/2}`.
    pub a_shift: C64,
    /// `sup |φ - (Aψ₋ + conj(A)ψ₊)|` over the window (band points only).
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticCoefficient {
    pub lambda: C64,
    pub alpha: f64,
    /// `A_α(λ)`
    pub a: C64,
    /// `A_{α+π/2}(λ)`
    pub a_shift: C64,
    pub regime: Regime,
    pub windows: Vec<WindowRecord>,
    pub stabilized: bool,
    pub last_change: f64,
}

impl AsymptoticCoefficient {
    /// `r(X)` across the schedule.
    pub fn residuals(&self) -> Vec<(f64, f64)> {
        self.windows.iter().map(|w| (w.start, w.residual)).collect()
    }

    /// Whether `r(X)` is non-increasing across the first `n` windows.
    pub fn residual_non_increasing(&self, n: usize) -> bool {
        self.windows.iter().take(n).collect::<Vec<_>>().windows(2).all(|w| w[1].residual <= w[0].residual)
    }
}

/// Window mean of `u₁` for `φ` and `θ`, optionally in the `e^{-Q}` frame,
/// plus the band residual.
fn window(
    stream: &mut CauchyStream,
    bloch: &BlochData,
    q: Option<&HarrisLutzQ>,
    start: f64,
    opts: &ExtractOptions,
    on_band: bool,
) -> Result<WindowRecord> {
    let a = bloch.period;
    let n = (opts.window_periods * opts.samples_per_period as f64).round().max(2.0) as usize;
    let h = opts.window_periods * a / n as f64;
    let xs: Vec<f64> = (0..=n).map(|j| start + h * j as f64).collect();
    let states = stream.sample(&xs)?;
    let mut sum = [C64::new(0.0, 0.0); 2];
    let mut us = Vec::with_capacity(xs.len());
    for (j, (&x, y)) in xs.iter().zip(&states).enumerate() {
        let mut pair = [u_of(&[y[0], y[1]], x, bloch), u_of(&[y[2], y[3]], x, bloch)];
        if let Some(q) = q {
            let qm = q.matrix(x);
            let e = Mat2::exp_antidiagonal(-qm.get(0, 1), -qm.get(1, 0));
            let ph = (2.0 * I * bloch.k * x / a).exp();
            for u in pair.iter_mut() {
                // e^{ikx/a}(e^{-Q}v)₁ with v = (e^{-ikx/a}u₁, e^{ikx/a}u₂)
                u[0] = e.get(0, 0) * u[0] + e.get(0, 1) * ph * u[1];
            }
        }
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        sum[0] += pair[0][0] * w;
        sum[1] += pair[1][0] * w;
        us.push(pair);
    }
    let mean = [sum[0] / n as f64, sum[1] / n as f64];
    let mut residual: f64 = 0.0;
    if on_band {
        for (&x, y) in xs.iter().zip(&states) {
            let pm = bloch.psi_minus(x);
            let pp = bloch.psi_plus(x);
            let model = mean[0] * pm[0] + mean[0].conj() * pp[0];
            residual = residual.max((y[0] - model).norm());
        }
    }
    Ok(WindowRecord { start, a: mean[0], a_shift: mean[1], residual })
}

/// `A_α` and `A_{α+π/2}` at a real band-interior point.
///
/// Stabilization is judged on `|A|`: on the real line the argument of the
/// window means keeps drifting slowly (the diagonal of the second-order
/// remainder has a non-oscillating part), while `|A|`, `A_{α+π/2}/A_α` and
/// the Wronskian combination settle much faster.
pub fn extract_a_band(
    stream: &mut CauchyStream,
    bloch: &BlochData,
    q: Option<&HarrisLutzQ>,
    opts: &ExtractOptions,
) -> Result<AsymptoticCoefficient> {
    if !bloch.on_band() || stream.lambda.im != 0.0 {
        return Err(Error::InvalidInput("band extraction needs a real band-interior point"));
    }
    run_schedule(stream, bloch, q, opts, true)
}

const GROWTH_LIMIT: f64 = 600.0;

fn run_schedule(
    stream: &mut CauchyStream,
    bloch: &BlochData,
    q: Option<&HarrisLutzQ>,
    opts: &ExtractOptions,
    on_band: bool,
) -> Result<AsymptoticCoefficient> {
    let a = bloch.period;
    let mut windows: Vec<WindowRecord> = Vec::new();
    let mut start = opts.first_start_periods * a;
    let mut last_change = f64::INFINITY;
    let mut stabilized = false;
    loop {
        let rec = window(stream, bloch, q, start, opts, on_band)?;
        if let Some(prev) = windows.last() {
            last_change = if on_band {
                ((rec.a.norm() - prev.a.norm()).abs() / rec.a.norm())
                    .max((rec.a_shift.norm() - prev.a_shift.norm()).abs() / rec.a_shift.norm())
            } else {
                ((rec.a - prev.a).norm() / rec.a.norm()).max((rec.a_shift - prev.a_shift).norm() / rec.a_shift.norm())
            };
        }
        windows.push(rec);
        if windows.len() >= opts.min_windows && last_change <= opts.tol {
            stabilized = true;
            break;
        }
        let next = 2.0 * start;
        let limit = if windows.len() < opts.min_windows { f64::INFINITY } else { opts.x_cap_periods * a };
        // keep e^{κx} representable off the real axis
        let limit = if on_band { limit } else { limit.min(GROWTH_LIMIT / (bloch.k.im / a)) };
        if next > limit {
            break;
        }
        start = next;
    }
    let last = windows[windows.len() - 1];
    let regime = if on_band { Regime::Elliptic } else { Regime::Hyperbolic };
    let out = AsymptoticCoefficient {
        lambda: stream.lambda,
        alpha: stream.alpha,
        a: last.a,
        a_shift: last.a_shift,
        regime,
        windows,
        stabilized,
        last_change,
    };
    Ok(out)
}

/// `A` in the upper half-plane from the limit of `u₁[φ]`, optionally checked
/// against the integral formula through the Levinson system.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperCoefficient {
    pub limit: AsymptoticCoefficient,
    /// `A` from `e^{-∫₀^∞c·s·p₊p₋/W}·[lim u₃]₁`.
    pub levinson: Option<C64>,
    pub discrepancy: f64,
}

pub fn extract_a_upper(
    stream: &mut CauchyStream,
    bloch: &BlochData,
    system: Option<&LevinsonSystem>,
    opts: &ExtractOptions,
    schedule: &HorizonSchedule,
    tol: ToleranceSpec,
) -> Result<UpperCoefficient> {
    if !(stream.lambda.im > 0.0) {
        return Err(Error::InvalidInput("upper extraction needs Im lambda > 0"));
    }
    let limit = run_schedule(stream, bloch, None, opts, false)?;
    let mut levinson = None;
    let mut discrepancy = 0.0;
    if let Some(sys) = system {
        let (s, c) = stream.alpha.sin_cos();
        let u = u_of(&[C64::new(s, 0.0), C64::new(c, 0.0)], 0.0, bloch);
        let q0 = sys.q().matrix(0.0);
        let u0 = Mat2::exp_antidiagonal(-q0.get(0, 1), -q0.get(1, 0)).apply(&u);
        let res = asymptotic_coefficient(&sys.diagonal_system(), u0, Regime::Hyperbolic, schedule, tol)?;
        let a = (-sys.wvn_phase_limit()).exp() * res.amplitude();
        discrepancy = (a - limit.a).norm() / limit.a.norm();
        levinson = Some(a);
    }
    Ok(UpperCoefficient { limit, levinson, discrepancy })
}
