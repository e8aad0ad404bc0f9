//! The Weyl function, the spectral density and their cross-checks.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::ode::ToleranceSpec;
use crate::periodic::{bloch_at, BlochOptions};
use crate::reduction::OperatorSpec;

use super::cauchy::{u_of, CauchyStream};

/// `m_α = -A_{α+π/2}/A_α`.
pub fn weyl_m(a: C64, a_shift: C64) -> Result<C64> {
    if a.norm() == 0.0 || !a.norm().is_finite() {
        return Err(Error::ZeroDenominator("A_alpha vanishes (possible subordinate point)"));
    }
    Ok(-a_shift / a)
}

/// `ρ'_α = 1/(2π|W||A_α|²)`.
pub fn spectral_density(a: C64, w: C64) -> Result<f64> {
    let d = 2.0 * PI * w.norm() * a.norm_sqr();
    if d == 0.0 || !d.is_finite() {
        return Err(Error::ZeroDenominator("|W||A|^2"));
    }
    Ok(1.0 / d)
}

/// `|(conj(A_α)A_{α+π/2} - A_α·conj(A_{α+π/2}))·W - 1|`.
pub fn wronskian_identity(a: C64, a_shift: C64, w: C64) -> f64 {
    ((a.conj() * a_shift - a * a_shift.conj()) * w - 1.0).norm()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub ode: ToleranceSpec,
    pub bloch: BlochOptions,
    /// Horizon in units of the decay length `a/Im k`.
    pub decay_lengths: f64,
    /// Minimum horizon in periods.
    pub min_periods: f64,
    /// Absolute horizon cap.
    pub max_x: f64,
    /// Samples in each averaging window.
    pub samples: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            ode: ToleranceSpec::new(1e-11, 1e-14),
            bloch: BlochOptions::default(),
            decay_lengths: 8.0,
            min_periods: 200.0,
            max_x: 4e6,
            samples: 1024,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleValue {
    pub m: C64,
    pub horizon: f64,
    /// Change between the windows ending at `X/2` and at `X`.
    pub change: f64,
}

/// `m_α(λ)` for `Im λ > 0` from the limit-point property: `θ + mφ` is the
/// decaying solution, so `m = lim -u₁[θ]/u₁[φ]` where `u₁` is the coefficient
/// of the growing Bloch solution `ψ₋`. Averaged with Hann weights over
/// `[X/2, X]`.
pub fn weyl_m_oracle(spec: &OperatorSpec, lambda: C64, band: usize, opts: &OracleOptions) -> Result<OracleValue> {
    if !(lambda.im > 0.0) {
        return Err(Error::InvalidInput("the oracle needs Im lambda > 0"));
    }
    let bloch = bloch_at(&spec.periodic, lambda, band, &opts.bloch)?;
    let a = spec.period();
    let kappa = bloch.k.im / a;
    let horizon = (opts.decay_lengths / kappa).max(opts.min_periods * a).min(opts.max_x);
    let mut stream = CauchyStream::new(spec, lambda, spec.alpha, opts.ode)?;
    let mut means = Vec::new();
    for (lo, hi) in [(horizon / 4.0, horizon / 2.0), (horizon / 2.0, horizon)] {
        let n = opts.samples.max(8);
        let xs: Vec<f64> = (0..=n).map(|j| lo + (hi - lo) * j as f64 / n as f64).collect();
        let states = stream.sample(&xs)?;
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for (j, (&x, y)) in xs.iter().zip(&states).enumerate() {
            let t = j as f64 / n as f64;
            let w = (PI * t).sin().powi(2);
            let uphi = u_of(&[y[0], y[1]], x, &bloch)[0];
            let uth = u_of(&[y[2], y[3]], x, &bloch)[0];
            num += -uth / uphi * w;
            den += w;
        }
        means.push(num / den);
    }
    let m = means[1];
    Ok(OracleValue { m, horizon, change: (means[1] - means[0]).norm() })
}

/// Quadratic (Lagrange) extrapolation to `ε = 0` of `f(ε)` sampled at three points.
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut w = 1.0;
        for (j, &(xj, _)) in points.iter().enumerate() {
            if i != j {
                w *= -xj / (xi - xj);
            }
        }
        total += w * yi;
    }
    total
}

/// `lim_{ε→0} Im m(λ+iε)/π` from the oracle at the given `ε` values.
pub fn oracle_density(spec: &OperatorSpec, lambda: f64, band: usize, eps: &[f64], opts: &OracleOptions) -> Result<(f64, Vec<(f64, f64)>)> {
    let mut pts = Vec::with_capacity(eps.len());
    for &e in eps {
        let v = weyl_m_oracle(spec, C64::new(lambda, e), band, opts)?;
        pts.push((e, v.m.im / PI));
    }
    Ok((extrapolate_to_zero(&pts), pts))
}
