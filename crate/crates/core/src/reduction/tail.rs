//! `∫ₓ^∞ e^{iξt}f(t)(t+1)^{-γ}dt` for periodic `f`, mode by mode.

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::periodic::FourierTable;
use crate::quad::gauss_kronrod;

use super::kernel::{tail_series, SERIES_THRESHOLD};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailValue {
    pub value: C64,
    /// `2·Σ|fₙ|/|ξ+2πn/a|·(x+1)^{-γ}`
    pub bound: f64,
    /// Accumulated quadrature and truncation error estimate.
    pub error: f64,
}

/// `∫ₓ^∞ e^{iηt}(t+1)^{-γ}dt` with an error estimate: adaptive quadrature on
/// `[x, X]` and the integration-by-parts series beyond `X`.
pub fn single_mode_tail(eta: C64, gamma: f64, x: f64) -> Result<(C64, f64)> {
    if eta.norm() < 1e-6 || eta.im < 0.0 {
        return Err(Error::ResonanceProximity { epsilon: eta.norm() });
    }
    let cut = (SERIES_THRESHOLD / eta.norm() - 1.0).max(x);
    let (series, omitted) = tail_series(eta, gamma, cut);
    let mut value = (I * eta * cut).exp() * series;
    let mut error = omitted;
    if cut > x {
        let periods = ((cut - x) * eta.norm() / (2.0 * core::f64::consts::PI)).ceil() as usize;
        let r = gauss_kronrod(
            |t| (I * eta * t).exp() * (t + 1.0).powf(-gamma),
            x,
            cut,
            1e-15,
            1e-13,
            64 + 8 * periods,
        );
        value += r.value;
        error += r.error;
    }
    Ok((value, error))
}

/// `∫ₓ^∞ e^{iξt}f(t)(t+1)^{-γ}dt` where `f` is given by its Fourier table
/// (`f(t) = Σ fₙe^{2πint/a}`), together with its analytic bound.
pub fn oscillatory_tail(xi: C64, x: f64, gamma: f64, f: &FourierTable, a: f64) -> Result<TailValue> {
    if xi.im < 0.0 {
        return Err(Error::InvalidInput("xi must lie in the closed upper half-plane"));
    }
    let scale = f.l1();
    let mut value = C64::new(0.0, 0.0);
    let mut bound = 0.0;
    let mut error = 0.0;
    for (n, fn_) in f.iter() {
        if fn_.norm() <= 1e-17 * scale {
            continue;
        }
        let eta = xi + 2.0 * core::f64::consts::PI * n as f64 / a;
        let (v, e) = single_mode_tail(eta, gamma, x)?;
        value += fn_ * v;
        error += fn_.norm() * e;
        bound += 2.0 * fn_.norm() / eta.norm();
    }
    Ok(TailValue { value, bound: bound * (x + 1.0).powf(-gamma), error })
}
