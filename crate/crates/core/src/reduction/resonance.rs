//! Resonance geometry: the critical points `λₙ±`, the gap `ε(μ)` and the
//! neighbourhoods `U(β, μ)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::ode::ToleranceSpec;
use crate::periodic::{monodromy, quasimomentum, Band, BandStructure, PeriodicPotential};

use super::validate_frequency;

/// Critical points of one band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPair {
    pub band: usize,
    /// `k(λₙ⁻) = π(n + {aω/π})`
    pub minus: f64,
    /// `k(λₙ⁺) = π(n + 1 - {aω/π})`
    pub plus: f64,
    pub residual_minus: f64,
    pub residual_plus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceSet {
    /// `{aω/π}`
    pub frac: f64,
    pub pairs: Vec<CriticalPair>,
}

impl ResonanceSet {
    /// All critical points in increasing order.
    pub fn points(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.pairs.iter().flat_map(|p| [p.minus, p.plus]).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// Distance from `λ` to the nearest critical point.
    pub fn distance(&self, lambda: f64) -> f64 {
        self.points().iter().map(|p| (p - lambda).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Solve `k(λ) = target` on the monotone branch of band `n`.
fn solve_k(p: &PeriodicPotential, lo: f64, hi: f64, band: usize, target: f64, tol: ToleranceSpec) -> Result<(f64, f64)> {
    let n = band as f64;
    let (k_lo, k_hi) = (n * PI, (n + 1.0) * PI);
    if !(target > k_lo && target < k_hi) {
        return Err(Error::TargetOutsideBand { band, target });
    }
    let eval = |lambda: f64| -> Result<(f64, f64)> {
        let m = monodromy(p, C64::new(lambda, 0.0), tol)?;
        let q = quasimomentum(&m, band)?;
        Ok((q.k.re - target, q.dk.re))
    };
    let (mut a, mut b) = (lo, hi);
    let mut x = lo + (hi - lo) * (target - k_lo) / (k_hi - k_lo);
    let mut last = (f64::NAN, 0.0);
    for _ in 0..200 {
        let (f, df) = eval(x)?;
        last = (f, df);
        if f.abs() <= 1e-14 * target.abs().max(1.0) {
            break;
        }
        if f < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - f / df;
        x = if df > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if b - a <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    Ok((x, last.0.abs()))
}

/// The point of `band` where the quasi-momentum equals `target`.
pub fn lambda_for_k(p: &PeriodicPotential, band: &Band, target: f64, tol: ToleranceSpec) -> Result<f64> {
    Ok(solve_k(p, band.lower, band.upper, band.index, target, tol)?.0)
}

/// Critical points of the first `count` bands of `bands`.
pub fn critical_points(
    p: &PeriodicPotential,
    bands: &BandStructure,
    omega: f64,
    count: usize,
    tol: ToleranceSpec,
) -> Result<ResonanceSet> {
    let a = p.period();
    let check = validate_frequency(a, omega);
    if !check.passes {
        return Err(Error::FrequencyCondition { distance: check.distance });
    }
    let r = a * omega / PI;
    let frac = r - r.floor();
    let mut pairs = Vec::new();
    for band in bands.bands.iter().take(count) {
        let n = band.index as f64;
        let (minus, rm) = solve_k(p, band.lower, band.upper, band.index, PI * (n + frac), tol)?;
        let (plus, rp) = solve_k(p, band.lower, band.upper, band.index, PI * (n + 1.0 - frac), tol)?;
        pairs.push(CriticalPair { band: band.index, minus, plus, residual_minus: rm, residual_plus: rp });
    }
    Ok(ResonanceSet { frac, pairs })
}

/// `ε = ½ min_{n, ±} |2k/a ± 2ω + 2πn/a|` (also for complex `k`).
pub fn epsilon_value(k: C64, a: f64, omega: f64) -> f64 {
    let step = 2.0 * PI / a;
    let im = 2.0 * k.im / a;
    let mut best = f64::INFINITY;
    for sigma in [1.0, -1.0] {
        let x = 2.0 * k.re / a + sigma * 2.0 * omega;
        let centre = (-x / step).round();
        for dn in -1..=1 {
            let re = x + (centre + dn as f64) * step;
            best = best.min(re.hypot(im));
        }
    }
    0.5 * best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceGap {
    pub mu: f64,
    pub epsilon: f64,
}

/// `ε(μ)` at an in-band point; errors when the point is resonant.
pub fn epsilon_gap(mu: f64, k: f64, a: f64, omega: f64) -> Result<ResonanceGap> {
    let epsilon = epsilon_value(C64::new(k, 0.0), a, omega);
    if epsilon < 1e-9 {
        return Err(Error::ResonanceProximity { epsilon });
    }
    Ok(ResonanceGap { mu, epsilon })
}

/// Membership of `λ` (through `k(λ)`) in `U(β, μ)`.
pub fn in_neighbourhood(k_lambda: C64, k_mu: f64, a: f64, omega: f64, beta: f64) -> bool {
    let slack = 1e-12 * (1.0 + k_mu.abs());
    let eps_ok = 2.0 * epsilon_value(k_lambda, a, omega) >= epsilon_value(C64::new(k_mu, 0.0), a, omega) - slack;
    let im = 2.0 * k_lambda.im / a;
    let strip_ok = im >= -slack && im <= 1.0;
    let sector_ok = (k_lambda.re - k_mu).abs() <= beta * k_lambda.im.max(0.0) + slack;
    eps_ok && strip_ok && sector_ok
}
