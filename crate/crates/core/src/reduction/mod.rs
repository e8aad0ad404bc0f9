//! The Wigner-von Neumann layer: model parameters, resonance geometry, the
//! Harris-Lutz transform `Q` and the resulting Levinson-form system.

use alloc::sync::Arc;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::periodic::PeriodicPotential;
use crate::potential::{PotentialEvaluator, RealFn};
use crate::quad::gauss_legendre_real;

pub mod bounds;
pub mod kernel;
pub mod resonance;
pub mod system;
pub mod tail;
pub mod transform;

pub use resonance::{critical_points, epsilon_gap, epsilon_value, in_neighbourhood, lambda_for_k, ResonanceGap, ResonanceSet};
pub use system::{build_levinson_system, LevinsonOptions, LevinsonSystem};
pub use tail::{oscillatory_tail, TailValue};
pub use transform::{build_q, verify_q_equation, HarrisLutzQ};

/// `c·sin(2ωx+δ)/(x+1)^γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WvNTerm {
    pub c: f64,
    pub omega: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl WvNTerm {
    pub fn new(c: f64, omega: f64, delta: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.5 && gamma <= 1.0) {
            return Err(Error::InvalidInput("gamma must lie in (1/2, 1]"));
        }
        if !(c.is_finite() && omega.is_finite() && delta.is_finite()) {
            return Err(Error::InvalidInput("c, omega and delta must be finite"));
        }
        Ok(WvNTerm { c, omega, delta, gamma })
    }

    /// The term with `c = 0`.
    pub fn absent() -> Self {
        WvNTerm { c: 0.0, omega: 1.0, delta: 0.0, gamma: 1.0 }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.c * self.oscillation(x)
    }

    /// `sin(2ωx+δ)/(x+1)^γ`.
    pub fn oscillation(&self, x: f64) -> f64 {
        (2.0 * self.omega * x + self.delta).sin() * (x + 1.0).powf(-self.gamma)
    }
}

/// Outcome of the frequency check `2aω/π ∉ ℤ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyCheck {
    pub passes: bool,
    /// Distance of `2aω/π` to the nearest integer.
    pub distance: f64,
    pub ratio: f64,
}

pub fn validate_frequency(a: f64, omega: f64) -> FrequencyCheck {
    let ratio = 2.0 * a * omega / core::f64::consts::PI;
    let distance = (ratio - ratio.round()).abs();
    FrequencyCheck { passes: distance > 1e-9, distance, ratio }
}

/// Summable perturbation `q₁` with a declared bound on `∫₀^∞|q₁|`.
#[derive(Clone)]
pub struct DecayingTerm {
    pub q1: PotentialEvaluator,
    pub l1_bound: f64,
    /// Point past which `q₁` vanishes, if compactly supported.
    pub support_end: Option<f64>,
    /// `(C, p)` with `|q₁(x)| ≤ C/(1+x)^p`, `p > 1`, if power-law.
    pub envelope: Option<(f64, f64)>,
}

impl core::fmt::Debug for DecayingTerm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DecayingTerm")
            .field("l1_bound", &self.l1_bound)
            .field("support_end", &self.support_end)
            .field("envelope", &self.envelope)
            .finish()
    }
}

impl DecayingTerm {
    pub fn zero() -> Self {
        DecayingTerm { q1: PotentialEvaluator::zero(), l1_bound: 0.0, support_end: Some(0.0), envelope: None }
    }

    /// `q₁` supported in `[0, end]` with `|q₁| ≤ sup`.
    pub fn compact<F>(f: F, end: f64, sup: f64, breakpoints: alloc::vec::Vec<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(end >= 0.0 && sup >= 0.0) {
            return Err(Error::InvalidInput("compact q1 needs end >= 0 and sup >= 0"));
        }
        let g = move |x: f64| if x <= end { f(x) } else { 0.0 };
        let mut bps = breakpoints;
        bps.push(end);
        Ok(DecayingTerm { q1: PotentialEvaluator::piecewise(g, bps)?, l1_bound: sup * end, support_end: Some(end), envelope: None })
    }

    /// `q₁` with `|q₁(x)| ≤ C/(1+x)^p`, `p > 1`.
    pub fn power<F>(f: F, constant: f64, p: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(p > 1.0 && constant >= 0.0) {
            return Err(Error::InvalidInput("power-law q1 needs p > 1 and C >= 0"));
        }
        Ok(DecayingTerm {
            q1: PotentialEvaluator::smooth(f),
            l1_bound: constant / (p - 1.0),
            support_end: None,
            envelope: Some((constant, p)),
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.q1.value(x)
    }

    pub fn is_zero(&self) -> bool {
        self.support_end == Some(0.0) && self.l1_bound == 0.0
    }

    /// Numerical `∫₀^X|q₁|` plus the envelope tail beyond `X`.
    pub fn l1_estimate(&self, horizon: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let end = self.support_end.map_or(horizon, |e| e.min(horizon));
        let mut pts = alloc::vec![0.0];
        pts.extend(self.q1.breakpoints_in(0.0, end));
        pts.push(end);
        let mut total = 0.0;
        for w in pts.windows(2) {
            let panels = ((w[1] - w[0]) * 4.0).ceil().max(1.0) as usize;
            total += gauss_legendre_real(|x| self.q1.value(x).abs(), w[0], w[1], panels);
        }
        if let Some((c, p)) = self.envelope {
            if self.support_end.is_none() {
                total += c * (1.0 + horizon).powf(1.0 - p) / (p - 1.0);
            }
        }
        total
    }
}

/// The full half-line operator `-d² + q + c·sin(2ωx+δ)/(x+1)^γ + q₁`
/// with boundary condition `ψ(0)cos α - ψ'(0)sin α = 0`.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub periodic: PeriodicPotential,
    pub wvn: WvNTerm,
    pub q1: DecayingTerm,
    pub alpha: f64,
}

impl OperatorSpec {
    pub fn new(periodic: PeriodicPotential, wvn: WvNTerm, q1: DecayingTerm, alpha: f64) -> Result<Self> {
        let spec = OperatorSpec { periodic, wvn, q1, alpha: 0.0 };
        spec.with_alpha(alpha)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidInput("alpha must be finite"));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn period(&self) -> f64 {
        self.periodic.period()
    }

    pub fn frequency_check(&self) -> FrequencyCheck {
        validate_frequency(self.period(), self.wvn.omega)
    }

    /// Check the declared `L¹` bound of `q₁` against a numerical estimate.
    pub fn check_q1(&self, horizon: f64) -> Result<f64> {
        let est = self.q1.l1_estimate(horizon);
        if est > self.q1.l1_bound * (1.0 + 1e-6) + 1e-12 {
            return Err(Error::InvalidInput("q1 exceeds its declared L1 bound"));
        }
        Ok(est)
    }

    /// `q + c·sin(2ωx+δ)/(x+1)^γ + q₁` as one evaluator.
    pub fn full_potential(&self) -> PotentialEvaluator {
        let wvn = self.wvn;
        let rest = if wvn.c == 0.0 {
            self.periodic.potential().clone()
        } else {
            let w = PotentialEvaluator::smooth(move |x| wvn.value(x));
            self.periodic.potential().sum(&w)
        };
        if self.q1.is_zero() {
            rest
        } else {
            rest.sum(&self.q1.q1)
        }
    }

    /// The perturbation `c·sin(2ωx+δ)/(x+1)^γ + q₁` alone.
    pub fn perturbation(&self) -> RealFn {
        let wvn = self.wvn;
        let q1 = self.q1.q1.function();
        Arc::new(move |x| wvn.value(x) + q1(x))
    }
}
