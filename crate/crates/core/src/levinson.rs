//! Systems of the form `u' = (diag(λ(x), -λ(x)) + R(x))u` with `R ∈ L¹`:
//! the a-priori growth bound and the asymptotic coefficients of solutions.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{vec_norm, Mat2, Vec2};
use crate::ode::{self, State, ToleranceSpec, Trajectory};
use crate::quad::gauss_legendre_real;

pub type PhaseFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
pub type RemainderFn = Arc<dyn Fn(f64) -> Mat2 + Send + Sync>;

/// `u' = (diag(λ, -λ) + R)u` with the two constants the estimates need:
/// `∫₀^∞‖R‖` and `M` with `∫ₓ^y Re λ ≥ -M` for all `x ≤ y`.
#[derive(Clone)]
pub struct DiagonalSystem {
    pub phase: PhaseFn,
    pub remainder: RemainderFn,
    pub remainder_l1: f64,
    pub m: f64,
}

impl core::fmt::Debug for DiagonalSystem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DiagonalSystem").field("remainder_l1", &self.remainder_l1).field("m", &self.m).finish()
    }
}

impl DiagonalSystem {
    pub fn new<P, R>(phase: P, remainder: R, remainder_l1: f64, m: f64) -> Self
    where
        P: Fn(f64) -> C64 + Send + Sync + 'static,
        R: Fn(f64) -> Mat2 + Send + Sync + 'static,
    {
        DiagonalSystem { phase: Arc::new(phase), remainder: Arc::new(remainder), remainder_l1, m }
    }

    /// `∫₀^X‖R‖` by Gauss-Legendre panels of width `panel`.
    pub fn remainder_l1_to(&self, horizon: f64, panel: f64) -> f64 {
        let panels = (horizon / panel).ceil().max(1.0) as usize;
        gauss_legendre_real(|x| (self.remainder)(x).norm(), 0.0, horizon, panels)
    }

    /// `M = max(0, -min_{x≤y} ∫ₓ^y Re λ)` over a grid of spacing `step` on `[0, X]`.
    pub fn estimate_m(&self, horizon: f64, step: f64) -> f64 {
        let n = (horizon / step).ceil().max(1.0) as usize;
        let h = horizon / n as f64;
        let mut integral = 0.0;
        let mut peak: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let x0 = j as f64 * h;
            integral += gauss_legendre_real(|x| (self.phase)(x).re, x0, x0 + h, 1);
            peak = peak.max(integral);
            worst = worst.max(peak - integral);
        }
        worst
    }

    fn generator(&self, x: f64) -> Mat2 {
        let l = (self.phase)(x);
        Mat2::diag(l, -l) + (self.remainder)(x)
    }
}

/// `B(x) = ‖u₀‖·e^{∫₀ˣRe λ}·√(1+e^{4M})·exp(√(1+e^{4M})·∫₀^∞‖R‖)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthBound {
    /// Everything except the factor `e^{∫₀ˣRe λ}`.
    pub base: f64,
}

impl GrowthBound {
    /// `B` given `∫₀ˣ Re λ`.
    pub fn at(&self, re_phase_integral: f64) -> f64 {
        self.base * re_phase_integral.exp()
    }
}

pub fn growth_bound(sys: &DiagonalSystem, u0: &Vec2) -> GrowthBound {
    let s = (1.0 + (4.0 * sys.m).exp()).sqrt();
    GrowthBound { base: vec_norm(u0) * s * (s * sys.remainder_l1).exp() }
}

/// Trajectory of `(u₁, u₂, ∫₀ˣλ)` with the growth-bound check.
#[derive(Clone, Debug)]
pub struct BoundedTrajectory {
    pub trajectory: Trajectory<3>,
    pub bound: GrowthBound,
    /// `max ‖u(x)‖/B(x)` over accepted steps.
    pub max_ratio: f64,
}

impl BoundedTrajectory {
    pub fn u(&self, x: f64) -> Vec2 {
        let y = self.trajectory.eval(x);
        [y[0], y[1]]
    }

    pub fn phase_integral(&self, x: f64) -> C64 {
        self.trajectory.eval(x)[2]
    }
}

/// Integrate the system to `x_max`, checking `‖u(x)‖ ≤ B(x)(1 + 10·rtol)` at every step.
pub fn solve_with_bound(sys: &DiagonalSystem, u0: Vec2, x_max: f64, tol: ToleranceSpec) -> Result<BoundedTrajectory> {
    let rhs = |x: f64, y: &State<3>| {
        let a = sys.generator(x);
        let v = a.apply(&[y[0], y[1]]);
        [v[0], v[1], (sys.phase)(x)]
    };
    let tr = ode::integrate(rhs, [u0[0], u0[1], C64::new(0.0, 0.0)], 0.0, x_max, &[], tol)?;
    let bound = growth_bound(sys, &u0);
    let mut max_ratio: f64 = 0.0;
    for s in tr.steps() {
        let y = s.eval(s.x1());
        let b = bound.at(y[2].re);
        let norm = vec_norm(&[y[0], y[1]]);
        if b > 0.0 {
            max_ratio = max_ratio.max(norm / b);
        }
        if norm > b * (1.0 + 10.0 * tol.rtol) + f64::MIN_POSITIVE {
            return Err(Error::BoundViolation { x: s.x1(), norm, bound: b });
        }
    }
    Ok(BoundedTrajectory { trajectory: tr, bound, max_ratio })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `∫₀^∞ Re λ < ∞`: both components keep their size.
    Elliptic,
    /// `∫₀^∞ Re λ = +∞`: the first component dominates.
    Hyperbolic,
}

/// Dyadic horizons and the Cauchy tolerance for limits.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizonSchedule {
    pub horizons: Vec<f64>,
    pub tol: f64,
}

impl Default for HorizonSchedule {
    fn default() -> Self {
        HorizonSchedule { horizons: (7..=14).map(|j| (1u64 << j) as f64).collect(), tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticResult {
    pub regime: Regime,
    /// Elliptic: `lim u₂`. Hyperbolic: `lim u₃`, whose second entry is 0.
    pub limit: Vec2,
    /// Horizons actually used and the frame vector at each.
    pub horizons: Vec<f64>,
    pub history: Vec<Vec2>,
    /// Size of the last Cauchy difference (relative to `‖u₀‖`).
    pub last_change: f64,
    /// `∫₀^X λ` at the last horizon.
    pub phase_integral: C64,
}

impl AsymptoticResult {
    /// Hyperbolic: the amplitude of the `(1, 0)` direction.
    pub fn amplitude(&self) -> C64 {
        self.limit[0]
    }

    /// Elliptic prediction `diag(e^{E}, e^{-E})·limit` for `u₁` where `E = ∫₀ˣλ`.
    pub fn predict(&self, phase_integral: C64) -> Vec2 {
        match self.regime {
            Regime::Elliptic => [phase_integral.exp() * self.limit[0], (-phase_integral).exp() * self.limit[1]],
            Regime::Hyperbolic => [phase_integral.exp() * self.limit[0], C64::new(0.0, 0.0)],
        }
    }
}

/// Limit of the renormalized solution started at `u₀`:
///
/// - elliptic: `u₂ = e^{-∫Λ}u₁`, integrated as `u₂' = e^{-∫Λ}Re^{∫Λ}u₂`;
/// - hyperbolic: `u₃ = e^{-∫λ}u₁`, integrated as `u₃' = (diag(0, -2λ) + R)u₃`,
///   with the limit projected on `(1, 0)`.
pub fn asymptotic_coefficient(
    sys: &DiagonalSystem,
    u0: Vec2,
    regime: Regime,
    schedule: &HorizonSchedule,
    tol: ToleranceSpec,
) -> Result<AsymptoticResult> {
    let horizons = &schedule.horizons;
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) || horizons[0] <= 0.0 {
        return Err(Error::InvalidInput("horizons must be positive and increasing"));
    }
    let rhs = |x: f64, y: &State<3>| {
        let r = (sys.remainder)(x);
        let l = (sys.phase)(x);
        match regime {
            Regime::Elliptic => {
                let e2 = (2.0 * y[2]).exp();
                let (r12, r21) = (r.get(0, 1) / e2, r.get(1, 0) * e2);
                [r.get(0, 0) * y[0] + r12 * y[1], r21 * y[0] + r.get(1, 1) * y[1], l]
            }
            Regime::Hyperbolic => [
                r.get(0, 0) * y[0] + r.get(0, 1) * y[1],
                r.get(1, 0) * y[0] + (r.get(1, 1) - 2.0 * l) * y[1],
                l,
            ],
        }
    };
    let mut stepper = ode::Dopri5::new(rhs, 0.0, [u0[0], u0[1], C64::new(0.0, 0.0)], tol)?;
    let scale = vec_norm(&u0).max(f64::MIN_POSITIVE);
    let project = |y: &State<3>| -> Vec2 {
        match regime {
            Regime::Elliptic => [y[0], y[1]],
            Regime::Hyperbolic => [y[0], C64::new(0.0, 0.0)],
        }
    };
    let mut used = Vec::new();
    let mut history: Vec<Vec2> = Vec::new();
    let mut last_change = f64::INFINITY;
    let mut phase = C64::new(0.0, 0.0);
    for &x in horizons {
        stepper.advance(x, &[], &mut |_: &ode::DenseStep<3>| {})?;
        let y = stepper.y();
        let v = project(&y);
        phase = y[2];
        if let Some(prev) = history.last() {
            last_change = vec_norm(&[v[0] - prev[0], v[1] - prev[1]]) / scale;
        }
        used.push(x);
        history.push(v);
        if last_change < schedule.tol {
            break;
        }
    }
    if !(last_change < schedule.tol) {
        return Err(Error::NonConvergence { last_change });
    }
    let limit = *history.last().unwrap_or(&u0);
    Ok(AsymptoticResult { regime, limit, horizons: used, history, last_change, phase_integral: phase })
}
