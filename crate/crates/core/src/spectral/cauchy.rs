//! The regular solutions `φ_α` (and `θ_α = φ_{α+π/2}`) of the full operator.

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Result;
use crate::linalg::Vec2;
use crate::ode::{self, DenseStep, Dopri5, State, ToleranceSpec, Trajectory};
use crate::periodic::BlochData;
use crate::potential::PotentialEvaluator;
use crate::reduction::OperatorSpec;

type Rhs = Box<dyn Fn(f64, &State<4>) -> State<4> + Send + Sync>;

fn rhs(v: PotentialEvaluator, lambda: C64) -> Rhs {
    Box::new(move |x, y| {
        let s = v.value(x) - lambda;
        [y[1], s * y[0], y[3], s * y[2]]
    })
}

/// `(φ_α, φ_α', θ_α, θ_α')` at `x = 0`.
pub fn initial_state(alpha: f64) -> State<4> {
    let (s, c) = alpha.sin_cos();
    [C64::new(s, 0.0), C64::new(c, 0.0), C64::new(c, 0.0), C64::new(-s, 0.0)]
}

/// Dense solution `(φ, φ', θ, θ')` on `[0, x_max]`.
#[derive(Clone, Debug)]
pub struct CauchySolution {
    pub alpha: f64,
    pub lambda: C64,
    pub trajectory: Trajectory<4>,
}

impl CauchySolution {
    pub fn phi(&self, x: f64) -> Vec2 {
        let y = self.trajectory.eval(x);
        [y[0], y[1]]
    }

    pub fn theta(&self, x: f64) -> Vec2 {
        let y = self.trajectory.eval(x);
        [y[2], y[3]]
    }

    /// `W(φ, θ) = φ'θ - φθ'`; equal to 1 by construction.
    pub fn wronskian(&self, x: f64) -> C64 {
        let y = self.trajectory.eval(x);
        y[1] * y[2] - y[0] * y[3]
    }

    /// `v_φ(x)`.
    pub fn v_phi(&self, x: f64, bloch: &BlochData) -> Vec2 {
        v_of(&self.phi(x), x, bloch)
    }
}

/// Integrate `φ_α` and `θ_α` on `[0, x_max]` keeping the dense trajectory.
pub fn solve_phi(spec: &OperatorSpec, lambda: C64, alpha: f64, x_max: f64, tol: ToleranceSpec) -> Result<CauchySolution> {
    let v = spec.full_potential();
    let breaks = v.breakpoints_in(0.0, x_max);
    let trajectory = ode::integrate(rhs(v, lambda), initial_state(alpha), 0.0, x_max, &breaks, tol)?;
    Ok(CauchySolution { alpha, lambda, trajectory })
}

/// Coefficients `(u₁, u₂)` of `f = u₁ψ₋ + u₂ψ₊`.
pub fn u_of(f: &Vec2, x: f64, bloch: &BlochData) -> Vec2 {
    let pp = bloch.psi_plus(x);
    let pm = bloch.psi_minus(x);
    [(pp[1] * f[0] - pp[0] * f[1]) / bloch.w, (f[1] * pm[0] - f[0] * pm[1]) / bloch.w]
}

/// `v = diag(e^{-ikx/a}, e^{ikx/a})·(u₁, u₂)`.
pub fn v_of(f: &Vec2, x: f64, bloch: &BlochData) -> Vec2 {
    let u = u_of(f, x, bloch);
    let e = (C64::new(0.0, 1.0) * bloch.k * x / bloch.period).exp();
    [u[0] / e, u[1] * e]
}

/// Resumable integration of `(φ, φ', θ, θ')` that only keeps requested samples.
pub struct CauchyStream {
    pub alpha: f64,
    pub lambda: C64,
    potential: PotentialEvaluator,
    stepper: Dopri5<4, Rhs>,
}

impl core::fmt::Debug for CauchyStream {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CauchyStream").field("alpha", &self.alpha).field("lambda", &self.lambda).field("x", &self.stepper.x()).finish()
    }
}

impl CauchyStream {
    pub fn new(spec: &OperatorSpec, lambda: C64, alpha: f64, tol: ToleranceSpec) -> Result<Self> {
        let potential = spec.full_potential();
        let stepper = Dopri5::new(rhs(potential.clone(), lambda), 0.0, initial_state(alpha), tol)?;
        Ok(CauchyStream { alpha, lambda, potential, stepper })
    }

    pub fn x(&self) -> f64 {
        self.stepper.x()
    }

    /// States at ascending `xs`, all `≥` the current position.
    pub fn sample(&mut self, xs: &[f64]) -> Result<Vec<State<4>>> {
        let mut out = Vec::with_capacity(xs.len());
        let Some(&x_end) = xs.last() else {
            return Ok(out);
        };
        let x0 = self.stepper.x();
        let mut idx = 0;
        while idx < xs.len() && xs[idx] <= x0 {
            out.push(self.stepper.y());
            idx += 1;
        }
        let breaks = self.potential.breakpoints_in(x0, x_end);
        let mut obs = |s: &DenseStep<4>| {
            while idx < xs.len() && xs[idx] <= s.x1() {
                out.push(s.eval(xs[idx]));
                idx += 1;
            }
        };
        self.stepper.advance(x_end, &breaks, &mut obs)?;
        while out.len() < xs.len() {
            out.push(self.stepper.y());
        }
        Ok(out)
    }
}
