//! Adaptive Dormand-Prince 5(4) integration of complex systems with dense output.
//!
//! Steps never straddle a declared breakpoint: the integrator stops on each
//! one, restarts the stage sequence and evaluates the right-hand side only at
//! abscissae clamped into the open segment.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::potential::PotentialEvaluator;

pub type State<const N: usize> = [C64; N];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceSpec {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec { rtol: 1e-10, atol: 1e-12, max_step: f64::INFINITY, min_step: 1e-12 }
    }
}

impl ToleranceSpec {
    pub fn new(rtol: f64, atol: f64) -> Self {
        ToleranceSpec { rtol, atol, ..Default::default() }
    }

    pub fn with_max_step(self, max_step: f64) -> Self {
        ToleranceSpec { max_step, ..self }
    }

    pub fn with_min_step(self, min_step: f64) -> Self {
        ToleranceSpec { min_step, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive"));
        }
        if !(self.min_step >= 0.0 && self.min_step < self.max_step) {
            return Err(Error::InvalidInput("min_step must be below max_step"));
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its continuous extension.
#[derive(Clone, Debug)]
pub struct DenseStep<const N: usize> {
    pub x0: f64,
    pub h: f64,
    r: [State<N>; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn x1(&self) -> f64 {
        self.x0 + self.h
    }

    pub fn start(&self) -> State<N> {
        self.r[0]
    }

    /// Interpolant at `x`; exact at both step ends.
    pub fn eval(&self, x: f64) -> State<N> {
        let t = (x - self.x0) / self.h;
        let t1 = 1.0 - t;
        let mut out = [C64::new(0.0, 0.0); N];
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.r;
            *o = r[0][i] + (r[1][i] + (r[2][i] + (r[3][i] + r[4][i] * t1) * t) * t1) * t;
        }
        out
    }

    fn contains(&self, x: f64) -> bool {
        let (lo, hi) = if self.h > 0.0 { (self.x0, self.x1()) } else { (self.x1(), self.x0) };
        x >= lo && x <= hi
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

/// Dense trajectory over `[x0, x1]` (either orientation).
#[derive(Clone, Debug)]
pub struct Trajectory<const N: usize> {
    steps: Vec<DenseStep<N>>,
    x0: f64,
    y0: State<N>,
    end: State<N>,
    pub stats: Stats,
}

impl<const N: usize> Trajectory<N> {
    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x1(&self) -> f64 {
        self.steps.last().map_or(self.x0, |s| s.x1())
    }

    pub fn endpoint(&self) -> State<N> {
        self.end
    }

    pub fn steps(&self) -> &[DenseStep<N>] {
        &self.steps
    }

    /// Dense value at `x`, clamped to the covered range.
    pub fn eval(&self, x: f64) -> State<N> {
        if self.steps.is_empty() {
            return self.y0;
        }
        let forward = self.steps[0].h > 0.0;
        let idx = if forward {
            self.steps.partition_point(|s| s.x1() < x)
        } else {
            self.steps.partition_point(|s| s.x1() > x)
        };
        match self.steps.get(idx) {
            Some(s) if s.contains(x) => s.eval(x),
            Some(s) => s.start(),
            None => self.end,
        }
    }
}

/// Dormand-Prince 5(4) stepper with PI step-size control.
pub struct Dopri5<const N: usize, F> {
    f: F,
    tol: ToleranceSpec,
    x: f64,
    y: State<N>,
    h: f64,
    facold: f64,
    fixed: Option<f64>,
    stats: Stats,
}

fn axpy<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o += acc * h;
    }
    out
}

fn finite<const N: usize>(y: &State<N>) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

impl<const N: usize, F> Dopri5<N, F>
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    pub fn new(f: F, x0: f64, y0: State<N>, tol: ToleranceSpec) -> Result<Self> {
        tol.validate()?;
        if !finite(&y0) || !x0.is_finite() {
            return Err(Error::NonFinite { x: x0 });
        }
        Ok(Dopri5 { f, tol, x: x0, y: y0, h: 0.0, facold: 1e-4, fixed: None, stats: Stats::default() })
    }

    /// Disable error control and take steps of (at most) `h`.
    pub fn with_fixed_step(mut self, h: f64) -> Self {
        self.fixed = Some(h.abs());
        self
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> State<N> {
        self.y
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    fn weight(&self, a: C64, b: C64) -> f64 {
        self.tol.atol + self.tol.rtol * a.norm().max(b.norm())
    }

    fn initial_step(&mut self, k1: &State<N>, dir: f64, clamp: &dyn Fn(f64) -> f64) -> f64 {
        let n = N as f64;
        let (mut dnf, mut dny) = (0.0, 0.0);
        for i in 0..N {
            let sk = self.tol.atol + self.tol.rtol * self.y[i].norm();
            dnf += (k1[i].norm() / sk).powi(2);
            dny += (self.y[i].norm() / sk).powi(2);
        }
        let (dnf, dny) = (dnf / n, dny / n);
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * (dny / dnf).sqrt() };
        h = h.min(self.tol.max_step);
        let y1 = axpy(&self.y, dir * h, &[(1.0, k1)]);
        let k2 = (self.f)(clamp(self.x + dir * h), &y1);
        self.stats.evals += 1;
        let mut der2 = 0.0;
        for i in 0..N {
            let sk = self.tol.atol + self.tol.rtol * self.y[i].norm();
            der2 += ((k2[i] - k1[i]).norm() / sk).powi(2);
        }
        let der2 = (der2 / n).sqrt() / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
        (100.0 * h).min(h1).min(self.tol.max_step)
    }

    /// Advance to `x_end`, stopping at every breakpoint strictly in between.
    /// `breaks` must be ascending. The observer sees each accepted step.
    pub fn advance<O>(&mut self, x_end: f64, breaks: &[f64], obs: &mut O) -> Result<()>
    where
        O: FnMut(&DenseStep<N>),
    {
        if !x_end.is_finite() {
            return Err(Error::InvalidInput("non-finite integration endpoint"));
        }
        let (lo, hi) = if self.x <= x_end { (self.x, x_end) } else { (x_end, self.x) };
        let inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
        if x_end >= self.x {
            for b in inner {
                self.segment(b, obs)?;
            }
        } else {
            for b in inner.into_iter().rev() {
                self.segment(b, obs)?;
            }
        }
        self.segment(x_end, obs)
    }

    fn segment<O>(&mut self, x_end: f64, obs: &mut O) -> Result<()>
    where
        O: FnMut(&DenseStep<N>),
    {
        let span = x_end - self.x;
        let scale = self.x.abs().max(x_end.abs()).max(1.0);
        if span.abs() <= 4.0 * f64::EPSILON * scale {
            self.x = x_end;
            return Ok(());
        }
        let dir = span.signum();
        let (lo, hi) = if dir > 0.0 { (self.x, x_end) } else { (x_end, self.x) };
        let pad = 4.0 * f64::EPSILON * scale;
        let clamp = move |x: f64| x.max(lo + pad).min(hi - pad);
        let mut k1 = (self.f)(clamp(self.x), &self.y);
        self.stats.evals += 1;
        if !finite(&k1) {
            return Err(Error::NonFinite { x: self.x });
        }
        if let Some(hf) = self.fixed {
            self.h = hf;
        } else if self.h == 0.0 {
            self.h = self.initial_step(&k1, dir, &clamp);
        }
        let mut habs = self.h.abs().min(self.tol.max_step);
        let min_step = self.tol.min_step.max(16.0 * f64::EPSILON * scale);
        let mut last_rejected = false;
        loop {
            let remaining = (x_end - self.x).abs();
            if remaining <= pad {
                self.x = x_end;
                return Ok(());
            }
            let last = habs * 1.01 >= remaining;
            let h = if last { dir * remaining } else { dir * habs };
            let x = self.x;
            let y = self.y;
            let f = &self.f;
            let k2 = f(clamp(x + C2 * h), &axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(clamp(x + C3 * h), &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(clamp(x + C4 * h), &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                clamp(x + C5 * h),
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                clamp(x + h),
                &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new =
                axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(clamp(x + h), &y_new);
            self.stats.evals += 6;
            if !finite(&y_new) || !finite(&k7) {
                self.stats.rejected += 1;
                habs /= 10.0;
                if habs < min_step {
                    return Err(Error::NonFinite { x });
                }
                last_rejected = true;
                continue;
            }
            let zero = [C64::new(0.0, 0.0); N];
            let errv = axpy(
                &zero,
                h,
                &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            );
            let mut err = 0.0;
            for i in 0..N {
                err += (errv[i].norm() / self.weight(y[i], y_new[i])).powi(2);
            }
            let err = (err / N as f64).sqrt();
            let accept = self.fixed.is_some() || err <= 1.0;
            let fac11 = err.max(1e-300).powf(0.17);
            if accept {
                let ydiff: State<N> = core::array::from_fn(|i| y_new[i] - y[i]);
                let bspl: State<N> = core::array::from_fn(|i| k1[i] * h - ydiff[i]);
                let r3: State<N> = core::array::from_fn(|i| ydiff[i] - k7[i] * h - bspl[i]);
                let r4 = axpy(
                    &zero,
                    h,
                    &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
                );
                let step = DenseStep { x0: x, h, r: [y, ydiff, bspl, r3, r4] };
                obs(&step);
                self.stats.accepted += 1;
                self.y = y_new;
                k1 = k7;
                if last {
                    self.x = x_end;
                    if self.fixed.is_none() {
                        self.h = dir * habs;
                    }
                    return Ok(());
                }
                self.x = x + h;
                if let Some(hf) = self.fixed {
                    habs = hf;
                    continue;
                }
                let fac = (fac11 / self.facold.powf(0.04) / 0.9).clamp(0.1, 5.0);
                let mut hnew = habs / fac;
                if last_rejected {
                    hnew = hnew.min(habs);
                }
                self.facold = err.max(1e-4);
                habs = hnew.min(self.tol.max_step);
                self.h = dir * habs;
                last_rejected = false;
            } else {
                self.stats.rejected += 1;
                habs /= (fac11 / 0.9).min(5.0);
                last_rejected = true;
            }
            if habs < min_step {
                return Err(Error::StepUnderflow { x: self.x, h: habs });
            }
        }
    }
}

/// Integrate `y' = f(x, y)` from `x0` to `x1`, keeping the dense trajectory.
pub fn integrate<const N: usize, F>(
    f: F,
    y0: State<N>,
    x0: f64,
    x1: f64,
    breaks: &[f64],
    tol: ToleranceSpec,
) -> Result<Trajectory<N>>
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    let mut stepper = Dopri5::new(f, x0, y0, tol)?;
    let mut steps = Vec::new();
    stepper.advance(x1, breaks, &mut |s: &DenseStep<N>| steps.push(s.clone()))?;
    Ok(Trajectory { steps, x0, y0, end: stepper.y(), stats: stepper.stats() })
}

/// Integrate and return the state at each of `samples` (ordered in the
/// direction of integration, starting at or after `x0`) without storing the
/// trajectory.
pub fn integrate_sampled<const N: usize, F>(
    f: F,
    y0: State<N>,
    x0: f64,
    samples: &[f64],
    breaks: &[f64],
    tol: ToleranceSpec,
) -> Result<Vec<State<N>>>
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    let mut stepper = Dopri5::new(f, x0, y0, tol)?;
    let mut out = Vec::with_capacity(samples.len());
    let Some(&x_end) = samples.last() else {
        return Ok(out);
    };
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut idx = 0;
    while idx < samples.len() && (samples[idx] - x0) * dir <= 0.0 {
        out.push(y0);
        idx += 1;
    }
    let mut obs = |s: &DenseStep<N>| {
        while idx < samples.len() && (samples[idx] - s.x1()) * dir <= 0.0 {
            out.push(s.eval(samples[idx]));
            idx += 1;
        }
    };
    stepper.advance(x_end, breaks, &mut obs)?;
    while out.len() < samples.len() {
        out.push(stepper.y());
    }
    Ok(out)
}

/// Right-hand side of `-y'' + V y = λ y` as a first-order system in `(y, y')`.
pub fn schrodinger_rhs(v: &PotentialEvaluator, lambda: C64) -> impl Fn(f64, &State<2>) -> State<2> + '_ {
    move |x, y| [y[1], y[0] * (v.value(x) - lambda)]
}

pub fn integrate_schrodinger(
    v: &PotentialEvaluator,
    lambda: C64,
    y0: Vec2,
    x0: f64,
    x1: f64,
    tol: ToleranceSpec,
) -> Result<Trajectory<2>> {
    let breaks = v.breakpoints_in(x0, x1);
    integrate(schrodinger_rhs(v, lambda), y0, x0, x1, &breaks, tol)
}

pub fn integrate_linear_system<A>(
    a: A,
    y0: Vec2,
    x0: f64,
    x1: f64,
    tol: ToleranceSpec,
) -> Result<Trajectory<2>>
where
    A: Fn(f64) -> Mat2,
{
    integrate(move |x, y: &Vec2| a(x).apply(y), y0, x0, x1, &[], tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn free_sine() {
        let v = PotentialEvaluator::zero();
        let tr = integrate_schrodinger(&v, c(1.0), [c(0.0), c(1.0)], 0.0, PI, ToleranceSpec::default())
            .unwrap();
        let y = tr.endpoint();
        assert!(y[0].norm() < 1e-9 && (y[1] + 1.0).norm() < 1e-9);
        let mid = tr.eval(1.0);
        assert!((mid[0] - 1.0_f64.sin()).norm() < 1e-8);
    }

    #[test]
    fn free_hyperbolic() {
        let v = PotentialEvaluator::zero();
        let tr = integrate_schrodinger(&v, c(-1.0), [c(1.0), c(0.0)], 0.0, 1.0, ToleranceSpec::default())
            .unwrap();
        let y = tr.endpoint();
        assert!((y[0] - 1.0_f64.cosh()).norm() < 1e-9);
        assert!((y[1] - 1.0_f64.sinh()).norm() < 1e-9);
    }

    #[test]
    fn linear_examples() {
        let tol = ToleranceSpec::default();
        let tr = integrate_linear_system(|_| Mat2::ZERO, [c(1.0), c(2.0)], 0.0, 5.0, tol).unwrap();
        assert_eq!(tr.endpoint(), [c(1.0), c(2.0)]);
        let tr = integrate_linear_system(|_| Mat2::real(1.0, 0.0, 0.0, -1.0), [c(1.0), c(1.0)], 0.0, 1.0, tol)
            .unwrap();
        let y = tr.endpoint();
        assert!((y[0] - core::f64::consts::E).norm() < 1e-9);
        assert!((y[1] - 1.0 / core::f64::consts::E).norm() < 1e-9);
        let tr = integrate_linear_system(|_| Mat2::real(0.0, 1.0, -1.0, 0.0), [c(1.0), c(0.0)], 0.0, PI / 2.0, tol)
            .unwrap();
        let y = tr.endpoint();
        assert!(y[0].norm() < 1e-9 && (y[1] + 1.0).norm() < 1e-9);
    }

    #[test]
    fn breakpoints_respected() {
        let v = PotentialEvaluator::piecewise(|x| if x < 1.0 { 0.0 } else { 5.0 }, alloc::vec![1.0]).unwrap();
        let tr = integrate_schrodinger(&v, c(1.0), [c(0.0), c(1.0)], 0.0, 2.0, ToleranceSpec::default())
            .unwrap();
        assert!(tr.steps().iter().any(|s| (s.x1() - 1.0).abs() < 1e-15));
        // exact: sin x on [0,1], then sinh/cosh with κ=2 matched at 1
        let (s1, c1) = (1.0_f64.sin(), 1.0_f64.cos());
        let exact = s1 * 2.0_f64.cosh() + c1 * 2.0_f64.sinh() / 2.0;
        assert!((tr.endpoint()[0].re - exact).abs() < 1e-9);
    }

    #[test]
    fn sampled_matches_dense() {
        let v = PotentialEvaluator::smooth(|x| x.cos());
        let tol = ToleranceSpec::new(1e-11, 1e-13);
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let s = integrate_sampled(schrodinger_rhs(&v, c(2.0)), [c(0.0), c(1.0)], 0.0, &xs, &[], tol).unwrap();
        let tr = integrate_schrodinger(&v, c(2.0), [c(0.0), c(1.0)], 0.0, 9.8, tol).unwrap();
        for (x, y) in xs.iter().zip(&s) {
            assert!((tr.eval(*x)[0] - y[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn underflow_reported() {
        let tol = ToleranceSpec::new(1e-10, 1e-12).with_min_step(1e-3);
        let r = integrate(|x, y: &State<1>| [y[0] / (1.0 - x).powi(3)], [c(1.0)], 0.0, 1.0, &[], tol);
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::NonFinite { .. })));
    }
}
