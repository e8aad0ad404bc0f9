//! The unperturbed periodic operator `-d²/dx² + q(x)`, `q(x + a) = q(x)`.
//!
//! Fundamental matrix columns are the solutions `c` (`c(0)=1, c'(0)=0`) and
//! `s` (`s(0)=0, s'(0)=1`); the monodromy `M = [[c(a), s(a)], [c'(a), s'(a)]]`
//! maps `(ψ(0), ψ'(0))` to `(ψ(a), ψ'(a))`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::ode::{self, State, ToleranceSpec, Trajectory};
use crate::potential::PotentialEvaluator;

const I: C64 = C64::new(0.0, 1.0);

/// Tolerances suited to per-cell integrations (a few hundred steps).
pub fn cell_tolerance() -> ToleranceSpec {
    ToleranceSpec::new(1e-13, 1e-15)
}

#[derive(Clone, Debug)]
pub struct PeriodicPotential {
    a: f64,
    q: PotentialEvaluator,
}

impl PeriodicPotential {
    /// `cell` is evaluated on `[0, a)`; the evaluator wraps modulo `a`.
    pub fn new<F>(a: f64, cell: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_period(a)?;
        Ok(PeriodicPotential { a, q: PotentialEvaluator::smooth(move |x| cell(x - a * (x / a).floor())) })
    }

    /// `q ≡ 0` with period `a`.
    pub fn free(a: f64) -> Result<Self> {
        check_period(a)?;
        Ok(PeriodicPotential { a, q: PotentialEvaluator::zero() })
    }

    /// `q(x) = q0 + Σ_j cos[j]·cos(2π(j+1)x/a) + sin[j]·sin(2π(j+1)x/a)`.
    pub fn trig(a: f64, q0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        check_period(a)?;
        if q0.is_nan() || cos.iter().chain(&sin).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("trigonometric coefficients must be finite"));
        }
        let base = 2.0 * PI / a;
        let q = PotentialEvaluator::smooth(move |x| {
            let mut v = q0;
            for (j, c) in cos.iter().enumerate() {
                v += c * (base * (j + 1) as f64 * x).cos();
            }
            for (j, s) in sin.iter().enumerate() {
                v += s * (base * (j + 1) as f64 * x).sin();
            }
            v
        });
        Ok(PeriodicPotential { a, q })
    }

    /// Piecewise-constant cell: `values[i]` on `[starts[i], starts[i+1])`, `starts[0] = 0`.
    pub fn step_table(a: f64, starts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_period(a)?;
        if starts.is_empty() || starts.len() != values.len() || starts[0] != 0.0 {
            return Err(Error::InvalidInput("step table needs matching starts/values with starts[0]=0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("step values must be finite"));
        }
        let cell = starts.clone();
        let q = PotentialEvaluator::periodic_piecewise(
            move |x| {
                let s = x - a * (x / a).floor();
                let i = starts.partition_point(|&b| b <= s).saturating_sub(1);
                values[i]
            },
            cell,
            a,
        )?;
        Ok(PeriodicPotential { a, q })
    }

    pub fn period(&self) -> f64 {
        self.a
    }

    pub fn potential(&self) -> &PotentialEvaluator {
        &self.q
    }

    pub fn value(&self, x: f64) -> f64 {
        self.q.value(x)
    }

    /// Minimum over a fine cell grid (used to start the band search below the spectrum).
    pub fn sampled_min(&self) -> f64 {
        (0..1024).map(|i| self.q.value(self.a * i as f64 / 1024.0)).fold(f64::INFINITY, f64::min)
    }

    fn cell_breaks(&self) -> Vec<f64> {
        self.q.breakpoints_in(0.0, self.a)
    }
}

fn check_period(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput("period a must be positive and finite"))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Monodromy {
    pub lambda: C64,
    pub m: Mat2,
    /// `∂M/∂λ`.
    pub dm: Mat2,
}

impl Monodromy {
    /// `trD(λ)`.
    pub fn discriminant(&self) -> C64 {
        self.m.trace()
    }

    /// `d trD / dλ`.
    pub fn discriminant_derivative(&self) -> C64 {
        self.dm.trace()
    }
}

/// Transfer matrix over one period together with its `λ`-derivative.
pub fn monodromy(p: &PeriodicPotential, lambda: C64, tol: ToleranceSpec) -> Result<Monodromy> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let q = &p.q;
    let rhs = |x: f64, y: &State<8>| {
        let v = q.value(x) - lambda;
        [y[1], v * y[0], y[3], v * y[2], y[5], v * y[4] - y[0], y[7], v * y[6] - y[2]]
    };
    let y0 = [one, zero, zero, one, zero, zero, zero, zero];
    let tr = ode::integrate(rhs, y0, 0.0, p.a, &p.cell_breaks(), tol)?;
    let y = tr.endpoint();
    Ok(Monodromy { lambda, m: Mat2::new(y[0], y[2], y[1], y[3]), dm: Mat2::new(y[4], y[6], y[5], y[7]) })
}

#[derive(Clone, Copy, Debug)]
pub struct QuasiMomentum {
    pub lambda: C64,
    pub k: C64,
    /// Monodromy eigenvalue `e^{ik}` of the decaying (or `ψ₊`) direction.
    pub z: C64,
    pub band: usize,
    /// `dk/dλ` (from `trD'`).
    pub dk: C64,
    pub monodromy: Mat2,
}

fn nearest_shift(re: f64, centre: f64) -> f64 {
    re + 2.0 * PI * ((centre - re) / (2.0 * PI)).round()
}

fn branch_k(t: C64, lambda: C64, band: usize) -> Result<C64> {
    let n = band as f64;
    let centre = (n + 0.5) * PI;
    let real_axis = lambda.im.abs() <= 1e-14 * (1.0 + lambda.re.abs());
    if real_axis {
        let tr = t.re;
        if (tr.abs() - 1.0).abs() <= 1e-12 {
            return Err(Error::EdgeDegeneracy { lambda: lambda.re });
        }
        if tr.abs() < 1.0 {
            let theta = tr.acos();
            let k = if band % 2 == 0 { n * PI + theta } else { (n + 1.0) * PI - theta };
            return Ok(C64::new(k, 0.0));
        }
        let root = (tr * tr - 1.0).sqrt();
        let z = tr - tr.signum() * root;
        let re = if z > 0.0 { 0.0 } else { PI };
        Ok(C64::new(nearest_shift(re, centre), -z.abs().ln()))
    } else {
        let root = (t * t - 1.0).sqrt();
        let (z1, z2) = (t + root, t - root);
        let z = if z1.norm() < z2.norm() { z1 } else { z2 };
        let k0 = -I * z.ln();
        Ok(C64::new(nearest_shift(k0.re, centre), k0.im))
    }
}

/// Quasi-momentum on the branch selected by `band`: `k ∈ [nπ, (n+1)π]` on
/// band `n`, increasing along the band, and `Im k > 0` off the real axis.
pub fn quasimomentum(mono: &Monodromy, band: usize) -> Result<QuasiMomentum> {
    let lambda = mono.lambda;
    let t = mono.discriminant() / 2.0;
    let dt = mono.discriminant_derivative() / 2.0;
    let k = branch_k(t, lambda, band)?;
    // k' = -D'/(2 sin k) with D = 2cos k
    let sk = k.sin();
    let dk = if sk.norm() > 0.0 { -dt / sk } else { C64::new(f64::INFINITY, 0.0) };
    if k.im == 0.0 && !(dk.re > 0.0) {
        return Err(Error::BranchMismatch { hint: band, lambda: lambda.re });
    }
    Ok(QuasiMomentum { lambda, k, z: (I * k).exp(), band, dk, monodromy: mono.m })
}

/// Real quasi-momentum at a real in-band `λ` on band `band`.
pub fn quasimomentum_real(p: &PeriodicPotential, lambda: f64, band: usize, tol: ToleranceSpec) -> Result<f64> {
    let m = monodromy(p, C64::new(lambda, 0.0), tol)?;
    let q = quasimomentum(&m, band)?;
    Ok(q.k.re)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lower && lambda <= self.upper
    }
}

#[derive(Clone, Debug)]
pub struct BandStructure {
    pub period: f64,
    pub bands: Vec<Band>,
    pub lambda_max: f64,
}

impl BandStructure {
    /// All edges in increasing order: `λ₀, μ₀, μ₁, λ₁, λ₂, …`.
    pub fn edges(&self) -> Vec<f64> {
        self.bands.iter().flat_map(|b| [b.lower, b.upper]).collect()
    }

    pub fn band(&self, n: usize) -> Option<&Band> {
        self.bands.get(n)
    }

    /// Gaps between consecutive bands as `(upper_n, lower_{n+1})`; closed gaps have zero width.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.bands.windows(2).map(|w| (w[0].upper, w[1].lower)).collect()
    }

    /// Index of the band whose open interior contains `λ`.
    pub fn band_of(&self, lambda: f64) -> Option<usize> {
        self.bands.iter().position(|b| lambda > b.lower && lambda < b.upper)
    }

    /// Distance from `λ` to the nearest edge of its band.
    pub fn edge_distance(&self, lambda: f64) -> Option<f64> {
        self.band_of(lambda).map(|n| {
            let b = &self.bands[n];
            (lambda - b.lower).min(b.upper - lambda)
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BandOptions {
    pub ode: ToleranceSpec,
    /// Absolute root tolerance in `λ`.
    pub root_tol: f64,
    /// Extrema with `|trD| - 2` at or below this are closed gaps.
    pub closed_gap_tol: f64,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions { ode: cell_tolerance(), root_tol: 1e-13, closed_gap_tol: 1e-12 }
    }
}

struct Disc<'a> {
    p: &'a PeriodicPotential,
    tol: ToleranceSpec,
}

impl Disc<'_> {
    fn eval(&self, lambda: f64) -> Result<(f64, f64)> {
        let m = monodromy(self.p, C64::new(lambda, 0.0), self.tol)?;
        Ok((m.discriminant().re, m.discriminant_derivative().re))
    }

    /// Root of `D' = 0` bracketed by `[lo, hi]` (Illinois false position).
    fn extremum(&self, mut lo: f64, mut hi: f64, mut flo: f64, mut fhi: f64, tol: f64) -> Result<f64> {
        let mut side = 0;
        for _ in 0..200 {
            if (hi - lo).abs() <= tol {
                break;
            }
            let mut x = (lo * fhi - hi * flo) / (fhi - flo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let (_, fx) = self.eval(x)?;
            if fx == 0.0 {
                return Ok(x);
            }
            if (fx > 0.0) == (flo > 0.0) {
                lo = x;
                flo = fx;
                if side == -1 {
                    fhi /= 2.0;
                }
                side = -1;
            } else {
                hi = x;
                fhi = fx;
                if side == 1 {
                    flo /= 2.0;
                }
                side = 1;
            }
            if (hi - lo).abs() <= tol {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Root of `D = level` on a monotone piece `[lo, hi]` (safeguarded Newton).
    fn level(&self, level: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
        let (flo, _) = self.eval(lo)?;
        let rising = flo < level;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (d, dd) = self.eval(x)?;
            let g = d - level;
            if g == 0.0 {
                return Ok(x);
            }
            if (g < 0.0) == rising {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - g / dd;
            let next = if dd != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= tol || (hi - lo) <= tol {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}

/// Band edges up to (and including the band containing) `λ_max`.
pub fn band_edges(p: &PeriodicPotential, lambda_max: f64, opts: &BandOptions) -> Result<BandStructure> {
    let disc = Disc { p, tol: opts.ode };
    let lo0 = p.sampled_min() - 1.0;
    if !(lambda_max > lo0) {
        return Err(Error::InvalidInput("lambda_max must lie above the bottom of the spectrum"));
    }
    let dmax = (PI / p.a).powi(2) / 16.0;
    let mut extrema: Vec<(f64, f64)> = Vec::new();
    let (mut x, (mut d, mut dd)) = (lo0, disc.eval(lo0)?);
    let mut step = dmax;
    let mut guard = 0usize;
    loop {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::NonConvergence { last_change: x });
        }
        step = step.min(dmax).min(0.5 / dd.abs().max(1e-300));
        let xn = x + step;
        let (dn, ddn) = disc.eval(xn)?;
        if (dn - d).abs() > 1.0 && step > 1e-9 {
            step /= 2.0;
            continue;
        }
        if ddn == 0.0 || (ddn > 0.0) != (dd > 0.0) {
            let ex = if ddn == 0.0 { xn } else { disc.extremum(x, xn, dd, ddn, opts.root_tol)? };
            let (dex, _) = disc.eval(ex)?;
            extrema.push((ex, dex));
            if ex > lambda_max {
                break;
            }
        }
        x = xn;
        d = dn;
        dd = if ddn == 0.0 { -dd } else { ddn };
        step *= 2.0;
    }
    let mut pieces = alloc::vec![(lo0, disc.eval(lo0)?.0)];
    pieces.extend(extrema.iter().copied());
    let mut bands = Vec::new();
    for j in 0..pieces.len() - 1 {
        let (b0, d0) = pieces[j];
        let (b1, d1) = pieces[j + 1];
        let lower = if j == 0 {
            disc.level(2.0, b0, b1, opts.root_tol)?
        } else if d0.abs() - 2.0 <= opts.closed_gap_tol {
            b0
        } else {
            disc.level(2.0 * d0.signum(), b0, b1, opts.root_tol)?
        };
        if lower > lambda_max {
            break;
        }
        let upper = if d1.abs() - 2.0 <= opts.closed_gap_tol {
            b1
        } else {
            disc.level(2.0 * d1.signum(), b0, b1, opts.root_tol)?
        };
        bands.push(Band { index: j, lower, upper });
    }
    for w in bands.windows(2) {
        if !(w[0].lower < w[0].upper && w[0].upper <= w[1].lower) {
            return Err(Error::InvalidInput("band edges failed the interlacing check"));
        }
    }
    Ok(BandStructure { period: p.a, bands, lambda_max })
}

/// Fourier coefficients `c_n = (1/a)∫₀^a p(x)e^{-2πinx/a}dx`, `n = -N..N`.
#[derive(Clone, Debug)]
pub struct FourierTable {
    pub period: f64,
    pub cutoff: usize,
    coeffs: Vec<C64>,
}

impl FourierTable {
    pub fn get(&self, n: i64) -> C64 {
        let idx = n + self.cutoff as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let n0 = -(self.cutoff as i64);
        self.coeffs.iter().enumerate().map(move |(i, c)| (n0 + i as i64, *c))
    }

    /// `max(|c_N|, |c_{-N}|)`.
    pub fn tail(&self) -> f64 {
        self.coeffs[0].norm().max(self.coeffs[self.coeffs.len() - 1].norm())
    }

    /// `|c_N|·N²`.
    pub fn decay_diagnostic(&self) -> f64 {
        self.tail() * (self.cutoff as f64).powi(2)
    }

    /// `Σ|c_n|`.
    pub fn l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Smallest `C` with `|c_n| ≤ C/(n²+1)` over the table.
    pub fn decay_constant(&self) -> f64 {
        self.iter().map(|(n, c)| c.norm() * ((n * n) as f64 + 1.0)).fold(0.0, f64::max)
    }

    /// Table with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: C64) -> FourierTable {
        FourierTable { coeffs: self.coeffs.iter().map(|c| c * s).collect(), ..self.clone() }
    }

    /// Evaluate the truncated series at `x`.
    pub fn eval(&self, x: f64) -> C64 {
        let base = 2.0 * PI * x / self.period;
        self.iter().map(|(n, c)| c * C64::from_polar(1.0, base * n as f64)).sum()
    }
}

/// Fourier table from `8N` equispaced cell samples (trapezoidal rule).
pub fn fourier_table<F: Fn(f64) -> C64>(p: F, a: f64, cutoff: usize) -> FourierTable {
    let samples: Vec<C64> = {
        let m = 8 * cutoff.max(1);
        (0..m).map(|j| p(a * j as f64 / m as f64)).collect()
    };
    table_from_samples(&samples, a, cutoff)
}

fn table_from_samples(samples: &[C64], a: f64, cutoff: usize) -> FourierTable {
    let m = samples.len();
    let twiddle: Vec<C64> = (0..m).map(|j| C64::from_polar(1.0, -2.0 * PI * j as f64 / m as f64)).collect();
    let mut coeffs = Vec::with_capacity(2 * cutoff + 1);
    for n in -(cutoff as i64)..=cutoff as i64 {
        let step = n.rem_euclid(m as i64) as usize;
        let mut idx = 0usize;
        let mut acc = C64::new(0.0, 0.0);
        for s in samples {
            acc += s * twiddle[idx];
            idx += step;
            if idx >= m {
                idx -= m;
            }
        }
        coeffs.push(acc / m as f64);
    }
    FourierTable { period: a, cutoff, coeffs }
}

/// Raise the cutoff from `n0` (doubling, up to `cap`) until `|c_N| < decay_tol`.
/// Returns the table and whether the tolerance was met.
pub fn fourier_table_auto<F: Fn(f64) -> C64>(p: F, a: f64, n0: usize, cap: usize, decay_tol: f64) -> (FourierTable, bool) {
    let mut n = n0.max(1);
    loop {
        let t = fourier_table(&p, a, n);
        if t.tail() < decay_tol {
            return (t, true);
        }
        if n >= cap {
            return (t, false);
        }
        n = (2 * n).min(cap);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochOptions {
    pub ode: ToleranceSpec,
    pub fourier_start: usize,
    pub fourier_cap: usize,
    pub decay_tol: f64,
}

impl Default for BlochOptions {
    fn default() -> Self {
        BlochOptions { ode: cell_tolerance(), fourier_start: 64, fourier_cap: 1024, decay_tol: 1e-10 }
    }
}

/// Normalized Bloch pair at one spectral point.
///
/// Gauge: `ψ₊(0) = 1` (times the gauge phase), `ψ₋(0) = 1` (times its
/// conjugate); on band interiors `ψ₋ = conj(ψ₊)` exactly and `W ∈ iℝ₊`.
#[derive(Clone, Debug)]
pub struct BlochData {
    pub lambda: C64,
    pub k: C64,
    pub band: usize,
    pub period: f64,
    /// `W(ψ₊, ψ₋) = ψ₊'ψ₋ - ψ₊ψ₋'`.
    pub w: C64,
    /// Fourier tables of `p₊²`, `p₋²`, `p₊p₋`.
    pub b: FourierTable,
    pub b_hat: FourierTable,
    pub b_tilde: FourierTable,
    /// Whether all three tables met the decay tolerance.
    pub fourier_converged: bool,
    pub gauge: f64,
    plus: Vec2,
    minus: Vec2,
    on_band: bool,
    cell: Arc<Trajectory<4>>,
    cell_breaks: Vec<f64>,
}

impl BlochData {
    pub fn on_band(&self) -> bool {
        self.on_band
    }

    fn cell_values(&self, s: f64, v: &Vec2) -> Vec2 {
        let y = self.cell.eval(s);
        [y[0] * v[0] + y[2] * v[1], y[1] * v[0] + y[3] * v[1]]
    }

    fn split(&self, x: f64) -> (f64, f64) {
        let m = (x / self.period).floor();
        let s = x - m * self.period;
        if s >= self.period {
            (m + 1.0, 0.0)
        } else {
            (m, s.max(0.0))
        }
    }

    /// `(ψ₊(x), ψ₊'(x))`.
    pub fn psi_plus(&self, x: f64) -> Vec2 {
        let (m, s) = self.split(x);
        let f = (I * self.k * m).exp();
        let v = self.cell_values(s, &self.plus);
        [v[0] * f, v[1] * f]
    }

    /// `(ψ₋(x), ψ₋'(x))`.
    pub fn psi_minus(&self, x: f64) -> Vec2 {
        let (m, s) = self.split(x);
        let f = (-I * self.k * m).exp();
        let v = self.cell_values(s, &self.minus);
        [v[0] * f, v[1] * f]
    }

    /// `p₊(x) = e^{-ikx/a}ψ₊(x)` (periodic).
    pub fn p_plus(&self, x: f64) -> C64 {
        let (_, s) = self.split(x);
        (-I * self.k * s / self.period).exp() * self.cell_values(s, &self.plus)[0]
    }

    /// `p₋(x) = e^{ikx/a}ψ₋(x)` (periodic).
    pub fn p_minus(&self, x: f64) -> C64 {
        let (_, s) = self.split(x);
        (I * self.k * s / self.period).exp() * self.cell_values(s, &self.minus)[0]
    }

    /// `(p₊(x), p₋(x))` sharing one cell lookup.
    pub fn p_pair(&self, x: f64) -> (C64, C64) {
        let (_, s) = self.split(x);
        let y = self.cell.eval(s);
        let e = (I * self.k * s / self.period).exp();
        let pp = y[0] * self.plus[0] + y[2] * self.plus[1];
        let pm = y[0] * self.minus[0] + y[2] * self.minus[1];
        (pp / e, pm * e)
    }

    /// Breakpoints of the periodic potential strictly inside `(x0, x1)`.
    pub fn period_breaks(&self, x0: f64, x1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if self.cell_breaks.is_empty() || x1 <= x0 {
            return out;
        }
        let a = self.period;
        let mut m = (x0 / a).floor();
        while m * a < x1 {
            for b in &self.cell_breaks {
                let x = m * a + b;
                if x > x0 && x < x1 {
                    out.push(x);
                }
            }
            m += 1.0;
        }
        out
    }

    /// `max(|p₊|, |p₋|)` over 64 cell samples.
    pub fn p_sup(&self) -> f64 {
        (0..64)
            .map(|j| {
                let (pp, pm) = self.p_pair(self.period * j as f64 / 64.0);
                pp.norm().max(pm.norm())
            })
            .fold(0.0, f64::max)
    }

    /// Initial data `(ψ₊(0), ψ₊'(0))`.
    pub fn plus_initial(&self) -> Vec2 {
        self.plus
    }

    pub fn minus_initial(&self) -> Vec2 {
        self.minus
    }

    /// `W(ψ₊, ψ₋)` evaluated from the pair at `x` (x-independent up to integration error).
    pub fn wronskian_at(&self, x: f64) -> C64 {
        let p = self.psi_plus(x);
        let m = self.psi_minus(x);
        p[1] * m[0] - p[0] * m[1]
    }

    /// The same pair in the gauge `ψ₊ → e^{iθ}ψ₊`, `ψ₋ → e^{-iθ}ψ₋`.
    pub fn with_gauge(&self, theta: f64) -> BlochData {
        let e = C64::from_polar(1.0, theta);
        let ec = e.conj();
        let rel = theta - self.gauge;
        let er = C64::from_polar(1.0, rel);
        let mut out = self.clone();
        let base_plus = [self.plus[0] / C64::from_polar(1.0, self.gauge), self.plus[1] / C64::from_polar(1.0, self.gauge)];
        let base_minus = [self.minus[0] * C64::from_polar(1.0, self.gauge), self.minus[1] * C64::from_polar(1.0, self.gauge)];
        out.plus = [base_plus[0] * e, base_plus[1] * e];
        out.minus = [base_minus[0] * ec, base_minus[1] * ec];
        out.b = self.b.scaled(er * er);
        out.b_hat = self.b_hat.scaled((er * er).conj());
        out.gauge = theta;
        out
    }
}

/// Build the Bloch pair at `qm.lambda` on the branch of `qm.band`.
pub fn bloch_pair(p: &PeriodicPotential, qm: &QuasiMomentum, opts: &BlochOptions) -> Result<BlochData> {
    let lambda = qm.lambda;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let q = &p.q;
    let rhs = |x: f64, y: &State<4>| {
        let v = q.value(x) - lambda;
        [y[1], v * y[0], y[3], v * y[2]]
    };
    let cell = ode::integrate(rhs, [one, zero, zero, one], 0.0, p.a, &p.cell_breaks(), opts.ode)?;
    let y = cell.endpoint();
    let m = Mat2::new(y[0], y[2], y[1], y[3]);
    let k = branch_k(m.trace() / 2.0, lambda, qm.band)?;
    let on_band = k.im == 0.0;
    let beta = |z: C64| -> Result<C64> {
        let d1 = m.get(0, 1);
        let d2 = z - m.get(1, 1);
        let scale = m.max_abs().max(1.0);
        if d1.norm().max(d2.norm()) <= 1e-13 * scale {
            return Err(Error::EigenvectorDegeneracy);
        }
        Ok(if d1.norm() >= d2.norm() { (z - m.get(0, 0)) / d1 } else { m.get(1, 0) / d2 })
    };
    let zp = (I * k).exp();
    let bp = beta(zp)?;
    let bm = if on_band { bp.conj() } else { beta(one / zp)? };
    let w = bp - bm;
    if w.norm() <= 1e-10 * (1.0 + bp.norm()) {
        return Err(Error::EigenvectorDegeneracy);
    }
    if on_band && !(w.im > 0.0) {
        return Err(Error::BranchMismatch { hint: qm.band, lambda: lambda.re });
    }
    let mut data = BlochData {
        lambda,
        k,
        band: qm.band,
        period: p.a,
        w,
        b: FourierTable { period: p.a, cutoff: 0, coeffs: alloc::vec![zero] },
        b_hat: FourierTable { period: p.a, cutoff: 0, coeffs: alloc::vec![zero] },
        b_tilde: FourierTable { period: p.a, cutoff: 0, coeffs: alloc::vec![zero] },
        fourier_converged: true,
        gauge: 0.0,
        plus: [one, bp],
        minus: [one, bm],
        on_band,
        cell: Arc::new(cell),
        cell_breaks: p.cell_breaks(),
    };
    let (b, c1) = fourier_table_auto(|s| data.p_plus(s).powi(2), p.a, opts.fourier_start, opts.fourier_cap, opts.decay_tol);
    let (b_hat, c2) = if on_band {
        let mut t = b.clone();
        let n = t.coeffs.len();
        for i in 0..n {
            t.coeffs[i] = b.coeffs[n - 1 - i].conj();
        }
        (t, c1)
    } else {
        fourier_table_auto(|s| data.p_minus(s).powi(2), p.a, opts.fourier_start, opts.fourier_cap, opts.decay_tol)
    };
    let (b_tilde, c3) = fourier_table_auto(
        |s| {
            let (pp, pm) = data.p_pair(s);
            pp * pm
        },
        p.a,
        opts.fourier_start,
        opts.fourier_cap,
        opts.decay_tol,
    );
    data.b = b;
    data.b_hat = b_hat;
    data.b_tilde = b_tilde;
    data.fourier_converged = c1 && c2 && c3;
    Ok(data)
}

/// Convenience: monodromy, quasi-momentum and Bloch pair at `λ` on band `band`.
pub fn bloch_at(p: &PeriodicPotential, lambda: C64, band: usize, opts: &BlochOptions) -> Result<BlochData> {
    let m = monodromy(p, lambda, opts.ode)?;
    let qm = quasimomentum(&m, band)?;
    bloch_pair(p, &qm, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn free_monodromy() {
        let p = PeriodicPotential::free(PI).unwrap();
        let m = monodromy(&p, c(1.0), cell_tolerance()).unwrap();
        assert!((m.m - Mat2::real(-1.0, 0.0, 0.0, -1.0)).max_abs() < 1e-11);
        let p1 = PeriodicPotential::free(1.0).unwrap();
        let m = monodromy(&p1, c(0.0), cell_tolerance()).unwrap();
        assert!((m.m - Mat2::real(1.0, 1.0, 0.0, 1.0)).max_abs() < 1e-12);
        assert!((m.discriminant() - 2.0).norm() < 1e-12);
    }

    #[test]
    fn free_quasimomentum() {
        let p = PeriodicPotential::free(1.0).unwrap();
        let tol = cell_tolerance();
        let k = quasimomentum(&monodromy(&p, c(1.0), tol).unwrap(), 0).unwrap();
        assert!((k.k - 1.0).norm() < 1e-11);
        let k = quasimomentum(&monodromy(&p, c(6.0), tol).unwrap(), 0).unwrap();
        assert!((k.k.re - 6.0_f64.sqrt()).abs() < 1e-10);
        let k = quasimomentum(&monodromy(&p, c(20.0), tol).unwrap(), 1).unwrap();
        assert!((k.k.re - 20.0_f64.sqrt()).abs() < 1e-10);
        assert!(quasimomentum(&monodromy(&p, c(20.0), tol).unwrap(), 0).is_err());
        let k = quasimomentum(&monodromy(&p, C64::new(1.0, 1.0), tol).unwrap(), 0).unwrap();
        assert!(k.k.im > 0.0);
        assert!((k.k - C64::new(1.0, 1.0).sqrt()).norm() < 1e-10);
        assert!(matches!(
            quasimomentum(&monodromy(&p, c(PI * PI), tol).unwrap(), 0),
            Err(Error::EdgeDegeneracy { .. })
        ));
    }

    #[test]
    fn gap_quasimomentum_parity() {
        let p = PeriodicPotential::trig(PI, 0.0, alloc::vec![2.0], alloc::vec![]).unwrap();
        let tol = cell_tolerance();
        // inside the first gap (b₁(1) ≈ -0.110, a₁(1) ≈ 1.859)
        let k = quasimomentum(&monodromy(&p, c(0.8), tol).unwrap(), 0).unwrap();
        assert!((k.k.re - PI).abs() < 1e-12 && k.k.im > 0.0);
        let k = quasimomentum(&monodromy(&p, c(0.8), tol).unwrap(), 1).unwrap();
        assert!((k.k.re - PI).abs() < 1e-12);
        let k = quasimomentum(&monodromy(&p, c(-3.0), tol).unwrap(), 0).unwrap();
        assert!(k.k.re.abs() < 1e-12 && k.k.im > 0.0);
    }

    #[test]
    fn free_bloch() {
        let p = PeriodicPotential::free(1.0).unwrap();
        let b = bloch_at(&p, c(4.0), 0, &BlochOptions::default()).unwrap();
        assert!((b.w - C64::new(0.0, 4.0)).norm() < 1e-10);
        for &x in &[0.0, 0.3, 1.7, 12.25] {
            let e = C64::new(0.0, 2.0 * x).exp();
            assert!((b.psi_plus(x)[0] - e).norm() < 1e-9);
            assert!((b.psi_minus(x)[0] - e.conj()).norm() < 1e-9);
            assert!((b.p_plus(x) - 1.0).norm() < 1e-9);
        }
        assert!((b.b.get(0) - 1.0).norm() < 1e-10);
        assert!(b.b.iter().filter(|(n, _)| *n != 0).all(|(_, v)| v.norm() < 1e-10));
    }

    #[test]
    fn fourier_basics() {
        let t = fourier_table(|_| c(1.0), 2.0, 8);
        assert!((t.get(0) - 1.0).norm() < 1e-15 && t.tail() < 1e-15);
        let t = fourier_table(|x| C64::from_polar(1.0, 2.0 * PI * x / 2.0), 2.0, 8);
        assert!((t.get(1) - 1.0).norm() < 1e-14 && t.get(0).norm() < 1e-14 && t.get(-1).norm() < 1e-14);
        assert!((t.eval(0.3) - C64::from_polar(1.0, 0.3 * PI)).norm() < 1e-13);
    }

    #[test]
    fn gauge_rotation() {
        let p = PeriodicPotential::trig(PI, 0.0, alloc::vec![2.0], alloc::vec![]).unwrap();
        let b = bloch_at(&p, c(1.0), 0, &BlochOptions::default()).unwrap();
        let g = b.with_gauge(0.7);
        let e = C64::from_polar(1.0, 0.7);
        assert!((g.psi_plus(2.3)[0] - b.psi_plus(2.3)[0] * e).norm() < 1e-14);
        assert!((g.psi_minus(2.3)[0] - b.psi_minus(2.3)[0] / e).norm() < 1e-14);
        assert!((g.w - b.w).norm() < 1e-14);
        assert!((g.b.get(1) - b.b.get(1) * e * e).norm() < 1e-14);
        let back = g.with_gauge(0.0);
        assert!((back.psi_plus(1.0)[0] - b.psi_plus(1.0)[0]).norm() < 1e-14);
    }
}
