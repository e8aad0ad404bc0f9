//! Density records at band points and scans over grids of them.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::ode::ToleranceSpec;
use crate::periodic::{band_edges, bloch_at, BandOptions, BandStructure, BlochOptions};
use crate::reduction::{build_q, critical_points, epsilon_value, OperatorSpec, ResonanceSet};

use super::cauchy::CauchyStream;
use super::extract::{extract_a_band, AsymptoticCoefficient, ExtractOptions};
use super::weyl::{spectral_density, weyl_m, wronskian_identity};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOptions {
    pub ode: ToleranceSpec,
    pub bloch: BlochOptions,
    pub extract: ExtractOptions,
    /// Extract in the `e^{-Q}` frame (removes the `O(x^{-γ})` oscillation).
    pub transformed: bool,
    /// Minimum `ε(λ)` for a grid point.
    pub epsilon_margin: f64,
    /// Minimum edge distance as a fraction of the band width.
    pub edge_margin: f64,
    /// Bloch gauge phase.
    pub gauge: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            ode: ToleranceSpec::new(1e-12, 1e-14),
            bloch: BlochOptions::default(),
            extract: ExtractOptions::default(),
            transformed: true,
            epsilon_margin: 1e-3,
            edge_margin: 1e-3,
            gauge: 0.0,
        }
    }
}

/// Operator plus the data shared by every point of a scan.
#[derive(Clone, Debug)]
pub struct DensityContext {
    pub spec: OperatorSpec,
    pub bands: BandStructure,
    /// Critical points (absent when `c = 0`).
    pub resonances: Option<ResonanceSet>,
    pub opts: DensityOptions,
}

impl DensityContext {
    /// Band edges up to `lambda_max` and, if the Wigner-von Neumann term is
    /// present, the critical points of every band found.
    pub fn new(spec: OperatorSpec, lambda_max: f64, opts: DensityOptions) -> Result<Self> {
        let bands = band_edges(&spec.periodic, lambda_max, &BandOptions::default())?;
        // without the frequency condition there are no critical points; each
        // point then fails on its own in `build_q`
        let resonances = if spec.wvn.c != 0.0 && spec.frequency_check().passes {
            Some(critical_points(&spec.periodic, &bands, spec.wvn.omega, bands.bands.len(), opts.bloch.ode)?)
        } else {
            None
        };
        Ok(DensityContext { spec, bands, resonances, opts })
    }

    /// Why `λ` may not be used as a grid point, if it may not.
    pub fn exclusion(&self, lambda: f64) -> Option<String> {
        let Some(n) = self.bands.band_of(lambda) else {
            return Some(String::from("not in a band"));
        };
        let band = self.bands.bands[n];
        let d = (lambda - band.lower).min(band.upper - lambda);
        if d < self.opts.edge_margin * band.width() {
            return Some(String::from("too close to a band edge"));
        }
        if self.spec.wvn.c != 0.0 {
            match crate::periodic::quasimomentum_real(&self.spec.periodic, lambda, n, self.opts.bloch.ode) {
                Ok(k) => {
                    if epsilon_value(C64::new(k, 0.0), self.spec.period(), self.spec.wvn.omega) < self.opts.epsilon_margin {
                        return Some(String::from("too close to a critical point"));
                    }
                }
                Err(_) => return Some(String::from("quasi-momentum failed")),
            }
        }
        None
    }
}

/// One scanned point.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityRecord {
    pub lambda: f64,
    pub band: usize,
    pub a: C64,
    pub a_shift: C64,
    pub m: C64,
    pub rho: f64,
    pub w: C64,
    pub wronskian_residual: f64,
    /// `|Im m/π - ρ'|/ρ'`
    pub m_residual: f64,
    pub coefficient: AsymptoticCoefficient,
    /// `|A_α|` below `10⁻⁶` times the scan median.
    pub subordinate: bool,
}

/// Density record at a band-interior `λ`.
pub fn density_point(ctx: &DensityContext, lambda: f64) -> Result<DensityRecord> {
    if let Some(why) = ctx.exclusion(lambda) {
        return Err(if why.contains("critical") {
            Error::ResonanceProximity { epsilon: ctx.opts.epsilon_margin }
        } else {
            Error::InvalidInput("point excluded by the band or edge margin")
        });
    }
    let band = ctx.bands.band_of(lambda).ok_or(Error::InvalidInput("not in a band"))?;
    let mut bloch = bloch_at(&ctx.spec.periodic, C64::new(lambda, 0.0), band, &ctx.opts.bloch)?;
    if ctx.opts.gauge != 0.0 {
        bloch = bloch.with_gauge(ctx.opts.gauge);
    }
    let q = if ctx.opts.transformed && ctx.spec.wvn.c != 0.0 {
        Some(build_q(&bloch, &bloch, &ctx.spec.wvn, 1.0)?)
    } else {
        None
    };
    let mut stream = CauchyStream::new(&ctx.spec, C64::new(lambda, 0.0), ctx.spec.alpha, ctx.opts.ode)?;
    let coefficient = extract_a_band(&mut stream, &bloch, q.as_ref(), &ctx.opts.extract)?;
    if !coefficient.stabilized {
        return Err(Error::NonConvergence { last_change: coefficient.last_change });
    }
    record_from(lambda, band, bloch.w, coefficient)
}

fn record_from(lambda: f64, band: usize, w: C64, coefficient: AsymptoticCoefficient) -> Result<DensityRecord> {
    let (a, a_shift) = (coefficient.a, coefficient.a_shift);
    let m = weyl_m(a, a_shift)?;
    let rho = spectral_density(a, w)?;
    Ok(DensityRecord {
        lambda,
        band,
        a,
        a_shift,
        m,
        rho,
        w,
        wronskian_residual: wronskian_identity(a, a_shift, w),
        m_residual: (m.im / core::f64::consts::PI - rho).abs() / rho,
        coefficient,
        subordinate: false,
    })
}

/// Geometric refinement toward the critical points inside `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Refinement {
    /// Half-width of the refined neighbourhood.
    pub radius: f64,
    /// Number of halvings toward each critical point.
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPlan {
    pub points: Vec<f64>,
    pub excluded: Vec<(f64, String)>,
}

/// Uniform grid of `n` points on `[lo, hi]`, refined toward the critical
/// points (or `centres`, if given), with excluded points listed separately.
pub fn plan_grid(ctx: &DensityContext, lo: f64, hi: f64, n: usize, refine: Option<Refinement>, centres: &[f64]) -> GridPlan {
    let mut pts: Vec<f64> = if n <= 1 {
        alloc::vec![lo]
    } else {
        (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
    };
    if let Some(r) = refine {
        let mut targets: Vec<f64> = centres.to_vec();
        if targets.is_empty() {
            if let Some(res) = &ctx.resonances {
                targets = res.points();
            }
        }
        for c in targets.into_iter().filter(|c| *c > lo && *c < hi) {
            for j in 0..=r.levels {
                let d = r.radius / (1u64 << j) as f64;
                pts.push(c - d);
                pts.push(c + d);
            }
        }
    }
    pts.retain(|x| *x >= lo && *x <= hi);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for x in pts {
        match ctx.exclusion(x) {
            None => points.push(x),
            Some(why) => excluded.push((x, why)),
        }
    }
    GridPlan { points, excluded }
}

/// Outcome of one scan point.
pub type ScanOutcome = core::result::Result<DensityRecord, (f64, Error)>;

/// Evaluate every point in order and flag possible subordinate points.
pub fn density_scan(ctx: &DensityContext, points: &[f64]) -> Vec<ScanOutcome> {
    let mut out: Vec<ScanOutcome> = points.iter().map(|&x| density_point(ctx, x).map_err(|e| (x, e))).collect();
    flag_subordinate(&mut out);
    out
}

/// Mark records whose `|A_α|` is below `10⁻⁶` times the median over the scan.
pub fn flag_subordinate(out: &mut [ScanOutcome]) {
    let mut mags: Vec<f64> = out.iter().filter_map(|r| r.as_ref().ok()).map(|r| r.a.norm()).collect();
    if mags.is_empty() {
        return;
    }
    mags.sort_by(|a, b| a.total_cmp(b));
    let median = mags[mags.len() / 2];
    for r in out.iter_mut().flatten() {
        r.subordinate = r.a.norm() < 1e-6 * median;
    }
}
