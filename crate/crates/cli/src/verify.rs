//! Invariant checks of every layer against the configured operator.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wvn_core::levinson::{asymptotic_coefficient, solve_with_bound, DiagonalSystem, HorizonSchedule, Regime};
use wvn_core::linalg::Mat2;
use wvn_core::ode::{integrate_schrodinger, ToleranceSpec};
use wvn_core::periodic::{band_edges, bloch_at, monodromy, quasimomentum_real, Band, BandOptions};
use wvn_core::reduction::{
    build_levinson_system, build_q, critical_points, epsilon_value, verify_q_equation, LevinsonOptions, OperatorSpec,
};
use wvn_core::spectral::{density_point, DensityContext, DensityOptions};

use crate::commands::RunError;
use crate::config::RunConfig;
use crate::output::{Cell, Table};

struct Report {
    table: Table,
    failures: usize,
}

impl Report {
    fn check(&mut self, suite: &str, check: &str, value: f64, tolerance: f64) {
        self.record(suite, check, value, tolerance, value <= tolerance);
    }

    fn record(&mut self, suite: &str, check: &str, value: f64, tolerance: f64, pass: bool) {
        if !pass {
            self.failures += 1;
        }
        self.table.push(vec![
            Cell::Text(suite.into()),
            Cell::Text(check.into()),
            Cell::Num(value),
            Cell::Num(tolerance),
            Cell::Bool(pass),
        ]);
    }

    fn error(&mut self, suite: &str, check: &str, e: impl std::fmt::Display) {
        self.failures += 1;
        self.table.push(vec![
            Cell::Text(suite.into()),
            Cell::Text(format!("{check}: {e}")),
            Cell::Num(f64::NAN),
            Cell::Num(f64::NAN),
            Cell::Bool(false),
        ]);
    }
}

/// Band points clear of the critical points (`ε ≥ 10⁻²`) and the edges.
fn sample_points(spec: &OperatorSpec, bands: &[Band], tol: ToleranceSpec) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for b in bands.iter().take(2) {
        for f in [0.5, 0.35, 0.65, 0.2, 0.8, 0.1, 0.9] {
            let l = b.lower + f * b.width();
            let ok = spec.wvn.c == 0.0
                || quasimomentum_real(&spec.periodic, l, b.index, tol)
                    .map(|k| epsilon_value(C64::new(k, 0.0), spec.period(), spec.wvn.omega) >= 1e-2)
                    .unwrap_or(false);
            if ok {
                out.push((b.index, l));
                break;
            }
        }
    }
    out
}

/// Returns the report and whether every check passed.
pub fn verify(cfg: &RunConfig, seed: u64) -> Result<(Table, bool), RunError> {
    let spec = cfg.operator().map_err(|e| RunError(e.to_string()))?;
    let opts = cfg.density_options().map_err(|e| RunError(e.to_string()))?;
    let tol = opts.ode;
    let mut rep = Report { table: Table::new(&["suite", "check", "value", "tolerance", "pass"]), failures: 0 };
    let bs = band_edges(&spec.periodic, cfg.search_limit(), &BandOptions::default())?;
    let points = sample_points(&spec, &bs.bands, tol);
    let a = spec.period();

    // ode
    for (_, l) in &points {
        for z in [C64::new(*l, 0.0), C64::new(*l, 0.5)] {
            match monodromy(&spec.periodic, z, tol) {
                Ok(m) => rep.check("ode", &format!("det M - 1 at {z}"), (m.m.det() - 1.0).norm(), 1e-10),
                Err(e) => rep.error("ode", "monodromy", e),
            }
        }
        let v = spec.full_potential();
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let x1 = 5.0 * a;
        let back = integrate_schrodinger(&v, C64::new(*l, 0.0), y0, 0.0, x1, tol)
            .and_then(|f| integrate_schrodinger(&v, C64::new(*l, 0.0), f.endpoint(), x1, 0.0, tol).map(|b| (f, b)));
        match back {
            Ok((f, b)) => {
                let y = b.endpoint();
                let scale = f.endpoint()[0].norm().max(f.endpoint()[1].norm()).max(1.0);
                let err = (y[0] - y0[0]).norm().max((y[1] - y0[1]).norm());
                rep.check("ode", &format!("reversibility at {l:.6}"), err, 10.0 * tol.rtol * scale);
            }
            Err(e) => rep.error("ode", "reversibility", e),
        }
    }

    // periodic
    for (n, l) in &points {
        match bloch_at(&spec.periodic, C64::new(*l, 0.0), *n, &opts.bloch) {
            Ok(b) => {
                let w0 = b.wronskian_at(0.0);
                rep.check("periodic", &format!("W(0) vs W(a/2) at {l:.6}"), (w0 - b.wronskian_at(a / 2.0)).norm() / w0.norm(), 1e-8);
                rep.record("periodic", &format!("Fourier decay constant at {l:.6}"), b.b.decay_constant(), f64::INFINITY, b.fourier_converged);
            }
            Err(e) => rep.error("periodic", "bloch", e),
        }
    }
    for b in bs.bands.iter().take(2) {
        let ks: Result<Vec<f64>, _> =
            (1..20).map(|j| quasimomentum_real(&spec.periodic, b.lower + b.width() * j as f64 / 20.0, b.index, tol)).collect();
        match ks {
            Ok(ks) => {
                let min_step = ks.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                rep.record("periodic", &format!("k increasing on band {}", b.index), min_step, 0.0, min_step > 0.0);
            }
            Err(e) => rep.error("periodic", "quasi-momentum", e),
        }
    }

    // reduction
    if spec.wvn.c != 0.0 {
        let check = spec.frequency_check();
        rep.record("reduction", "frequency condition distance", check.distance, 1e-9, check.passes);
        if check.passes {
            match critical_points(&spec.periodic, &bs, spec.wvn.omega, bs.bands.len().min(4), tol) {
                Ok(set) => {
                    let worst = set.pairs.iter().map(|p| p.residual_minus.max(p.residual_plus)).fold(0.0, f64::max);
                    rep.check("reduction", "critical point k residual", worst, 1e-8);
                }
                Err(e) => rep.error("reduction", "critical points", e),
            }
            for (n, l) in &points {
                let built = bloch_at(&spec.periodic, C64::new(*l, 0.0), *n, &opts.bloch)
                    .and_then(|b| build_q(&b, &b, &spec.wvn, 1.0));
                match built {
                    Ok(q) => {
                        let xs: Vec<f64> = (0..50).map(|j| 50.0 * j as f64 / 49.0).collect();
                        rep.check("reduction", &format!("Q-equation residual at {l:.6}"), verify_q_equation(&q, &xs), 1e-5);
                        let lo = LevinsonOptions { estimate: false, ..Default::default() };
                        match build_levinson_system(&spec, &q, &lo) {
                            Ok(sys) => {
                                let r = (0..50).map(|j| sys.conjugation_residual(0.37 + 2.0 * j as f64)).fold(0.0, f64::max);
                                rep.check("reduction", &format!("R2 conjugation symmetry at {l:.6}"), r, 1e-6);
                            }
                            Err(e) => rep.error("reduction", "levinson system", e),
                        }
                    }
                    Err(e) => rep.error("reduction", "Q", e),
                }
            }
        }
    }

    // levinson
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..4 {
        match levinson_case(&mut rng, case % 2 == 1, tol) {
            Ok((d, ratio)) => {
                rep.check("levinson", &format!("random remainder {case}: limit vs direct"), d, 1e-3);
                rep.check("levinson", &format!("random remainder {case}: growth bound ratio"), ratio, 1.0);
            }
            Err(e) => rep.error("levinson", &format!("random remainder {case}"), e),
        }
    }

    // spectral
    let base = DensityContext::new(spec.clone(), cfg.search_limit(), opts)?;
    let rotated = DensityContext::new(spec.clone(), cfg.search_limit(), DensityOptions { gauge: opts.gauge + 1.0, ..opts })?;
    for (_, l) in &points {
        match (density_point(&base, *l), density_point(&rotated, *l)) {
            (Ok(r), Ok(g)) => {
                rep.check("spectral", &format!("Wronskian identity at {l:.6}"), r.wronskian_residual, 1e-5);
                rep.check("spectral", &format!("Im m/π vs ρ' at {l:.6}"), r.m_residual, 1e-5);
                rep.check("spectral", &format!("gauge invariance at {l:.6}"), (r.rho - g.rho).abs() / r.rho, 1e-8);
                rep.record("spectral", &format!("ρ' positive at {l:.6}"), r.rho, 0.0, r.rho > 0.0);
            }
            (Err(e), _) | (_, Err(e)) => rep.error("spectral", &format!("density at {l:.6}"), e),
        }
    }
    let ok = rep.failures == 0;
    Ok((rep.table, ok))
}

fn levinson_case(rng: &mut ChaCha8Rng, hyperbolic: bool, tol: ToleranceSpec) -> Result<(f64, f64), wvn_core::Error> {
    let mut entry = || (C64::from_polar(0.5 * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>()), rng.gen_range(0.5..1.5));
    let e: [(C64, f64); 4] = [entry(), entry(), entry(), entry()];
    let lam = if hyperbolic { C64::new(0.01, 1.0) } else { C64::new(0.0, 1.0) };
    let rem = move |x: f64| {
        let s = 0.1 * (1.0 + x).powf(-1.5);
        let f = |(u, k): (C64, f64)| u * C64::from_polar(s, k * x);
        Mat2::new(f(e[0]), f(e[1]), f(e[2]), f(e[3]))
    };
    let sys = DiagonalSystem::new(move |_| lam, rem, 0.2, 0.0);
    let u0 = [C64::new(0.6, -0.2), C64::new(0.1, 0.7)];
    let regime = if hyperbolic { Regime::Hyperbolic } else { Regime::Elliptic };
    let lim = asymptotic_coefficient(&sys, u0, regime, &HorizonSchedule::default(), tol)?;
    let direct = solve_with_bound(&sys, u0, 1e4, tol)?;
    let ph = direct.phase_integral(1e4);
    let u = direct.u(1e4);
    let d = if hyperbolic {
        (u[0] * (-ph).exp() - lim.amplitude()).norm() / lim.amplitude().norm()
    } else {
        let v = [u[0] * (-ph).exp() - lim.limit[0], u[1] * ph.exp() - lim.limit[1]];
        (v[0].norm_sqr() + v[1].norm_sqr()).sqrt() / (lim.limit[0].norm_sqr() + lim.limit[1].norm_sqr()).sqrt()
    };
    Ok((d, direct.max_ratio))
}
