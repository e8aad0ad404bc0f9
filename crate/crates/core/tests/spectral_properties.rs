use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use wvn_core::levinson::HorizonSchedule;
use wvn_core::ode::ToleranceSpec;
use wvn_core::periodic::{bloch_at, BlochOptions, PeriodicPotential};
use wvn_core::reduction::{build_levinson_system, build_q, lambda_for_k, DecayingTerm, LevinsonOptions, OperatorSpec, WvNTerm};
use wvn_core::spectral::{
    density_point, density_scan, extract_a_upper, extrapolate_to_zero, solve_phi, weyl_m_oracle, CauchyStream,
    DensityContext, DensityOptions, ExtractOptions, OracleOptions,
};

fn mathieu_spec() -> OperatorSpec {
    let p = PeriodicPotential::trig(PI, 0.0, vec![2.0], vec![]).unwrap();
    OperatorSpec::new(p, WvNTerm::new(1.0, 0.8, 0.0, 0.9).unwrap(), DecayingTerm::zero(), 0.0).unwrap()
}

fn free_spec(alpha: f64) -> OperatorSpec {
    OperatorSpec::new(PeriodicPotential::free(1.0).unwrap(), WvNTerm::absent(), DecayingTerm::zero(), alpha).unwrap()
}

#[test]
fn free_dirichlet_coefficients() {
    let ctx = DensityContext::new(free_spec(0.0), 20.0, DensityOptions::default()).unwrap();
    for lambda in [0.7, 4.0, 15.0] {
        let r = density_point(&ctx, lambda).unwrap();
        let s = lambda.sqrt();
        // sin(√λx)/√λ = (e^{i√λx} - e^{-i√λx})/(2i√λ)
        assert!((r.a - C64::new(0.0, 0.5 / s)).norm() < 1e-9, "{}", r.a);
        assert!((r.a_shift - 0.5).norm() < 1e-9);
        assert!((r.m - C64::new(0.0, s)).norm() < 1e-8);
        assert!(r.m_residual < 1e-9);
    }
}

#[test]
fn free_oracle_matches_closed_form() {
    let spec = free_spec(0.0);
    for z in [C64::new(2.0, 0.3), C64::new(5.0, 0.01)] {
        let m = weyl_m_oracle(&spec, z, 1, &OracleOptions::default()).unwrap().m;
        let exact = C64::new(0.0, 1.0) * z.sqrt();
        assert!((m - exact).norm() < 1e-7 * exact.norm(), "{m} vs {exact}");
    }
}

#[test]
fn densities_are_positive_on_a_scan() {
    let ctx = DensityContext::new(mathieu_spec(), 10.0, DensityOptions::default()).unwrap();
    let b = ctx.bands.bands[1];
    let grid: Vec<f64> = (1..6).map(|j| b.lower + b.width() * (0.13 * j as f64 + 0.05)).collect();
    for r in density_scan(&ctx, &grid) {
        match r {
            Ok(r) => assert!(r.rho > 0.0 && r.rho.is_finite() && !r.subordinate),
            Err((x, e)) => assert!(ctx.exclusion(x).is_some() || matches!(e, wvn_core::Error::ResonanceProximity { .. }), "{x}: {e:?}"),
        }
    }
}

#[test]
fn band_and_upper_half_plane_coefficients_agree() {
    let spec = mathieu_spec();
    let opts = DensityOptions::default();
    let ctx = DensityContext::new(spec.clone(), 10.0, opts).unwrap();
    let lambda = lambda_for_k(&spec.periodic, &ctx.bands.bands[1], 1.5 * PI, opts.ode).unwrap();
    let band = density_point(&ctx, lambda).unwrap();
    let mut re = Vec::new();
    let mut im = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let z = C64::new(lambda, eps);
        let bloch = bloch_at(&spec.periodic, z, 1, &BlochOptions::default()).unwrap();
        let mut stream = CauchyStream::new(&spec, z, 0.0, opts.ode).unwrap();
        let up = extract_a_upper(&mut stream, &bloch, None, &ExtractOptions::default(), &HorizonSchedule::default(), opts.ode).unwrap();
        re.push((eps, up.limit.a.re));
        im.push((eps, up.limit.a.im));
    }
    let a = C64::new(extrapolate_to_zero(&re), extrapolate_to_zero(&im));
    assert!((a - band.a).norm() < 1e-3 * band.a.norm(), "{a} vs {}", band.a);
}

#[test]
fn integral_formula_matches_limit() {
    let spec = mathieu_spec();
    let opts = DensityOptions::default();
    let ctx = DensityContext::new(spec.clone(), 10.0, opts).unwrap();
    let mu = lambda_for_k(&spec.periodic, &ctx.bands.bands[1], 1.5 * PI, opts.ode).unwrap();
    let z = C64::new(mu, 1e-2);
    let anchor = bloch_at(&spec.periodic, C64::new(mu, 0.0), 1, &BlochOptions::default()).unwrap();
    let bloch = bloch_at(&spec.periodic, z, 1, &BlochOptions::default()).unwrap();
    let q = build_q(&bloch, &anchor, &spec.wvn, 1.0).unwrap();
    let sys = build_levinson_system(&spec, &q, &LevinsonOptions { estimate: false, ..Default::default() }).unwrap();
    let mut stream = CauchyStream::new(&spec, z, 0.0, opts.ode).unwrap();
    let tol = ToleranceSpec::new(1e-11, 1e-13);
    let up = extract_a_upper(&mut stream, &bloch, Some(&sys), &ExtractOptions::default(), &HorizonSchedule::default(), tol).unwrap();
    assert!(up.levinson.is_some());
    assert!(up.discrepancy < 1e-5, "{}", up.discrepancy);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn regular_solutions_have_unit_wronskian(alpha in 0.0..PI, lr in -0.4..8.0f64, li in 0.0..0.5f64) {
        let spec = mathieu_spec().with_alpha(alpha).unwrap();
        let sol = solve_phi(&spec, C64::new(lr, li), alpha, 60.0, ToleranceSpec::new(1e-12, 1e-14)).unwrap();
        for x in [0.0, 7.3, 31.0, 60.0] {
            prop_assert!((sol.wronskian(x) - 1.0).norm() < 1e-8 * sol.phi(x)[0].norm().max(1.0).powi(2));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn density_is_gauge_invariant(gauge in 0.0..(2.0 * PI), s in 0.2..0.8f64) {
        let spec = OperatorSpec::new(PeriodicPotential::free(1.0).unwrap(), WvNTerm::new(0.7, 1.3, 0.4, 0.95).unwrap(), DecayingTerm::zero(), 0.3).unwrap();
        let base = DensityContext::new(spec.clone(), 12.0, DensityOptions::default()).unwrap();
        let rot = DensityContext::new(spec, 12.0, DensityOptions { gauge, ..DensityOptions::default() }).unwrap();
        let lambda = 2.0 + 5.0 * s;
        if base.exclusion(lambda).is_none() {
            let (a, b) = (density_point(&base, lambda).unwrap(), density_point(&rot, lambda).unwrap());
            prop_assert!((a.rho - b.rho).abs() <= 1e-8 * a.rho);
        }
    }
}
