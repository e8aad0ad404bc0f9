use std::f64::consts::PI;

use wvn_core::periodic::{band_edges, quasimomentum_real, BandOptions, BandStructure};
use wvn_core::reduction::{critical_points, validate_frequency};
use wvn_core::spectral::{density_point, flag_subordinate, plan_grid, DensityContext, ScanOutcome};
use wvn_core::Error;

use crate::config::RunConfig;
use crate::output::{Cell, Table};
use crate::pool::parallel_map;

/// A failure after the configuration was accepted (exit code 1).
#[derive(Debug)]
pub struct RunError(pub String);

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError(e.to_string())
    }
}

fn bands_of(cfg: &RunConfig) -> Result<BandStructure, RunError> {
    let p = cfg.periodic().map_err(|e| RunError(e.to_string()))?;
    Ok(band_edges(&p, cfg.search_limit(), &BandOptions::default())?)
}

pub fn bands(cfg: &RunConfig) -> Result<Table, RunError> {
    let bs = bands_of(cfg)?;
    let mut t = Table::new(&["band", "lower", "upper", "width", "gap_above"]);
    for (i, b) in bs.bands.iter().enumerate() {
        let gap = bs.bands.get(i + 1).map(|n| n.lower - b.upper).unwrap_or(f64::NAN);
        t.push(vec![Cell::Int(b.index as i64), Cell::Num(b.lower), Cell::Num(b.upper), Cell::Num(b.width()), Cell::Num(gap)]);
    }
    Ok(t)
}

/// `None` (with a warning printed) when the frequency condition fails.
pub fn critical(cfg: &RunConfig) -> Result<Option<Table>, RunError> {
    let spec = cfg.operator().map_err(|e| RunError(e.to_string()))?;
    let Some(w) = &cfg.wvn else {
        return Err(RunError("critical points need a `wvn` section".into()));
    };
    let a = spec.period();
    let check = validate_frequency(a, w.omega);
    if !check.passes {
        eprintln!("warning: 2aω/π = {:.12} is an integer; there are no critical points", check.ratio);
        return Ok(None);
    }
    let opts = cfg.density_options().map_err(|e| RunError(e.to_string()))?;
    let tol = opts.bloch.ode;
    let bs = bands_of(cfg)?;
    let count = cfg.bands.min(bs.bands.len());
    let set = critical_points(&spec.periodic, &bs, w.omega, count, tol)?;
    let mut t = Table::new(&["band", "lambda_minus", "lambda_plus", "k_residual_minus", "k_residual_plus"]);
    for pair in &set.pairs {
        let n = pair.band as f64;
        let km = quasimomentum_real(&spec.periodic, pair.minus, pair.band, tol)?;
        let kp = quasimomentum_real(&spec.periodic, pair.plus, pair.band, tol)?;
        t.push(vec![
            Cell::Int(pair.band as i64),
            Cell::Num(pair.minus),
            Cell::Num(pair.plus),
            Cell::Num((km - PI * (n + set.frac)).abs()),
            Cell::Num((kp - PI * (n + 1.0 - set.frac)).abs()),
        ]);
    }
    Ok(Some(t))
}

pub const DENSITY_HEADER: [&str; 9] =
    ["lambda", "A_re", "A_im", "m_re", "m_im", "rho", "wronskian_residual", "m_residual", "reason"];

pub fn density(cfg: &RunConfig, workers: usize) -> Result<Table, RunError> {
    let Some(grid) = &cfg.grid else {
        return Err(RunError("density needs a `grid` section".into()));
    };
    let spec = cfg.operator().map_err(|e| RunError(e.to_string()))?;
    if spec.wvn.c != 0.0 && !spec.frequency_check().passes {
        eprintln!("warning: the frequency condition fails; every point will report it");
    }
    let opts = cfg.density_options().map_err(|e| RunError(e.to_string()))?;
    let ctx = DensityContext::new(spec, cfg.search_limit(), opts)?;
    let (refine, centres) = match cfg.refinement() {
        Some((r, c)) => (Some(r), c),
        None => (None, Vec::new()),
    };
    let plan = plan_grid(&ctx, grid.lo, grid.hi, grid.points, refine, &centres);
    let mut outcomes: Vec<ScanOutcome> =
        parallel_map(&plan.points, workers, |&x| density_point(&ctx, x).map_err(|e| (x, e)));
    flag_subordinate(&mut outcomes);

    let mut rows: Vec<(f64, Vec<Cell>)> = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => {
                let reason = if r.subordinate { "possible subordinate point" } else { "" };
                rows.push((
                    r.lambda,
                    vec![
                        Cell::Num(r.lambda),
                        Cell::Num(r.a.re),
                        Cell::Num(r.a.im),
                        Cell::Num(r.m.re),
                        Cell::Num(r.m.im),
                        Cell::Num(r.rho),
                        Cell::Num(r.wronskian_residual),
                        Cell::Num(r.m_residual),
                        Cell::Text(reason.into()),
                    ],
                ));
            }
            Err((x, e)) => rows.push((x, failed_row(x, &e.to_string()))),
        }
    }
    for (x, why) in plan.excluded {
        rows.push((x, failed_row(x, &format!("excluded: {why}"))));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut t = Table::new(&DENSITY_HEADER);
    for (_, row) in rows {
        t.push(row);
    }
    Ok(t)
}

fn failed_row(x: f64, why: &str) -> Vec<Cell> {
    let mut row = vec![Cell::Num(x)];
    row.extend((0..7).map(|_| Cell::Num(f64::NAN)));
    row.push(Cell::Text(why.to_string()));
    row
}
