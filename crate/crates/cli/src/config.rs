use std::fmt;
use std::path::Path;

use serde::Deserialize;

use wvn_core::ode::ToleranceSpec;
use wvn_core::periodic::PeriodicPotential;
use wvn_core::reduction::{DecayingTerm, OperatorSpec, WvNTerm};
use wvn_core::spectral::{DensityOptions, ExtractOptions, Refinement};

/// A configuration problem, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl fmt::Display) -> Self {
        ConfigError { field: field.to_string(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub periodic: PeriodicConfig,
    #[serde(default)]
    pub wvn: Option<WvnConfig>,
    #[serde(default)]
    pub q1: Q1Config,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub tolerances: Option<ToleranceConfig>,
    #[serde(default)]
    pub extract: ExtractConfig,
    /// Extract in the `e^{-Q}` frame when the oscillating term is present.
    #[serde(default = "default_true")]
    pub transformed: bool,
    #[serde(default)]
    pub gauge: f64,
    /// Upper end of the band search.
    #[serde(default)]
    pub lambda_max: Option<f64>,
    /// Number of bands for `critical`.
    #[serde(default = "default_band_count")]
    pub bands: usize,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_true() -> bool {
    true
}

fn default_band_count() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicConfig {
    pub period: f64,
    #[serde(default)]
    pub trig: Option<TrigConfig>,
    #[serde(default)]
    pub steps: Option<StepConfig>,
}

/// `q0 + Σ cos[j]·cos(2π(j+1)x/a) + sin[j]·sin(2π(j+1)x/a)`
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigConfig {
    #[serde(default)]
    pub q0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

/// `values[i]` on `[starts[i], starts[i+1])` within one period.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub starts: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WvnConfig {
    pub c: f64,
    pub omega: f64,
    #[serde(default)]
    pub delta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Q1Config {
    #[default]
    None,
    /// `amplitude·(x+1)^{-exponent}`
    Power { amplitude: f64, exponent: f64 },
    /// `amplitude` on `[0, end]`
    Step { amplitude: f64, end: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    pub window_periods: Option<f64>,
    pub samples_per_period: Option<usize>,
    pub first_start_periods: Option<f64>,
    pub min_windows: Option<usize>,
    pub x_cap_periods: Option<f64>,
    pub tol: Option<f64>,
    pub epsilon_margin: Option<f64>,
    pub edge_margin: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    #[serde(default)]
    pub refine: Option<RefineConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineConfig {
    pub radius: f64,
    pub levels: usize,
    /// Refinement centres; the critical points when empty.
    #[serde(default)]
    pub centres: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::new(&field_of(&e), e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.periodic()?;
        self.operator()?;
        self.density_options()?;
        if let Some(g) = &self.grid {
            if !(g.lo.is_finite() && g.hi.is_finite() && g.lo <= g.hi) {
                return Err(ConfigError::new("grid", "need finite lo <= hi"));
            }
            if g.points == 0 {
                return Err(ConfigError::new("grid.points", "must be positive"));
            }
            if let Some(r) = &g.refine {
                if !(r.radius > 0.0 && r.radius.is_finite()) || r.levels > 50 {
                    return Err(ConfigError::new("grid.refine", "need radius > 0 and levels <= 50"));
                }
            }
        }
        if let Some(l) = self.lambda_max {
            if !l.is_finite() {
                return Err(ConfigError::new("lambda_max", "must be finite"));
            }
        }
        if self.bands == 0 {
            return Err(ConfigError::new("bands", "must be positive"));
        }
        Ok(())
    }

    pub fn periodic(&self) -> Result<PeriodicPotential, ConfigError> {
        let p = &self.periodic;
        let a = p.period;
        let built = match (&p.trig, &p.steps) {
            (Some(_), Some(_)) => return Err(ConfigError::new("periodic", "give either `trig` or `steps`, not both")),
            (Some(t), None) => PeriodicPotential::trig(a, t.q0, t.cos.clone(), t.sin.clone()),
            (None, Some(s)) => PeriodicPotential::step_table(a, s.starts.clone(), s.values.clone()),
            (None, None) => PeriodicPotential::free(a),
        };
        built.map_err(|e| ConfigError::new("periodic", e))
    }

    pub fn wvn(&self) -> Result<WvNTerm, ConfigError> {
        match &self.wvn {
            None => Ok(WvNTerm::absent()),
            Some(w) => WvNTerm::new(w.c, w.omega, w.delta, w.gamma).map_err(|e| ConfigError::new("wvn", e)),
        }
    }

    pub fn q1(&self) -> Result<DecayingTerm, ConfigError> {
        let built = match self.q1 {
            Q1Config::None => Ok(DecayingTerm::zero()),
            Q1Config::Power { amplitude, exponent } => {
                DecayingTerm::power(move |x| amplitude * (x + 1.0).powf(-exponent), amplitude.abs(), exponent)
            }
            Q1Config::Step { amplitude, end } => DecayingTerm::compact(move |_| amplitude, end, amplitude.abs(), Vec::new()),
        };
        built.map_err(|e| ConfigError::new("q1", e))
    }

    pub fn operator(&self) -> Result<OperatorSpec, ConfigError> {
        OperatorSpec::new(self.periodic()?, self.wvn()?, self.q1()?, self.alpha).map_err(|e| ConfigError::new("alpha", e))
    }

    pub fn ode_tolerance(&self) -> Result<Option<ToleranceSpec>, ConfigError> {
        match self.tolerances {
            None => Ok(None),
            Some(t) => {
                let spec = ToleranceSpec::new(t.rtol, t.atol);
                spec.validate().map_err(|e| ConfigError::new("tolerances", e))?;
                Ok(Some(spec))
            }
        }
    }

    pub fn density_options(&self) -> Result<DensityOptions, ConfigError> {
        let mut opts = DensityOptions { transformed: self.transformed, gauge: self.gauge, ..DensityOptions::default() };
        if let Some(t) = self.ode_tolerance()? {
            opts.ode = t;
        }
        let e = &self.extract;
        let d = ExtractOptions::default();
        opts.extract = ExtractOptions {
            window_periods: e.window_periods.unwrap_or(d.window_periods),
            samples_per_period: e.samples_per_period.unwrap_or(d.samples_per_period),
            first_start_periods: e.first_start_periods.unwrap_or(d.first_start_periods),
            min_windows: e.min_windows.unwrap_or(d.min_windows),
            x_max_periods: d.x_max_periods,
            x_cap_periods: e.x_cap_periods.unwrap_or(d.x_cap_periods),
            tol: e.tol.unwrap_or(d.tol),
        };
        let x = &opts.extract;
        if !(x.window_periods > 0.0 && x.samples_per_period > 0 && x.first_start_periods > 0.0 && x.tol > 0.0) {
            return Err(ConfigError::new("extract", "window, sampling, start and tol must be positive"));
        }
        if x.min_windows < 2 {
            return Err(ConfigError::new("extract.min_windows", "need at least 2 windows"));
        }
        opts.epsilon_margin = e.epsilon_margin.unwrap_or(opts.epsilon_margin);
        opts.edge_margin = e.edge_margin.unwrap_or(opts.edge_margin);
        if !(opts.epsilon_margin >= 0.0 && opts.edge_margin >= 0.0) {
            return Err(ConfigError::new("extract", "margins must be non-negative"));
        }
        Ok(opts)
    }

    pub fn refinement(&self) -> Option<(Refinement, Vec<f64>)> {
        let r = self.grid.as_ref()?.refine.as_ref()?;
        Some((Refinement { radius: r.radius, levels: r.levels }, r.centres.clone()))
    }

    /// Band search limit: the configured value or just past the grid.
    pub fn search_limit(&self) -> f64 {
        if let Some(l) = self.lambda_max {
            return l;
        }
        let a = self.periodic.period;
        let base = (5.0 * std::f64::consts::PI / a).powi(2);
        match &self.grid {
            Some(g) => (g.hi + 0.25 * (g.hi - g.lo).abs() + 1.0).max(base),
            None => base,
        }
    }
}

/// Best guess at the JSON path of a serde error: the text inside the first
/// pair of backticks, or the root.
fn field_of(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    let mut parts = msg.split('`');
    match (parts.next(), parts.next()) {
        (Some(_), Some(name)) => name.to_string(),
        _ => format!("<root> line {} column {}", e.line(), e.column()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_free_config() {
        let cfg = RunConfig::parse(r#"{"periodic": {"period": 1.0}}"#).unwrap();
        assert!(cfg.wvn.is_none());
        assert_eq!(cfg.operator().unwrap().period(), 1.0);
    }

    #[test]
    fn missing_field_is_named() {
        let err = RunConfig::parse(r#"{"periodic": {}}"#).unwrap_err();
        assert_eq!(err.field, "period");
        let err = RunConfig::parse(r#"{"periodic": {"period": 1.0}, "wvn": {"c": 1, "omega": 1}}"#).unwrap_err();
        assert_eq!(err.field, "gamma");
    }

    #[test]
    fn semantic_errors_are_named() {
        let err = RunConfig::parse(r#"{"periodic": {"period": -1.0}}"#).unwrap_err();
        assert_eq!(err.field, "periodic");
        let err =
            RunConfig::parse(r#"{"periodic": {"period": 1.0}, "wvn": {"c": 1, "omega": 1, "gamma": 0.3}}"#).unwrap_err();
        assert_eq!(err.field, "wvn");
        let err = RunConfig::parse(r#"{"periodic": {"period": 1.0}, "tolerances": {"rtol": -1, "atol": 1}}"#).unwrap_err();
        assert_eq!(err.field, "tolerances");
    }

    #[test]
    fn q1_kinds() {
        let cfg = RunConfig::parse(r#"{"periodic": {"period": 1.0}, "q1": {"kind": "power", "amplitude": 0.5, "exponent": 2}}"#)
            .unwrap();
        assert!((cfg.q1().unwrap().value(1.0) - 0.125).abs() < 1e-15);
        let err =
            RunConfig::parse(r#"{"periodic": {"period": 1.0}, "q1": {"kind": "power", "amplitude": 0.5, "exponent": 1}}"#)
                .unwrap_err();
        assert_eq!(err.field, "q1");
    }
}
