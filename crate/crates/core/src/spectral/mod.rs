//! Regular solutions, the coefficient `A_α(λ)`, the Weyl function and the
//! spectral density `ρ'_α = 1/(2π|W||A_α|²)`.

pub mod cauchy;
pub mod extract;
pub mod scan;
pub mod weyl;

pub use cauchy::{solve_phi, u_of, v_of, CauchySolution, CauchyStream};
pub use extract::{extract_a_band, extract_a_upper, AsymptoticCoefficient, ExtractOptions, UpperCoefficient, WindowRecord};
pub use scan::{
    density_point, density_scan, flag_subordinate, plan_grid, DensityContext, DensityOptions, DensityRecord, GridPlan,
    Refinement, ScanOutcome,
};
pub use weyl::{extrapolate_to_zero, oracle_density, spectral_density, weyl_m, weyl_m_oracle, wronskian_identity, OracleOptions, OracleValue};
