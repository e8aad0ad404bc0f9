//! Spectral analysis of half-line Schrodinger operators
//!
//! `L = -d²/dx² + q(x) + c·sin(2ωx+δ)/(x+1)^γ + q₁(x)` on `[0, ∞)` with a
//! periodic background `q`, a Wigner-von Neumann term and a summable `q₁`.
//!
//! The crate is `no_std` (it needs `alloc`). Layers, bottom up:
//!
//! - [`ode`]: adaptive Dormand-Prince integration with dense output
//! - [`periodic`]: monodromy, discriminant, quasi-momentum, band edges, Bloch pair
//! - [`reduction`]: resonance geometry, the Harris-Lutz transform `Q`, the
//!   Levinson-form system and oscillatory tail integrals
//! - [`levinson`]: growth bound and asymptotic coefficients of `u' = (diag(λ,-λ)+R)u`
//! - [`spectral`]: the coefficient `A_α(λ)`, the Weyl function and the spectral density
//!
//! The Wronskian is `W(f, g) = f'g - fg'` throughout, so for the free
//! operator `W(e^{i√λx}, e^{-i√λx}) = 2i√λ`.
#![no_std]
// `Float` supplies f64 math without std. Builds that pull std into the graph
// (tests, via dev-dependencies) also see the inherent methods, so those
// imports carry an allow.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod levinson;
pub mod linalg;
pub mod ode;
pub mod periodic;
pub mod potential;
pub mod quad;
pub mod reduction;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
