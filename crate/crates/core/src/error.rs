use core::fmt;

/// Errors raised by the numerical layers.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// Step size fell below the configured minimum.
    StepUnderflow { x: f64, h: f64 },
    /// The state stopped being finite (overflow); the caller must rescale.
    NonFinite { x: f64 },
    /// Malformed input; the message names the offending field.
    InvalidInput(&'static str),
    /// `|trD| = 2` where a non-degenerate quasi-momentum was required.
    EdgeDegeneracy { lambda: f64 },
    /// The band index hint disagrees with the orientation of `k`.
    BranchMismatch { hint: usize, lambda: f64 },
    /// A target quasi-momentum lies outside the band's `k` range.
    TargetOutsideBand { band: usize, target: f64 },
    /// Monodromy eigenvectors are degenerate (band edge).
    EigenvectorDegeneracy,
    /// Fourier cutoff too small for the requested decay tolerance.
    CutoffTooSmall { cutoff: usize, tail: f64 },
    /// `2aω/π` is an integer (within 1e-9).
    FrequencyCondition { distance: f64 },
    /// A spectral point is too close to a resonance.
    ResonanceProximity { epsilon: f64 },
    /// `λ` is not in the neighbourhood `U(β, μ)` of the anchor.
    OutsideNeighbourhood,
    /// A growth bound was exceeded.
    BoundViolation { x: f64, norm: f64, bound: f64 },
    /// Limits did not settle over the horizon schedule.
    NonConvergence { last_change: f64 },
    /// A division by (numerically) zero.
    ZeroDenominator(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::StepUnderflow { x, h } => write!(f, "step size underflow at x={x} (h={h:e})"),
            Error::NonFinite { x } => write!(f, "non-finite state at x={x}"),
            Error::InvalidInput(what) => write!(f, "invalid input: {what}"),
            Error::EdgeDegeneracy { lambda } => write!(f, "band edge degeneracy at lambda={lambda}"),
            Error::BranchMismatch { hint, lambda } => {
                write!(f, "branch hint {hint} inconsistent at lambda={lambda}")
            }
            Error::TargetOutsideBand { band, target } => {
                write!(f, "target k={target} outside the k-range of band {band}")
            }
            Error::EigenvectorDegeneracy => write!(f, "degenerate monodromy eigenvectors"),
            Error::CutoffTooSmall { cutoff, tail } => {
                write!(f, "fourier cutoff {cutoff} too small (|c_N|={tail:e})")
            }
            Error::FrequencyCondition { distance } => {
                write!(f, "frequency condition violated (distance {distance:e})")
            }
            Error::ResonanceProximity { epsilon } => {
                write!(f, "too close to a resonance (epsilon={epsilon:e})")
            }
            Error::OutsideNeighbourhood => write!(f, "lambda outside U(beta, mu)"),
            Error::BoundViolation { x, norm, bound } => {
                write!(f, "growth bound violated at x={x}: {norm:e} > {bound:e}")
            }
            Error::NonConvergence { last_change } => {
                write!(f, "no convergence over the horizon schedule (last change {last_change:e})")
            }
            Error::ZeroDenominator(what) => write!(f, "zero denominator: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
