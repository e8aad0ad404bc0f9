//! Real potentials with a declared smoothness class.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A set of discontinuities. With `period`, `points` lie in `[0, period)` and repeat.
#[derive(Clone, Debug, PartialEq)]
pub struct BreakSet {
    pub points: Vec<f64>,
    pub period: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    Piecewise,
}

/// A callable `x ↦ V(x)` plus where it may jump.
#[derive(Clone)]
pub struct PotentialEvaluator {
    f: RealFn,
    breaks: Vec<BreakSet>,
}

impl core::fmt::Debug for PotentialEvaluator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PotentialEvaluator").field("breaks", &self.breaks).finish()
    }
}

fn strictly_increasing(b: &[f64]) -> bool {
    b.iter().all(|x| x.is_finite()) && b.windows(2).all(|w| w[0] < w[1])
}

impl PotentialEvaluator {
    pub fn smooth<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        PotentialEvaluator { f: Arc::new(f), breaks: Vec::new() }
    }

    pub fn zero() -> Self {
        Self::smooth(|_| 0.0)
    }

    pub fn piecewise<F>(f: F, breakpoints: Vec<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !strictly_increasing(&breakpoints) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing"));
        }
        Ok(PotentialEvaluator {
            f: Arc::new(f),
            breaks: alloc::vec![BreakSet { points: breakpoints, period: None }],
        })
    }

    /// Breakpoints `b + m·period` for every `b` in `cell` (a subset of `[0, period)`).
    pub fn periodic_piecewise<F>(f: F, cell: Vec<f64>, period: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(period > 0.0) {
            return Err(Error::InvalidInput("period must be positive"));
        }
        if !strictly_increasing(&cell) || cell.iter().any(|&b| b < 0.0 || b >= period) {
            return Err(Error::InvalidInput("cell breakpoints must increase within [0, period)"));
        }
        Ok(PotentialEvaluator {
            f: Arc::new(f),
            breaks: alloc::vec![BreakSet { points: cell, period: Some(period) }],
        })
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn smoothness(&self) -> Smoothness {
        if self.breaks.iter().all(|s| s.points.is_empty()) {
            Smoothness::Smooth
        } else {
            Smoothness::Piecewise
        }
    }

    pub fn break_sets(&self) -> &[BreakSet] {
        &self.breaks
    }

    pub fn function(&self) -> RealFn {
        self.f.clone()
    }

    /// Breakpoints strictly between `min(x0,x1)` and `max(x0,x1)`, ascending, deduplicated.
    pub fn breakpoints_in(&self, x0: f64, x1: f64) -> Vec<f64> {
        let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
        let mut out = Vec::new();
        for set in &self.breaks {
            match set.period {
                None => out.extend(set.points.iter().copied().filter(|&b| b > lo && b < hi)),
                Some(a) => {
                    if set.points.is_empty() {
                        continue;
                    }
                    let mut m = (lo / a).floor() - 1.0;
                    while m * a <= hi {
                        for &b in &set.points {
                            let x = m * a + b;
                            if x > lo && x < hi {
                                out.push(x);
                            }
                        }
                        m += 1.0;
                    }
                }
            }
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
        out
    }

    /// Pointwise sum; breakpoint sets are merged.
    pub fn sum(&self, other: &PotentialEvaluator) -> PotentialEvaluator {
        let (f, g) = (self.f.clone(), other.f.clone());
        let mut breaks = self.breaks.clone();
        breaks.extend(other.breaks.iter().cloned());
        PotentialEvaluator { f: Arc::new(move |x| f(x) + g(x)), breaks }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_breakpoints_repeat() {
        let v = PotentialEvaluator::periodic_piecewise(|_| 0.0, alloc::vec![0.0, 0.5], 1.0).unwrap();
        let b = v.breakpoints_in(0.0, 2.2);
        assert_eq!(b, alloc::vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(v.breakpoints_in(2.2, 0.0), b);
    }

    #[test]
    fn rejects_unsorted() {
        assert!(PotentialEvaluator::piecewise(|_| 0.0, alloc::vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn sum_merges() {
        let a = PotentialEvaluator::piecewise(|x| x, alloc::vec![1.0]).unwrap();
        let b = PotentialEvaluator::smooth(|x| 2.0 * x);
        let s = a.sum(&b);
        assert_eq!(s.value(2.0), 6.0);
        assert_eq!(s.breakpoints_in(0.0, 3.0), alloc::vec![1.0]);
        assert_eq!(s.smoothness(), Smoothness::Piecewise);
    }
}
