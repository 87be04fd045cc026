use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed coordinate box, some of whose axes may be periodic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    bounds: Vec<(f64, f64)>,
    periodic: Vec<bool>,
}

impl ChartDomain {
    pub fn new(bounds: Vec<(f64, f64)>, periodic: Vec<bool>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        if bounds.len() != periodic.len() {
            return Err(Error::InvalidDomain(format!(
                "{} bounds but {} periodic flags",
                bounds.len(),
                periodic.len()
            )));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidDomain(format!(
                    "axis {i} has empty interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(ChartDomain { bounds, periodic })
    }

    /// The unit cube `[0,1]^dim`.
    pub fn unit_cube(dim: usize) -> Result<Self> {
        Self::new(vec![(0.0, 1.0); dim], vec![false; dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.bounds[axis].0
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.bounds[axis].1
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.bounds[axis].1 - self.bounds[axis].0
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.length(a)).product()
    }

    /// Same box with axis `axis` restricted to `[lo, hi]` (and made non-periodic).
    pub fn with_axis(&self, axis: usize, lo: f64, hi: f64) -> Result<Self> {
        let mut bounds = self.bounds.clone();
        let mut periodic = self.periodic.clone();
        bounds[axis] = (lo, hi);
        periodic[axis] = false;
        Self::new(bounds, periodic)
    }

    /// Reduce periodic coordinates into `[lo, hi)`.
    #[inline]
    pub fn wrap<'a>(&self, x: &'a [f64]) -> Cow<'a, [f64]> {
        let needs = self.periodic.iter().zip(&self.bounds).zip(x).any(|((&p, &(lo, hi)), &v)| {
            p && !(lo..hi).contains(&v)
        });
        if !needs {
            return Cow::Borrowed(x);
        }
        let mut y = x.to_vec();
        for (i, v) in y.iter_mut().enumerate() {
            if self.periodic[i] {
                let (lo, hi) = self.bounds[i];
                *v = lo + (*v - lo).rem_euclid(hi - lo);
            }
        }
        Cow::Owned(y)
    }

    /// Point at fractional position `t ∈ [0,1]^dim`.
    pub fn point_at(&self, t: &[f64]) -> Vec<f64> {
        self.bounds.iter().zip(t).map(|(&(lo, hi), &s)| lo + s * (hi - lo)).collect()
    }

    /// Whether the interiors of two boxes intersect.
    pub fn interiors_overlap(&self, other: &ChartDomain) -> bool {
        self.dim() == other.dim()
            && self
                .bounds
                .iter()
                .zip(&other.bounds)
                .all(|(&(a0, a1), &(b0, b1))| a0.max(b0) < a1.min(b1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn rejects_empty_axes() {
        assert!(ChartDomain::new(vec![(1.0, 1.0)], vec![false]).is_err());
        assert!(ChartDomain::new(vec![], vec![]).is_err());
        assert!(ChartDomain::new(vec![(0.0, 1.0)], vec![false, true]).is_err());
    }

    #[test]
    fn wraps_periodic_axes_only() {
        let d = ChartDomain::new(vec![(0.0, 1.0), (0.0, TAU)], vec![false, true]).unwrap();
        let w = d.wrap(&[1.5, TAU + 0.25]);
        assert_eq!(w[0], 1.5);
        assert!((w[1] - 0.25).abs() < 1e-14);
        let w = d.wrap(&[0.5, -0.25]);
        assert!((w[1] - (TAU - 0.25)).abs() < 1e-14);
        assert!(matches!(d.wrap(&[0.5, 1.0]), Cow::Borrowed(_)));
    }

    #[test]
    fn overlap_detection() {
        let a = ChartDomain::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![false; 2]).unwrap();
        let b = ChartDomain::new(vec![(1.0, 2.0), (0.0, 1.0)], vec![false; 2]).unwrap();
        let c = ChartDomain::new(vec![(0.5, 2.0), (0.0, 1.0)], vec![false; 2]).unwrap();
        assert!(!a.interiors_overlap(&b));
        assert!(a.interiors_overlap(&c));
    }
}
