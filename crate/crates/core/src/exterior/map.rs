use std::sync::Arc;

use nalgebra::DMatrix;

use super::domain::ChartDomain;
use super::scalar::Scalar;
use crate::error::{Error, Result};

pub type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
pub type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// How a [`SmoothMap`] produces its Jacobian.
#[derive(Clone)]
pub enum JacobianStrategy {
    Analytic(Arc<MatrixFn>),
    CentralDifference { step: f64 },
}

impl std::fmt::Debug for JacobianStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            JacobianStrategy::Analytic(_) => write!(f, "Analytic"),
            JacobianStrategy::CentralDifference { step } => write!(f, "CentralDifference({step})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum MapKind {
    General,
    Identity,
    Constant,
}

/// A smooth map from a chart domain into `R^target_dim`.
#[derive(Clone)]
pub struct SmoothMap {
    source: ChartDomain,
    target_dim: usize,
    value: Arc<VectorFn>,
    jacobian: JacobianStrategy,
    kind: MapKind,
}

impl std::fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothMap")
            .field("source", &self.source)
            .field("target_dim", &self.target_dim)
            .field("jacobian", &self.jacobian)
            .field("kind", &self.kind)
            .finish()
    }
}

impl SmoothMap {
    pub fn new<F>(
        source: ChartDomain,
        target_dim: usize,
        value: F,
        jacobian: JacobianStrategy,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if target_dim == 0 {
            return Err(Error::DimensionMismatch("target dimension must be positive".into()));
        }
        if let JacobianStrategy::CentralDifference { step } = jacobian {
            if !(step > 0.0) {
                return Err(Error::InvalidParameter(format!("difference step {step} must be > 0")));
            }
        }
        Ok(SmoothMap { source, target_dim, value: Arc::new(value), jacobian, kind: MapKind::General })
    }

    pub fn analytic<F, J>(source: ChartDomain, target_dim: usize, value: F, jacobian: J) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::new(source, target_dim, value, JacobianStrategy::Analytic(Arc::new(jacobian)))
    }

    pub fn differenced<F>(source: ChartDomain, target_dim: usize, value: F, step: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::new(source, target_dim, value, JacobianStrategy::CentralDifference { step })
    }

    pub fn identity(domain: &ChartDomain) -> Self {
        let n = domain.dim();
        SmoothMap {
            source: domain.clone(),
            target_dim: n,
            value: Arc::new(|x: &[f64]| x.to_vec()),
            jacobian: JacobianStrategy::Analytic(Arc::new(move |_| DMatrix::identity(n, n))),
            kind: MapKind::Identity,
        }
    }

    pub fn constant(source: &ChartDomain, point: Vec<f64>) -> Self {
        let (m, s) = (point.len(), source.dim());
        SmoothMap {
            source: source.clone(),
            target_dim: m,
            value: Arc::new(move |_| point.clone()),
            jacobian: JacobianStrategy::Analytic(Arc::new(move |_| DMatrix::zeros(m, s))),
            kind: MapKind::Constant,
        }
    }

    /// Affine map `x ↦ offset + A x`.
    pub fn affine(source: &ChartDomain, offset: Vec<f64>, linear: DMatrix<f64>) -> Result<Self> {
        if linear.nrows() != offset.len() || linear.ncols() != source.dim() {
            return Err(Error::DimensionMismatch(format!(
                "affine map {}x{} with offset {} on a {}-dim source",
                linear.nrows(),
                linear.ncols(),
                offset.len(),
                source.dim()
            )));
        }
        let a = linear.clone();
        Self::analytic(
            source.clone(),
            offset.len(),
            move |x| {
                let mut y = offset.clone();
                for (i, yi) in y.iter_mut().enumerate() {
                    for (j, xj) in x.iter().enumerate() {
                        *yi += a[(i, j)] * xj;
                    }
                }
                y
            },
            move |_| linear.clone(),
        )
    }

    pub fn source(&self) -> &ChartDomain {
        &self.source
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn strategy(&self) -> &JacobianStrategy {
        &self.jacobian
    }

    pub fn is_identity(&self) -> bool {
        self.kind == MapKind::Identity
    }

    pub fn is_constant(&self) -> bool {
        self.kind == MapKind::Constant
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.value)(&self.source.wrap(x))
    }

    /// `target_dim × source_dim` Jacobian at `x`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.jacobian {
            JacobianStrategy::Analytic(j) => j(&self.source.wrap(x)),
            JacobianStrategy::CentralDifference { step } => {
                let n = self.source.dim();
                let mut jac = DMatrix::zeros(self.target_dim, n);
                let mut p = x.to_vec();
                for k in 0..n {
                    p[k] = x[k] + step;
                    let fp = self.eval(&p);
                    p[k] = x[k] - step;
                    let fm = self.eval(&p);
                    p[k] = x[k];
                    for i in 0..self.target_dim {
                        jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * step);
                    }
                }
                jac
            }
        }
    }

    /// Relative round-off level of Jacobian entries.
    pub fn jacobian_noise(&self) -> f64 {
        match self.jacobian {
            JacobianStrategy::Analytic(_) => f64::EPSILON,
            JacobianStrategy::CentralDifference { step } => f64::EPSILON / step,
        }
    }

    /// Component `i` as a 0-form evaluator; its gradient is row `i` of the
    /// Jacobian.
    pub fn component(&self, i: usize) -> Scalar {
        let value_map = self.clone();
        let grad_map = self.clone();
        Scalar::with_gradient_noise(
            move |x| value_map.eval(x)[i],
            move |x| grad_map.jacobian(x).row(i).iter().copied().collect(),
            f64::EPSILON,
            self.jacobian_noise(),
        )
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        if inner.target_dim != self.source.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose a map on a {}-dim chart after a map into R^{}",
                self.source.dim(),
                inner.target_dim
            )));
        }
        if inner.is_identity() {
            let mut m = self.clone();
            m.source = inner.source.clone();
            return Ok(m);
        }
        if self.is_identity() {
            return Ok(inner.clone());
        }
        let (outer_v, inner_v) = (self.clone(), inner.clone());
        let (outer_j, inner_j) = (self.clone(), inner.clone());
        let jacobian = JacobianStrategy::Analytic(Arc::new(move |x: &[f64]| {
            let y = inner_j.eval(x);
            outer_j.jacobian(&y) * inner_j.jacobian(x)
        }));
        let mut composed = SmoothMap::new(
            inner.source.clone(),
            self.target_dim,
            move |x| outer_v.eval(&inner_v.eval(x)),
            jacobian,
        )?;
        if inner.is_constant() {
            composed.kind = MapKind::Constant;
        }
        Ok(composed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> ChartDomain {
        ChartDomain::new(vec![(0.1, 2.0), (0.0, 6.0)], vec![false, false]).unwrap()
    }

    fn polar_differenced(step: f64) -> SmoothMap {
        SmoothMap::differenced(plane(), 2, |x| vec![x[0] * x[1].cos(), x[0] * x[1].sin()], step)
            .unwrap()
    }

    fn polar_jacobian(x: &[f64]) -> DMatrix<f64> {
        let (r, p) = (x[0], x[1]);
        DMatrix::from_row_slice(2, 2, &[p.cos(), -r * p.sin(), p.sin(), r * p.cos()])
    }

    #[test]
    fn difference_jacobian_converges_at_second_order() {
        let x = [1.3, 0.7];
        let exact = polar_jacobian(&x);
        let err = |h: f64| (polar_differenced(h).jacobian(&x) - &exact).amax();
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn composition_multiplies_jacobians() {
        let f = polar_differenced(1e-5);
        let g = SmoothMap::affine(&plane(), vec![0.5, 0.1], DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.2, 0.3]))
            .unwrap();
        let fg = f.compose(&g).unwrap();
        let x = [1.0, 2.0];
        let y = g.eval(&x);
        let expected = polar_jacobian(&y) * g.jacobian(&x);
        assert!((fg.jacobian(&x) - expected).amax() < 1e-9);
        assert_eq!(fg.eval(&x), f.eval(&y));
    }

    #[test]
    fn rejects_bad_step() {
        assert!(SmoothMap::differenced(plane(), 1, |x| vec![x[0]], 0.0).is_err());
    }
}
