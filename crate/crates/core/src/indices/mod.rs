//! Poincaré-Hopf indices of declared isolated zeros.
//!
//! Nondegenerate zeros use the sign of the Jacobian determinant. The general
//! oracle is the degree of `V/‖V‖` on a small sphere, computed as the
//! integral of `Ψ` for the flat trivial bundle over a point, so it shares its
//! normalisation with the fibre integral.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{ChartDomain, SmoothMap};
use crate::geometry::{sample_grid, Connection};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::transgression::{normalize_map, psi, sphere_parametrization, SphereBundleMap};

const MIN_DET: f64 = 1e-8;
const MIN_NORM: f64 = 1e-8;
const DEGREE_RESIDUAL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct IsolatedZero {
    pub location: Vec<f64>,
    pub jacobian: Option<DMatrix<f64>>,
    pub isolation_radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMethod {
    JacobianSign,
    Degree,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroIndex {
    pub location: Vec<f64>,
    pub index: i64,
    pub method: IndexMethod,
}

/// `sign det DV(p)` for a nondegenerate zero.
pub fn index_nondegenerate(z: &IsolatedZero) -> Result<i64> {
    let jac = z
        .jacobian
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter(format!("zero at {:?} declares no Jacobian", z.location)))?;
    if jac.nrows() != z.location.len() || jac.ncols() != z.location.len() {
        return Err(Error::DimensionMismatch(format!("{}x{} Jacobian at a point of R^{}", jac.nrows(), jac.ncols(), z.location.len())));
    }
    let det = jac.determinant();
    if det.abs() <= MIN_DET {
        return Err(Error::SingularJacobian(det));
    }
    Ok(if det > 0.0 { 1 } else { -1 })
}

/// `p + r·S^{dim-1}` as a map from the sphere parametrisation.
fn small_sphere(center: &[f64], radius: f64) -> Result<SmoothMap> {
    let dim = center.len();
    let s = sphere_parametrization(dim - 1)?;
    let shift = SmoothMap::affine(&ChartDomain::new(vec![(-2.0, 2.0); dim], vec![false; dim])?, center.to_vec(), DMatrix::identity(dim, dim) * radius)?;
    shift.compose(&s)
}

/// Degree of `V/‖V‖` on the sphere of `radius` about `center`.
///
/// Returns the unrounded integral; see [`index_by_degree`].
pub fn degree_integral(field: &SmoothMap, center: &[f64], radius: f64, spec: &QuadratureSpec) -> Result<f64> {
    let dim = center.len();
    if dim < 2 || field.target_dim() != dim || field.source().dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "field R^{} -> R^{} at a point of R^{dim}",
            field.source().dim(),
            field.target_dim()
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
    }
    let sphere = small_sphere(center, radius)?;
    let w = field.compose(&sphere)?;
    for p in sample_grid(w.source(), if dim == 2 { 256 } else { 24 }) {
        if w.eval(&p).iter().map(|v| v * v).sum::<f64>().sqrt() <= MIN_NORM {
            return Err(Error::NotIsolated(center.to_vec()));
        }
    }
    let u = normalize_map(w);
    let point = ChartDomain::unit_cube(1)?;
    let base = SmoothMap::constant(u.source(), vec![0.5]);
    let map = SphereBundleMap::new(base, u)?;
    let form = psi(&map, &Connection::flat(&point, dim))?;
    Ok(integrate(&form, spec)?.value)
}

/// Degree of `V/‖V‖ : S^{dim-1} → S^{dim-1}` on a sphere about `center`,
/// rounded to the nearest integer.
pub fn index_by_degree(field: &SmoothMap, center: &[f64], radius: f64, spec: &QuadratureSpec) -> Result<i64> {
    let value = degree_integral(field, center, radius, spec)?;
    let rounded = value.round();
    let residual = (value - rounded).abs();
    if !(residual < DEGREE_RESIDUAL) {
        return Err(Error::DegreeNotResolved { value, residual });
    }
    Ok(rounded as i64)
}

/// Samples concentric spheres inside the isolation ball.
pub fn check_isolated(field: &SmoothMap, z: &IsolatedZero) -> Result<()> {
    let dim = z.location.len();
    if !(z.isolation_radius > 0.0) {
        return Err(Error::InvalidParameter(format!("isolation radius {} must be positive", z.isolation_radius)));
    }
    let s = sphere_parametrization(dim - 1)?;
    let directions: Vec<Vec<f64>> = sample_grid(s.source(), if dim == 2 { 64 } else { 12 }).iter().map(|p| s.eval(p)).collect();
    for k in 1..=8 {
        let r = z.isolation_radius * k as f64 / 8.0;
        for d in &directions {
            let x: Vec<f64> = z.location.iter().zip(d).map(|(c, e)| c + r * e).collect();
            if field.eval(&x).iter().map(|v| v * v).sum::<f64>().sqrt() <= MIN_NORM {
                return Err(Error::NotIsolated(z.location.clone()));
            }
        }
    }
    Ok(())
}

/// Index of one zero: the Jacobian sign when a nondegenerate Jacobian is
/// declared, the degree on a sphere of half the isolation radius otherwise.
pub fn index_of(field: &SmoothMap, z: &IsolatedZero, spec: &QuadratureSpec) -> Result<ZeroIndex> {
    let (index, method) = match index_nondegenerate(z) {
        Ok(i) => (i, IndexMethod::JacobianSign),
        Err(Error::SingularJacobian(_)) | Err(Error::InvalidParameter(_)) => {
            (index_by_degree(field, &z.location, 0.5 * z.isolation_radius, spec)?, IndexMethod::Degree)
        }
        Err(e) => return Err(e),
    };
    Ok(ZeroIndex { location: z.location.clone(), index, method })
}

/// `Σ ind_p V` over declared zeros inside the ball of radius `domain_radius`
/// about the origin.
pub fn sum_indices(zeros: &[IsolatedZero], field: &SmoothMap, domain_radius: f64, spec: &QuadratureSpec) -> Result<(i64, Vec<ZeroIndex>)> {
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    for (i, a) in zeros.iter().enumerate() {
        if a.location.len() != field.target_dim() {
            return Err(Error::DimensionMismatch(format!("zero at {:?} for a field into R^{}", a.location, field.target_dim())));
        }
        if norm(&a.location) + a.isolation_radius >= domain_radius {
            return Err(Error::InvalidParameter(format!("isolation ball around {:?} leaves the domain", a.location)));
        }
        for b in &zeros[i + 1..] {
            let gap: Vec<f64> = a.location.iter().zip(&b.location).map(|(p, q)| p - q).collect();
            if norm(&gap) < a.isolation_radius + b.isolation_radius {
                return Err(Error::OverlappingZeros(a.location.clone(), b.location.clone()));
            }
        }
    }
    let mut per_zero = Vec::with_capacity(zeros.len());
    for z in zeros {
        check_isolated(field, z)?;
        per_zero.push(index_of(field, z, spec)?);
    }
    Ok((per_zero.iter().map(|z| z.index).sum(), per_zero))
}

/// Winding number of a planar field around a circle by angle accumulation.
pub fn winding_number(field: &SmoothMap, center: &[f64], radius: f64, samples: usize) -> Result<i64> {
    if field.target_dim() != 2 || center.len() != 2 {
        return Err(Error::DimensionMismatch("winding numbers need a planar field".into()));
    }
    let angle = |k: usize| {
        let t = TAU * k as f64 / samples as f64;
        let v = field.eval(&[center[0] + radius * t.cos(), center[1] + radius * t.sin()]);
        v[1].atan2(v[0])
    };
    let mut total = 0.0;
    let mut prev = angle(0);
    for k in 1..=samples {
        let next = angle(k % samples);
        let mut step = next - prev;
        while step > std::f64::consts::PI {
            step -= TAU;
        }
        while step < -std::f64::consts::PI {
            step += TAU;
        }
        total += step;
        prev = next;
    }
    Ok((total / TAU).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> ChartDomain {
        ChartDomain::new(vec![(-2.0, 2.0); 2], vec![false; 2]).unwrap()
    }

    fn zero_at(location: Vec<f64>, jacobian: Option<DMatrix<f64>>) -> IsolatedZero {
        IsolatedZero { location, jacobian, isolation_radius: 0.2 }
    }

    #[test]
    fn nondegenerate_signs() {
        let id = zero_at(vec![0.0, 0.0], Some(DMatrix::identity(2, 2)));
        assert_eq!(index_nondegenerate(&id).unwrap(), 1);
        let saddle = zero_at(vec![0.0, 0.0], Some(DMatrix::from_diagonal(&nalgebra::dvector![1.0, -1.0])));
        assert_eq!(index_nondegenerate(&saddle).unwrap(), -1);
        for (c, expect) in [(0.7, 1), (-0.7, -1)] {
            let z = zero_at(vec![0.0; 3], Some(DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, 2.0 * 0.5 * c])));
            assert_eq!(index_nondegenerate(&z).unwrap(), expect);
        }
        let flat = zero_at(vec![0.0, 0.0], Some(DMatrix::zeros(2, 2)));
        assert!(matches!(index_nondegenerate(&flat), Err(Error::SingularJacobian(_))));
    }

    #[test]
    fn planar_degrees() {
        let z2 = SmoothMap::differenced(plane(), 2, |x| vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]], 1e-5).unwrap();
        assert_eq!(index_by_degree(&z2, &[0.0, 0.0], 0.3, &QuadratureSpec::default()).unwrap(), 2);
        assert_eq!(winding_number(&z2, &[0.0, 0.0], 0.3, 400).unwrap(), 2);
        let id = SmoothMap::identity(&plane());
        assert_eq!(index_by_degree(&id, &[0.0, 0.0], 0.5, &QuadratureSpec::default()).unwrap(), 1);
    }

    #[test]
    fn identity_in_three_dimensions() {
        let cube = ChartDomain::new(vec![(-2.0, 2.0); 3], vec![false; 3]).unwrap();
        let id = SmoothMap::identity(&cube);
        assert_eq!(index_by_degree(&id, &[0.0; 3], 0.5, &QuadratureSpec::default()).unwrap(), 1);
    }

    #[test]
    fn coarse_quadrature_is_reported_unresolved() {
        // a degree-3 field on a circle sampled with too few points
        let z3 = SmoothMap::differenced(plane(), 2, |x| vec![x[0].powi(3) - 3.0 * x[0] * x[1] * x[1], 3.0 * x[0] * x[0] * x[1] - x[1].powi(3)], 1e-5).unwrap();
        let coarse = QuadratureSpec { order: 2, subdivision: 1 };
        let r = index_by_degree(&z3, &[0.3, 0.0], 0.6, &coarse);
        assert!(matches!(r, Err(Error::DegreeNotResolved { .. })), "{r:?}");
    }

    #[test]
    fn two_zero_field_sums_to_zero() {
        let cube = ChartDomain::new(vec![(-2.0, 2.0); 3], vec![false; 3]).unwrap();
        let field = SmoothMap::differenced(cube, 3, |x| vec![x[0], x[1], x[2] * x[2] - 0.25], 1e-5).unwrap();
        let zeros = vec![
            IsolatedZero { location: vec![0.0, 0.0, 0.5], jacobian: None, isolation_radius: 0.3 },
            IsolatedZero { location: vec![0.0, 0.0, -0.5], jacobian: None, isolation_radius: 0.3 },
        ];
        let (total, per) = sum_indices(&zeros, &field, 1.0, &QuadratureSpec::default()).unwrap();
        assert_eq!(total, 0);
        assert_eq!(per[0].index, 1);
        assert_eq!(per[1].index, -1);
        assert!(per.iter().all(|z| z.method == IndexMethod::Degree));
    }

    #[test]
    fn overlapping_balls_are_rejected() {
        let id = SmoothMap::identity(&plane());
        let zeros = vec![zero_at(vec![0.0, 0.0], None), zero_at(vec![0.1, 0.0], None)];
        assert!(matches!(sum_indices(&zeros, &id, 1.0, &QuadratureSpec::default()), Err(Error::OverlappingZeros(..))));
    }
}
