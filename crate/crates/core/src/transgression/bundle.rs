use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{ChartDomain, Fd, JacobianStrategy, SmoothMap};
use crate::geometry::{sample_grid, StabilizedGeometry};

/// Unit-norm tolerance for sphere-bundle maps.
const UNIT_TOL: f64 = 1e-12;
/// Sections are built only from fields at least this large on the sample.
const MIN_FIELD_NORM: f64 = 1e-6;

fn check_unit(u: &SmoothMap) -> Result<()> {
    let per_axis = match u.source().dim() {
        1 => 64,
        2 => 16,
        3 => 7,
        _ => 4,
    };
    for p in sample_grid(u.source(), per_axis) {
        let norm = u.eval(&p).iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit(p, norm));
        }
    }
    Ok(())
}

/// A map from a chart into the unit-sphere bundle of a rank `n+1` bundle:
/// a base point (coordinates in one geometry chart) and a unit vector in the
/// local frame there.
#[derive(Clone, Debug)]
pub struct SphereBundleMap {
    base_map: SmoothMap,
    u: SmoothMap,
}

impl SphereBundleMap {
    pub fn new(base_map: SmoothMap, u: SmoothMap) -> Result<Self> {
        if base_map.source() != u.source() {
            return Err(Error::IncompatibleDomains);
        }
        if u.target_dim() < 2 {
            return Err(Error::DimensionMismatch(format!("unit vector map into R^{} has no sphere to land in", u.target_dim())));
        }
        check_unit(&u)?;
        Ok(SphereBundleMap { base_map, u })
    }

    pub fn source(&self) -> &ChartDomain {
        self.u.source()
    }

    pub fn base_map(&self) -> &SmoothMap {
        &self.base_map
    }

    pub fn u(&self) -> &SmoothMap {
        &self.u
    }

    /// Fibre dimension `n` (the bundle `E` has rank `n+1`).
    pub fn fiber_dim(&self) -> usize {
        self.u.target_dim() - 1
    }

    /// Precompose with `inner` (for example a face inclusion).
    pub fn compose(&self, inner: &SmoothMap) -> Result<SphereBundleMap> {
        Ok(SphereBundleMap { base_map: self.base_map.compose(inner)?, u: self.u.compose(inner)? })
    }
}

/// `w / ‖w‖` with Jacobian `(I − uuᵀ) Dw / ‖w‖`.
pub fn normalize_map(w: SmoothMap) -> SmoothMap {
    let m = w.target_dim();
    let value_map = w.clone();
    let value = move |x: &[f64]| {
        let v = value_map.eval(x);
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.into_iter().map(|a| a / norm).collect::<Vec<f64>>()
    };
    let jac_map = w.clone();
    let jacobian = move |x: &[f64]| {
        let v = jac_map.eval(x);
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let u = nalgebra::DVector::from_iterator(m, v.iter().map(|a| a / norm));
        let proj = DMatrix::identity(m, m) - &u * u.transpose();
        proj * jac_map.jacobian(x) / norm
    };
    SmoothMap::new(w.source().clone(), m, value, JacobianStrategy::Analytic(Arc::new(jacobian)))
        .expect("target dimension unchanged")
}

/// Value and Jacobian of the unit `n`-sphere embedding
/// `S^n(χ, y) = (cos χ, sin χ · S^{n-1}(y))`, `S^1(φ) = (cos φ, sin φ)`.
fn sphere_point(n: usize, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    if n == 1 {
        let (s, c) = x[0].sin_cos();
        return (vec![c, s], DMatrix::from_row_slice(2, 1, &[-s, c]));
    }
    let (s, c) = x[0].sin_cos();
    let (inner, inner_jac) = sphere_point(n - 1, &x[1..]);
    let mut value = Vec::with_capacity(n + 1);
    value.push(c);
    value.extend(inner.iter().map(|v| s * v));
    let mut jac = DMatrix::zeros(n + 1, n);
    jac[(0, 0)] = -s;
    for r in 0..n {
        jac[(r + 1, 0)] = c * inner[r];
        for k in 0..n - 1 {
            jac[(r + 1, k + 1)] = s * inner_jac[(r, k)];
        }
    }
    (value, jac)
}

/// Positively oriented parametrisation of the unit sphere `S^n ⊂ R^{n+1}`
/// (as the boundary of the ball): polar angles in `[0, π]`, then a periodic
/// longitude. The first coordinate of the image is `cos` of the first angle.
pub fn sphere_parametrization(n: usize) -> Result<SmoothMap> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("sphere dimension must be >= 1, got {n}")));
    }
    let mut bounds = vec![(0.0, PI); n - 1];
    bounds.push((0.0, TAU));
    let mut periodic = vec![false; n - 1];
    periodic.push(true);
    let domain = ChartDomain::new(bounds, periodic)?;
    SmoothMap::analytic(domain, n + 1, move |x| sphere_point(n, x).0, move |x| sphere_point(n, x).1)
}

/// The inclusion of the fibre over `base_point` (coordinates in chart `chart`),
/// as a map from the sphere parametrisation.
pub fn fiber_map(geom: &StabilizedGeometry, chart: usize, base_point: &[f64]) -> Result<SphereBundleMap> {
    let charts = &geom.base.charts;
    let c = charts.get(chart).ok_or(Error::IndexOutOfRange(chart, charts.len()))?;
    if base_point.len() != c.domain.dim() {
        return Err(Error::DimensionMismatch(format!("base point of length {} in a {}-dim chart", base_point.len(), c.domain.dim())));
    }
    let u = sphere_parametrization(geom.base.rank)?;
    let base = SmoothMap::constant(u.source(), base_point.to_vec());
    SphereBundleMap::new(base, u)
}

/// A section of the sphere bundle of a stabilised geometry, one unit-vector
/// map per chart.
#[derive(Clone, Debug)]
pub struct BundleSection {
    geometry: StabilizedGeometry,
    u: Vec<SmoothMap>,
}

impl BundleSection {
    pub fn new(geometry: StabilizedGeometry, u: Vec<SmoothMap>) -> Result<Self> {
        if u.len() != geometry.base.charts.len() {
            return Err(Error::DimensionMismatch(format!("{} section maps for {} charts", u.len(), geometry.base.charts.len())));
        }
        for (chart, map) in geometry.base.charts.iter().zip(&u) {
            if map.source() != &chart.domain {
                return Err(Error::IncompatibleDomains);
            }
            if map.target_dim() != geometry.rank() {
                return Err(Error::DimensionMismatch(format!("section into R^{} of a rank-{} bundle", map.target_dim(), geometry.rank())));
            }
            check_unit(map)?;
        }
        Ok(BundleSection { geometry, u })
    }

    /// The section with the same frame components `v` on every chart.
    pub fn constant(geometry: StabilizedGeometry, v: Vec<f64>) -> Result<Self> {
        let u = geometry.base.charts.iter().map(|c| SmoothMap::constant(&c.domain, v.clone())).collect();
        Self::new(geometry, u)
    }

    /// `u = (1, 0, …, 0)`.
    pub fn zero_section(geometry: StabilizedGeometry) -> Result<Self> {
        let mut v = vec![0.0; geometry.rank()];
        v[0] = 1.0;
        Self::constant(geometry, v)
    }

    /// `u = (−1, 0, …, 0)`.
    pub fn infinity_section(geometry: StabilizedGeometry) -> Result<Self> {
        let mut v = vec![0.0; geometry.rank()];
        v[0] = -1.0;
        Self::constant(geometry, v)
    }

    pub fn geometry(&self) -> &StabilizedGeometry {
        &self.geometry
    }

    pub fn chart_maps(&self) -> &[SmoothMap] {
        &self.u
    }

    /// Per chart, the section as a sphere-bundle map over the identity.
    pub fn bundle_maps(&self) -> Vec<SphereBundleMap> {
        self.geometry
            .base
            .charts
            .iter()
            .zip(&self.u)
            .map(|(c, u)| SphereBundleMap { base_map: SmoothMap::identity(&c.domain), u: u.clone() })
            .collect()
    }
}

/// Section `(a, V_T)/‖(a, V_T)‖` from a field given per chart as
/// `(chart, x) ↦ (a, V_T in frame components)`, where `a` is the component
/// along the outward normal `ν`.
pub fn section_from_vector_field<F>(geom: &StabilizedGeometry, field: F, fd: Fd) -> Result<BundleSection>
where
    F: Fn(usize, &[f64]) -> Vec<f64> + Send + Sync + 'static,
{
    let field = Arc::new(field);
    let rank = geom.rank();
    let charts = &geom.base.charts;
    let per_axis = match geom.base.base_dim {
        1 => 1000 / charts.len(),
        2 => ((1000 / charts.len()) as f64).sqrt().ceil() as usize,
        d => ((1000 / charts.len()) as f64).powf(1.0 / d as f64).ceil() as usize,
    };
    let mut maps = Vec::with_capacity(charts.len());
    for (k, chart) in charts.iter().enumerate() {
        for p in sample_grid(&chart.domain, per_axis.max(2)) {
            let v = field(k, &p);
            if v.len() != rank {
                return Err(Error::DimensionMismatch(format!("field of length {} for a rank-{rank} bundle", v.len())));
            }
            if v.iter().map(|a| a * a).sum::<f64>().sqrt() < MIN_FIELD_NORM {
                return Err(Error::VanishingBoundaryField(p));
            }
        }
        let f = field.clone();
        let w = SmoothMap::differenced(chart.domain.clone(), rank, move |x| f(k, x), fd.step)?;
        maps.push(normalize_map(w));
    }
    BundleSection::new(geom.clone(), maps)
}

/// Section induced on a hypersurface base by an ambient vector field `V`
/// (a map `R^{n+1} → R^{n+1}`): `a = ⟨V, N⟩` with `N` the outward normal and
/// `V_T = (⟨V, e_i⟩)_i`.
pub fn section_from_ambient_field(geom: &StabilizedGeometry, field: &SmoothMap, fd: Fd) -> Result<BundleSection> {
    let rank = geom.rank();
    if field.target_dim() != rank || field.source().dim() != rank {
        return Err(Error::DimensionMismatch(format!(
            "ambient field R^{} -> R^{} on a rank-{rank} bundle",
            field.source().dim(),
            field.target_dim()
        )));
    }
    for chart in &geom.base.charts {
        if chart.embedding.is_none() || chart.frame.is_none() {
            return Err(Error::Unsupported(geom.base.name.clone(), "ambient fields need an embedded, framed base"));
        }
    }
    let charts: Arc<Vec<_>> = Arc::new(geom.base.charts.clone());
    let field = field.clone();
    section_from_vector_field(
        geom,
        move |k, x| {
            let chart = &charts[k];
            let y = chart.embedding.as_ref().expect("checked").eval(x);
            let v = field.eval(&y);
            let (frame, normal) = chart.ambient_frame(x).expect("checked");
            let dot = |a: &[f64]| a.iter().zip(&v).map(|(p, q)| p * q).sum::<f64>();
            std::iter::once(dot(&normal)).chain(frame.iter().map(|e| dot(e))).collect()
        },
        fd,
    )
}
