//! Per-kind verifiers. Each one measures the quantities a scenario names in
//! its `expected` list and may add checks against built-in oracles.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{Polynomial, Provenance, Scenario};
use super::Check;
use crate::error::{Error, Result};
use crate::exterior::{pullback, ChartDomain, Fd, KForm, SmoothMap};
use crate::geometry::{
    builtin_geometry, frame_change, generic_connection, sample_grid, stabilize, Builtin, Connection, FramedGeometry, GeometryOptions,
    MatrixField, StabilizedGeometry,
};
use crate::indices::{index_by_degree, index_nondegenerate, sum_indices, winding_number};
use crate::quadrature::{boundary_integral, integrate, integrate_over_atlas, Integral, QuadratureSpec};
use crate::transgression::{euler_form, fiber_map, psi, section_from_ambient_field, sphere_parametrization, BundleSection, SphereBundleMap};

/// A measured quantity: value and, for quadratures, an error estimate.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Measured {
    pub value: f64,
    pub error_estimate: Option<f64>,
}

impl From<Integral> for Measured {
    fn from(i: Integral) -> Self {
        Measured { value: i.value, error_estimate: Some(i.error_estimate) }
    }
}

impl From<f64> for Measured {
    fn from(v: f64) -> Self {
        Measured { value: v, error_estimate: None }
    }
}

pub(crate) struct Context {
    pub spec: QuadratureSpec,
    pub fd: Fd,
}

impl Context {
    fn options(&self) -> GeometryOptions {
        GeometryOptions { fd: self.fd, ..GeometryOptions::default() }
    }

    fn geometry(&self, s: &Scenario) -> Result<FramedGeometry> {
        builtin_geometry(&Builtin::from_name(&s.geometry.name, &s.geometry.params)?, &self.options())
    }
}

pub(crate) struct Outcome {
    pub measured: BTreeMap<String, Measured>,
    pub extra: Vec<Check>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { measured: BTreeMap::new(), extra: Vec::new() }
    }
}

fn unknown(s: &Scenario, id: &str) -> Error {
    Error::Config(format!("{}: no quantity named {id} for this scenario kind", s.name))
}

fn integer_check(id: String, lhs: i64, rhs: i64, oracle: &str) -> Check {
    Check::new(id, lhs as f64, rhs as f64, 0.0, None, Provenance::Derived, Some(oracle.to_string()))
}

/// `∫ α*Ψ` over every chart of a section.
fn section_integral(section: &BundleSection, spec: &QuadratureSpec) -> Result<Integral> {
    let geom = section.geometry();
    let forms = section.bundle_maps().iter().zip(&geom.connections).map(|(m, c)| psi(m, c)).collect::<Result<Vec<_>>>()?;
    integrate_over_atlas(&forms, &geom.base, spec)
}

/// Centre of the first chart.
fn chart_center(geom: &FramedGeometry) -> Vec<f64> {
    geom.charts[0].domain.point_at(&vec![0.5; geom.base_dim])
}

fn fiber_integral(geom: &StabilizedGeometry, spec: &QuadratureSpec) -> Result<Integral> {
    let map = fiber_map(geom, 0, &chart_center(&geom.base))?;
    integrate(&psi(&map, &geom.connections[0])?, spec)
}

/// Euler forms of `ξ`, one per chart.
fn xi_euler_forms(geom: &FramedGeometry) -> Result<Vec<KForm>> {
    geom.charts.iter().map(|c| euler_form(c.connection.curvature())).collect()
}

pub(crate) fn index_theorem(s: &Scenario, ctx: &Context) -> Result<Outcome> {
    let geom = ctx.geometry(s)?;
    let field_spec = s.field.as_ref().ok_or_else(|| Error::Config(format!("{}: missing field", s.name)))?;
    let poly = Polynomial::from_spec(field_spec)?;
    if poly.dim() != geom.base_dim + 1 {
        return Err(Error::Config(format!("{}: field on R^{} for a boundary of dimension {}", s.name, poly.dim(), geom.base_dim)));
    }
    let field = poly.to_map()?;
    let stab = stabilize(&geom);
    let section = section_from_ambient_field(&stab, &field, ctx.fd)?;
    let integral = section_integral(&section, &ctx.spec)?;
    let zeros = s.isolated_zeros()?;
    let (total, per_zero) = sum_indices(&zeros, &field, 1.0, &ctx.spec)?;
    let n = geom.base_dim;
    let chi = if n % 2 == 1 { s.euler_characteristic.unwrap_or(0) } else { 0 };

    let mut out = Outcome::new();
    for e in &s.expected {
        let m = match e.id.as_str() {
            "index_sum" => Measured::from(total as f64),
            "boundary_integral" => integral.into(),
            "identity_residual" => Measured { value: total as f64 - chi as f64 - integral.value, error_estimate: Some(integral.error_estimate) },
            other => return Err(unknown(s, other)),
        };
        out.measured.insert(e.id.clone(), m);
    }
    if n == 1 {
        let w = winding_number(&field, &[0.0, 0.0], 1.0, 4096)?;
        out.extra.push(integer_check("index_sum_vs_winding_number".into(), total, w, "winding_number"));
    }
    for (k, (z, idx)) in zeros.iter().zip(&per_zero).enumerate() {
        let degree = index_by_degree(&field, &z.location, 0.5 * z.isolation_radius, &ctx.spec)?;
        let smaller = index_by_degree(&field, &z.location, 0.25 * z.isolation_radius, &ctx.spec)?;
        out.extra.push(integer_check(format!("zero{k}_degree_radius_halved"), smaller, degree, "degree_integral"));
        if let Ok(sign) = index_nondegenerate(z) {
            out.extra.push(integer_check(format!("zero{k}_jacobian_sign_vs_degree"), sign, degree, "degree_integral"));
        }
        debug_assert_eq!(idx.index, degree);
    }
    Ok(out)
}

pub(crate) fn fiber_normalization(s: &Scenario, ctx: &Context) -> Result<Outcome> {
    let stab = stabilize(&ctx.geometry(s)?);
    let mut out = Outcome::new();
    for e in &s.expected {
        match e.id.as_str() {
            "fiber_integral" => out.measured.insert(e.id.clone(), fiber_integral(&stab, &ctx.spec)?.into()),
            other => return Err(unknown(s, other)),
        };
    }
    Ok(out)
}

pub(crate) fn section_properties(s: &Scenario, ctx: &Context) -> Result<Outcome> {
    let geom = ctx.geometry(s)?;
    let stab = stabilize(&geom);
    let mut out = Outcome::new();
    for e in &s.expected {
        let m: Measured = match e.id.as_str() {
            "infinity_section" => section_integral(&BundleSection::infinity_section(stab.clone())?, &ctx.spec)?.into(),
            "zero_section" => section_integral(&BundleSection::zero_section(stab.clone())?, &ctx.spec)?.into(),
            "fiber_integral" => fiber_integral(&stab, &ctx.spec)?.into(),
            "half_euler_integral" => integrate_over_atlas(&xi_euler_forms(&geom)?, &geom, &ctx.spec)?.scale(0.5).into(),
            other => return Err(unknown(s, other)),
        };
        out.measured.insert(e.id.clone(), m);
    }
    Ok(out)
}

/// `Ψ + ½·π*E(Ω_ξ)` integrated over the ∞-section and over a fibre.
pub(crate) fn thom_shadow(s: &Scenario, ctx: &Context) -> Result<Outcome> {
    let geom = ctx.geometry(s)?;
    let stab = stabilize(&geom);
    let euler = xi_euler_forms(&geom)?;
    let combined = |map: &SphereBundleMap, chart: usize| -> Result<KForm> {
        let base = pullback(&euler[chart], map.base_map())?;
        psi(map, &stab.connections[chart])?.add(&base.scale(0.5))
    };
    let mut out = Outcome::new();
    for e in &s.expected {
        let m: Measured = match e.id.as_str() {
            "infinity_combination" => {
                let section = BundleSection::infinity_section(stab.clone())?;
                let forms = section.bundle_maps().iter().enumerate().map(|(k, m)| combined(m, k)).collect::<Result<Vec<_>>>()?;
                integrate_over_atlas(&forms, &geom, &ctx.spec)?.into()
            }
            "fiber_combination" => {
                let map = fiber_map(&stab, 0, &chart_center(&geom))?;
                integrate(&combined(&map, 0)?, &ctx.spec)?.into()
            }
            other => return Err(unknown(s, other)),
        };
        out.measured.insert(e.id.clone(), m);
    }
    Ok(out)
}

/// Largest deviation of `α*Ψ − c·E` from zero at about 10³ points of the base.
fn pointwise_deviation(section: &BundleSection, euler_weight: f64) -> Result<f64> {
    let geom = section.geometry();
    let charts = &geom.base.charts;
    let per_chart = 1000usize.div_ceil(charts.len());
    let per_axis = (per_chart as f64).powf(1.0 / geom.base.base_dim as f64).ceil() as usize;
    let mut worst: f64 = 0.0;
    for ((chart, map), conn) in charts.iter().zip(section.bundle_maps()).zip(&geom.connections) {
        let form = psi(&map, conn)?;
        let euler = if euler_weight != 0.0 { Some(euler_form(chart.connection.curvature())?) } else { None };
        for p in sample_grid(&chart.domain, per_axis) {
            let e = euler.as_ref().map_or(0.0, |f| euler_weight * f.top_coefficient(&p));
            worst = worst.max((form.top_coefficient(&p) - e).abs());
        }
    }
    Ok(worst)
}

/// Outward normal field `x` and the rotation field about the last axis,
/// pulled back pointwise.
pub(crate) fn special_cases(s: &Scenario, ctx: &Context) -> Result<Outcome> {
    let geom = ctx.geometry(s)?;
    let stab = stabilize(&geom);
    let dim = geom.base_dim + 1;
    let ambient = ChartDomain::new(vec![(-2.0, 2.0); dim], vec![false; dim])?;
    let mut out = Outcome::new();
    for e in &s.expected {
        let value = match e.id.as_str() {
            "outward_deviation" => {
                let section = section_from_ambient_field(&stab, &SmoothMap::identity(&ambient), ctx.fd)?;
                pointwise_deviation(&section, 0.5)?
            }
            "tangent_deviation" => {
                let mut rot = DMatrix::zeros(dim, dim);
                rot[(0, 1)] = -1.0;
                rot[(1, 0)] = 1.0;
                let field = SmoothMap::affine(&ambient, vec![0.0; dim], rot)?;
                pointwise_deviation(&section_from_ambient_field(&stab, &field, ctx.fd)?, 0.0)?
            }
            other => return Err(unknown(s, other)),
        };
        out.measured.insert(e.id.clone(), value.into());
    }
    Ok(out)
}

pub(crate) fn gauss_bonnet(s: &Scenario, ctx: &Context) -> Result<Outcome> {
    let geom = ctx.geometry(s)?;
    if geom.rank != 2 {
        return Err(Error::Config(format!("{}: Gauss-Bonnet needs a rank-2 bundle", s.name)));
    }
    let mut out = Outcome::new();
    for e in &s.expected {
        match e.id.as_str() {
            "gauss_bonnet" => {
                let forms: Vec<KForm> = geom.charts.iter().map(|c| c.connection.curvature().get(0, 1).clone()).collect();
                out.measured.insert(e.id.clone(), integrate_over_atlas(&forms, &geom, &ctx.spec)?.scale(1.0 / TAU).into())
            }
            other => return Err(unknown(s, other)),
        };
    }
    Ok(out)
}

/// A smooth function `Σ a·sin(k·x + φ)` with integer wave vectors, and its gradient.
#[derive(Clone)]
struct Waves(Vec<(f64, Vec<f64>, f64)>);

impl Waves {
    fn random(rng: &mut ChaCha8Rng, dim: usize, terms: usize, amplitude: f64) -> Self {
        Waves(
            (0..terms)
                .map(|_| {
                    let k = (0..dim).map(|_| rng.random_range(-2..=2) as f64).collect();
                    (amplitude * rng.random_range(-1.0..1.0), k, rng.random_range(0.0..TAU))
                })
                .collect(),
        )
    }

    fn phase(k: &[f64], x: &[f64], p: f64) -> f64 {
        k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + p
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|(a, k, p)| a * Self::phase(k, x, *p).sin()).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (a, k, p) in &self.0 {
            let c = a * Self::phase(k, x, *p).cos();
            g.iter_mut().zip(k).for_each(|(gi, ki)| *gi += c * ki);
        }
        g
    }
}

/// A random unit-vector map `x ↦ w(x)/|w(x)|` into `S²` with `w` bounded away from zero.
fn random_section(rng: &mut ChaCha8Rng, domain: &ChartDomain, amplitude: f64) -> Result<SmoothMap> {
    let dim = domain.dim();
    let waves: Vec<Waves> = (0..3).map(|_| Waves::random(rng, dim, 2, amplitude)).collect();
    let offset = [1.0 + amplitude * 4.0, 0.3, -0.2];
    let (a, b) = (waves.clone(), waves);
    let w = SmoothMap::analytic(
        domain.clone(),
        3,
        move |x| (0..3).map(|i| offset[i] + a[i].eval(x)).collect(),
        move |x| DMatrix::from_fn(3, dim, |i, j| b[i].gradient(x)[j]),
    )?;
    Ok(crate::transgression::normalize_map(w))
}

/// `diag(1, g(x))ᵀ u(x)` with exact derivative, for a rotation `g` by `angle`.
fn rotated_components(u: &SmoothMap, angle: &Waves) -> Result<SmoothMap> {
    let dim = u.source().dim();
    let (ua, ub, aa, ab) = (u.clone(), u.clone(), angle.clone(), angle.clone());
    let rotate = |t: f64, v: &[f64]| vec![v[0], t.cos() * v[1] + t.sin() * v[2], -t.sin() * v[1] + t.cos() * v[2]];
    SmoothMap::analytic(
        u.source().clone(),
        3,
        move |x| rotate(aa.eval(x), &ua.eval(x)),
        move |x| {
            let (t, v, dv, da) = (ab.eval(x), ub.eval(x), ub.jacobian(x), ab.gradient(x));
            let (c, s) = (t.cos(), t.sin());
            DMatrix::from_fn(3, dim, |i, j| match i {
                0 => dv[(0, j)],
                1 => c * dv[(1, j)] + s * dv[(2, j)] + da[j] * (-s * v[1] + c * v[2]),
                _ => -s * dv[(1, j)] + c * dv[(2, j)] + da[j] * (-c * v[1] - s * v[2]),
            })
        },
    )
}

/// `Ψ` for a fixed section before and after random `SO(2)` frame changes.
pub(crate) fn frame_equivariance(s: &Scenario, ctx: &Context) -> Result<Outcome> {
    let geom = ctx.geometry(s)?;
    if geom.rank != 2 {
        return Err(Error::Config(format!("{}: frame changes are drawn in SO(2)", s.name)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.sampling.seed);
    let amp = s.sampling.amplitude;
    let stab = stabilize(&geom);
    let sections: Vec<SmoothMap> = geom.charts.iter().map(|c| random_section(&mut rng, &c.domain, amp)).collect::<Result<_>>()?;
    let before: Vec<KForm> = sections
        .iter()
        .zip(&stab.connections)
        .map(|(u, conn)| psi(&SphereBundleMap::new(SmoothMap::identity(u.source()), u.clone())?, conn))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for _ in 0..s.sampling.count {
        let angles: Vec<Waves> = geom.charts.iter().map(|c| Waves::random(&mut rng, c.domain.dim(), 3, amp)).collect();
        let rotations: Vec<MatrixField> = angles
            .iter()
            .map(|a| {
                let a = a.clone();
                MatrixField::new(2, move |x| {
                    let t = a.eval(x);
                    DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
                })
            })
            .collect();
        let changed = stabilize(&frame_change(&geom, &rotations, ctx.fd)?);
        for (k, chart) in geom.charts.iter().enumerate() {
            let u = rotated_components(&sections[k], &angles[k])?;
            let after = psi(&SphereBundleMap::new(SmoothMap::identity(&chart.domain), u)?, &changed.connections[k])?;
            for _ in 0..50 {
                let t: Vec<f64> = (0..chart.domain.dim()).map(|_| rng.random_range(0.05..0.95)).collect();
                let p = chart.domain.point_at(&t);
                worst = worst.max((after.top_coefficient(&p) - before[k].top_coefficient(&p)).abs());
            }
        }
    }
    let mut out = Outcome::new();
    for e in &s.expected {
        match e.id.as_str() {
            "max_deviation" => out.measured.insert(e.id.clone(), worst.into()),
            other => return Err(unknown(s, other)),
        };
    }
    Ok(out)
}

/// The base connection of a cube scenario: a builtin's first chart, or a
/// random one on `[-1,1]^d` for `generic_connection [rank, base_dim]`.
fn cube_connection(s: &Scenario, ctx: &Context) -> Result<Connection> {
    if s.geometry.name == "generic_connection" {
        let p = &s.geometry.params;
        if p.len() != 2 || p.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(Error::Config(format!("{}: generic_connection takes [rank, base_dim]", s.name)));
        }
        return generic_connection(p[0] as usize, p[1] as usize, s.sampling.seed, s.sampling.amplitude, ctx.fd);
    }
    Ok(ctx.geometry(s)?.charts[0].connection.clone())
}

/// Random orthonormal `rows × cols` matrix.
fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    q.columns(0, cols).into_owned()
}

/// Worst `|∮_{∂C} Ψ (+ ∫_C E)| / scale^{n+1}` over random `(n+1)`-cubes in
/// the total space chart `base × S^n`.
fn cube_residuals(s: &Scenario, ctx: &Context, conn: &Connection, with_euler: bool) -> Result<Measured> {
    let n = conn.rank() - 1;
    let base = conn.domain().clone();
    let d = base.dim();
    let total_dim = d + n;
    let scale = s.sampling.scale;
    let reach = scale * ((n + 1) as f64).sqrt();
    let sphere = sphere_parametrization(n)?;
    let euler = if with_euler { Some(euler_form(conn.curvature())?) } else { None };
    let cube = ChartDomain::new(vec![(0.0, scale); n + 1], vec![false; n + 1])?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.sampling.seed);
    let norm = scale.powi(n as i32 + 1);
    let mut worst = Measured { value: 0.0, error_estimate: Some(0.0) };
    for _ in 0..s.sampling.count {
        let mut origin = Vec::with_capacity(total_dim);
        for a in 0..d {
            let (lo, hi) = (base.lo(a) + reach, base.hi(a) - reach);
            if !(lo < hi) {
                return Err(Error::Config(format!("{}: cubes of edge {scale} do not fit the base chart", s.name)));
            }
            origin.push(rng.random_range(lo..hi));
        }
        for a in 0..n {
            origin.push(if a + 1 < n { rng.random_range(0.4 + reach..PI - 0.4 - reach) } else { rng.random_range(0.0..TAU) });
        }
        let q = random_orthonormal(&mut rng, total_dim, n + 1);
        let base_map = SmoothMap::affine(&cube, origin[..d].to_vec(), q.rows(0, d).into_owned())?;
        let fiber_coords = SmoothMap::affine(&cube, origin[d..].to_vec(), q.rows(d, n).into_owned())?;
        let map = SphereBundleMap::new(base_map, sphere.compose(&fiber_coords)?)?;
        let mut r = boundary_integral(&psi(&map, conn)?, &ctx.spec)?;
        if let Some(e) = &euler {
            r = r.add(integrate(&pullback(e, map.base_map())?, &ctx.spec)?);
        }
        let (value, estimate) = (r.value.abs() / norm, r.error_estimate / norm);
        if value >= worst.value.abs() {
            worst.value = value;
        }
        worst.error_estimate = worst.error_estimate.map(|e| e.max(estimate));
    }
    Ok(worst)
}

pub(crate) fn cubes(s: &Scenario, ctx: &Context, full_connection: bool) -> Result<Outcome> {
    let conn = cube_connection(s, ctx)?;
    let conn = if full_connection {
        if conn.rank() % 2 != 0 {
            return Err(Error::Config(format!("{}: the transgression check needs an even-rank connection", s.name)));
        }
        conn
    } else {
        conn.stabilized()
    };
    let mut out = Outcome::new();
    for e in &s.expected {
        match e.id.as_str() {
            "max_normalized_residual" => out.measured.insert(e.id.clone(), cube_residuals(s, ctx, &conn, full_connection)?),
            other => return Err(unknown(s, other)),
        };
    }
    Ok(out)
}
