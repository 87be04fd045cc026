use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::connection::{Connection, MatrixField, MatrixForm};
use super::levi_civita::levi_civita_from_metric;
use super::{FramedGeometry, GeometryChart, PoleCap};
use crate::error::{Error, Result};
use crate::exterior::{ChartDomain, Fd, KForm, Scalar, SmoothMap};

/// Named base geometries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Builtin {
    /// Unit circle, `ξ = TS¹`, flat.
    CircleFlat,
    /// Round sphere, `ξ = TS²` with its Levi-Civita connection in closed form.
    SphereRound { radius: f64 },
    /// Flat torus `R²/(2πr₁Z × 2πr₂Z)`, `ξ` its tangent bundle.
    TorusFlat { r1: f64, r2: f64 },
    /// Ellipsoid surface on a six-face cube atlas, `ξ = TM` with a
    /// difference-quotient Levi-Civita connection.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Unit sphere with the trivial plane bundle `S² × R²`, flat.
    SphereTrivialPlane,
    /// Trivial flat rank-`rank` bundle over the cube `[-1,1]^base_dim`.
    Trivial { rank: usize, base_dim: usize },
}

impl Builtin {
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let want = |k: usize| -> Result<()> {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("geometry {name} takes {k} parameters, got {}", params.len())))
            }
        };
        let positive = |v: f64| -> Result<f64> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidParameter(format!("geometry {name} needs positive parameters, got {v}")))
            }
        };
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= 4.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("geometry {name} needs integer sizes in 1..=4, got {v}")))
            }
        };
        Ok(match name {
            "circle_flat" => {
                want(0)?;
                Builtin::CircleFlat
            }
            "sphere_round" => {
                if params.is_empty() {
                    Builtin::SphereRound { radius: 1.0 }
                } else {
                    want(1)?;
                    Builtin::SphereRound { radius: positive(params[0])? }
                }
            }
            "torus_flat" => {
                want(2)?;
                Builtin::TorusFlat { r1: positive(params[0])?, r2: positive(params[1])? }
            }
            "ellipsoid" => {
                want(3)?;
                Builtin::Ellipsoid { a: positive(params[0])?, b: positive(params[1])?, c: positive(params[2])? }
            }
            "sphere_trivial_plane" => {
                want(0)?;
                Builtin::SphereTrivialPlane
            }
            "trivial" => {
                want(2)?;
                Builtin::Trivial { rank: count(params[0])?, base_dim: count(params[1])? }
            }
            other => return Err(Error::InvalidParameter(format!("unknown geometry {other}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::CircleFlat => "circle_flat",
            Builtin::SphereRound { .. } => "sphere_round",
            Builtin::TorusFlat { .. } => "torus_flat",
            Builtin::Ellipsoid { .. } => "ellipsoid",
            Builtin::SphereTrivialPlane => "sphere_trivial_plane",
            Builtin::Trivial { .. } => "trivial",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryOptions {
    pub fd: Fd,
    /// Distance kept from coordinate poles by polar charts.
    pub pole_margin: f64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        GeometryOptions { fd: Fd::default(), pole_margin: 1e-3 }
    }
}

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(values))
}

/// Northern and southern colatitude/longitude charts, each stopping `margin`
/// short of its pole.
fn polar_charts(margin: f64) -> Result<Vec<(ChartDomain, PoleCap)>> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(Error::InvalidParameter(format!("pole margin {margin} must lie in (0, 0.5)")));
    }
    Ok(vec![
        (
            ChartDomain::new(vec![(margin, FRAC_PI_2), (0.0, TAU)], vec![false, true])?,
            PoleCap { axis: 0, at_upper: false, margin },
        ),
        (
            ChartDomain::new(vec![(FRAC_PI_2, PI - margin), (0.0, TAU)], vec![false, true])?,
            PoleCap { axis: 0, at_upper: true, margin },
        ),
    ])
}

/// Colatitude/longitude chart of the sphere of radius `r`.
fn polar_embedding(domain: &ChartDomain, r: f64) -> Result<SmoothMap> {
    SmoothMap::analytic(
        domain.clone(),
        3,
        move |x| {
            let (t, p) = (x[0], x[1]);
            vec![r * t.sin() * p.cos(), r * t.sin() * p.sin(), r * t.cos()]
        },
        move |x| {
            let (t, p) = (x[0], x[1]);
            DMatrix::from_row_slice(
                3,
                2,
                &[r * t.cos() * p.cos(), -r * t.sin() * p.sin(), r * t.cos() * p.sin(), r * t.sin() * p.cos(), -r * t.sin(), 0.0],
            )
        },
    )
}

/// Faces `(k, i, j, sign)` of the cube: outward normal `sign·e_k`, with the
/// tangent axes ordered so that `(normal, ∂s, ∂t)` is positively oriented.
const CUBE_FACES: [(usize, usize, usize, f64); 6] =
    [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0), (0, 2, 1, -1.0), (1, 0, 2, -1.0), (2, 1, 0, -1.0)];

/// Equiangular cube-face chart of the ellipsoid with semi-axes `axes`:
/// `(s, t) ↦ D·v/|v|` with `v = sign·e_k + tan s·e_i + tan t·e_j`.
fn cube_face_embedding(domain: &ChartDomain, face: (usize, usize, usize, f64), axes: [f64; 3]) -> Result<SmoothMap> {
    let (k, i, j, sign) = face;
    let direction = move |x: &[f64]| {
        let mut v = [0.0; 3];
        v[k] = sign;
        v[i] = x[0].tan();
        v[j] = x[1].tan();
        v
    };
    SmoothMap::analytic(
        domain.clone(),
        3,
        move |x| {
            let v = direction(x);
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            (0..3).map(|a| axes[a] * v[a] / r).collect()
        },
        move |x| {
            let v = direction(x);
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let mut dv = DMatrix::zeros(3, 2);
            dv[(i, 0)] = 1.0 / x[0].cos().powi(2);
            dv[(j, 1)] = 1.0 / x[1].cos().powi(2);
            let w = nalgebra::Vector3::new(v[0] / r, v[1] / r, v[2] / r);
            let proj = DMatrix::from_fn(3, 3, |p, q| (if p == q { 1.0 } else { 0.0 }) - w[p] * w[q]);
            let d = DMatrix::from_diagonal(&DVector::from_row_slice(&axes));
            d * proj * dv / r
        },
    )
}

/// Round-sphere connection `ω₁₂ = −cos t dφ` (independent of the radius).
fn round_sphere_connection(domain: &ChartDomain, fd: Fd) -> Result<Connection> {
    let w12 = KForm::from_coeffs(domain, 1, [(vec![1], Scalar::with_gradient(|x| -x[0].cos(), |x| vec![x[0].sin(), 0.0]))])?;
    Connection::from_omega(MatrixForm::antisymmetric(domain, 2, 1, vec![(0, 1, w12)])?, fd)
}

pub fn builtin_geometry(which: &Builtin, opts: &GeometryOptions) -> Result<FramedGeometry> {
    let fd = opts.fd;
    let geometry = match *which {
        Builtin::CircleFlat => {
            let domain = ChartDomain::new(vec![(0.0, TAU)], vec![true])?;
            let embedding = SmoothMap::analytic(
                domain.clone(),
                2,
                |x| vec![x[0].cos(), x[0].sin()],
                |x| DMatrix::from_row_slice(2, 1, &[-x[0].sin(), x[0].cos()]),
            )?;
            FramedGeometry {
                name: "circle_flat".into(),
                rank: 1,
                base_dim: 1,
                charts: vec![GeometryChart {
                    connection: Connection::flat(&domain, 1),
                    domain,
                    patch: 0,
                    pole_caps: vec![],
                    embedding: Some(embedding),
                    metric: Some(MatrixField::new(1, |_| diag(&[1.0]))),
                    frame: Some(MatrixField::new(1, |_| diag(&[1.0]))),
                }],
            }
        }
        Builtin::SphereRound { radius } => {
            let mut charts = Vec::new();
            for (domain, cap) in polar_charts(opts.pole_margin)? {
                charts.push(GeometryChart {
                    embedding: Some(polar_embedding(&domain, radius)?),
                    metric: Some(MatrixField::new(2, move |x| diag(&[radius * radius, (radius * x[0].sin()).powi(2)]))),
                    frame: Some(MatrixField::new(2, move |x| diag(&[1.0 / radius, 1.0 / (radius * x[0].sin())]))),
                    connection: round_sphere_connection(&domain, fd)?,
                    domain,
                    patch: 0,
                    pole_caps: vec![cap],
                });
            }
            FramedGeometry { name: "sphere_round".into(), rank: 2, base_dim: 2, charts }
        }
        Builtin::SphereTrivialPlane => {
            let mut charts = Vec::new();
            for (domain, cap) in polar_charts(opts.pole_margin)? {
                charts.push(GeometryChart {
                    embedding: Some(polar_embedding(&domain, 1.0)?),
                    metric: Some(MatrixField::new(2, |x| diag(&[1.0, x[0].sin().powi(2)]))),
                    frame: None,
                    connection: Connection::flat(&domain, 2),
                    domain,
                    patch: 0,
                    pole_caps: vec![cap],
                });
            }
            FramedGeometry { name: "sphere_trivial_plane".into(), rank: 2, base_dim: 2, charts }
        }
        Builtin::TorusFlat { r1, r2 } => {
            let domain = ChartDomain::new(vec![(0.0, TAU), (0.0, TAU)], vec![true, true])?;
            FramedGeometry {
                name: "torus_flat".into(),
                rank: 2,
                base_dim: 2,
                charts: vec![GeometryChart {
                    connection: Connection::flat(&domain, 2),
                    domain,
                    patch: 0,
                    pole_caps: vec![],
                    embedding: None,
                    metric: Some(MatrixField::new(2, move |_| diag(&[r1 * r1, r2 * r2]))),
                    frame: Some(MatrixField::new(2, move |_| diag(&[1.0 / r1, 1.0 / r2]))),
                }],
            }
        }
        Builtin::Ellipsoid { a, b, c } => {
            let mut charts = Vec::new();
            for (patch, face) in CUBE_FACES.iter().enumerate() {
                let domain = ChartDomain::new(vec![(-FRAC_PI_4, FRAC_PI_4); 2], vec![false; 2])?;
                let embedding = cube_face_embedding(&domain, *face, [a, b, c])?;
                let jac = embedding.clone();
                let metric = MatrixField::new(2, move |x| {
                    let j = jac.jacobian(x);
                    j.transpose() * j
                });
                let m = metric.clone();
                // Gram-Schmidt on the coordinate vectors; upper triangular with positive diagonal keeps the orientation
                let frame = MatrixField::new(2, move |x| {
                    let g = m.eval(x);
                    let (e, f, gg) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
                    let s = (gg - f * f / e).sqrt();
                    DMatrix::from_row_slice(2, 2, &[1.0 / e.sqrt(), -f / (e * s), 0.0, 1.0 / s])
                });
                let omega = levi_civita_from_metric(&metric, &domain, &frame, fd)?;
                charts.push(GeometryChart {
                    connection: Connection::from_omega(omega, fd)?,
                    embedding: Some(embedding),
                    metric: Some(metric),
                    frame: Some(frame),
                    domain,
                    patch,
                    pole_caps: vec![],
                });
            }
            FramedGeometry { name: "ellipsoid".into(), rank: 2, base_dim: 2, charts }
        }
        Builtin::Trivial { rank, base_dim } => {
            let domain = ChartDomain::new(vec![(-1.0, 1.0); base_dim], vec![false; base_dim])?;
            let frame = (rank == base_dim).then(|| MatrixField::new(rank, move |_| DMatrix::identity(rank, rank)));
            FramedGeometry {
                name: "trivial".into(),
                rank,
                base_dim,
                charts: vec![GeometryChart {
                    connection: Connection::flat(&domain, rank),
                    domain,
                    patch: 0,
                    pole_caps: vec![],
                    embedding: None,
                    metric: Some(MatrixField::new(base_dim, move |_| DMatrix::identity(base_dim, base_dim))),
                    frame,
                }],
            }
        }
    };
    geometry.validate_atlas()?;
    Ok(geometry)
}

/// A smooth `SO(rank)` connection on the trivial bundle over `[-1,1]^base_dim`
/// with random trigonometric coefficients (analytic gradients, so the
/// curvature carries no difference error).
pub fn generic_connection(rank: usize, base_dim: usize, seed: u64, amplitude: f64, fd: Fd) -> Result<Connection> {
    if rank < 2 || base_dim < 1 {
        return Err(Error::InvalidParameter(format!("generic connection needs rank >= 2 and a base, got {rank}, {base_dim}")));
    }
    let domain = ChartDomain::new(vec![(-1.0, 1.0); base_dim], vec![false; base_dim])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut upper = Vec::new();
    for i in 0..rank {
        for j in i + 1..rank {
            let mut coeffs = Vec::new();
            for mu in 0..base_dim {
                let waves: Vec<(f64, Vec<f64>, f64)> = (0..2)
                    .map(|_| {
                        let amp = rng.random_range(-amplitude..amplitude);
                        let k: Vec<f64> = (0..base_dim).map(|_| rng.random_range(-1.5..1.5)).collect();
                        (amp, k, rng.random_range(0.0..TAU))
                    })
                    .collect();
                let w2 = waves.clone();
                let phase = |k: &[f64], p: f64, x: &[f64]| k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + p;
                let s = Scalar::with_gradient(
                    move |x| waves.iter().map(|(a, k, p)| a * phase(k, *p, x).sin()).sum(),
                    move |x| {
                        let mut g = vec![0.0; x.len()];
                        for (a, k, p) in &w2 {
                            let c = a * phase(k, *p, x).cos();
                            for (gi, ki) in g.iter_mut().zip(k) {
                                *gi += c * ki;
                            }
                        }
                        g
                    },
                );
                coeffs.push((vec![mu], s));
            }
            upper.push((i, j, KForm::from_coeffs(&domain, 1, coeffs)?));
        }
    }
    Connection::from_omega(MatrixForm::antisymmetric(&domain, rank, 1, upper)?, fd)
}
