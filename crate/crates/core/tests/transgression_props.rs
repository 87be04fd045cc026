use nalgebra::{DMatrix, Matrix3};
use proptest::prelude::*;
use transgress_core::geometry::{builtin_geometry, generic_connection, stabilize, GeometryOptions, MatrixField};
use transgress_core::quadrature::integrate;
use transgress_core::transgression::{fiber_map, normalize_map, psi, SphereBundleMap};
use transgress_core::{Builtin, ChartDomain, Connection, Fd, QuadratureSpec, SmoothMap};

fn rotation(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    let rz = |t: f64| Matrix3::new(t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0);
    let rx = |t: f64| Matrix3::new(1.0, 0.0, 0.0, 0.0, t.cos(), -t.sin(), 0.0, t.sin(), t.cos());
    let m = rz(a) * rx(b) * rz(c);
    DMatrix::from_row_slice(3, 3, m.transpose().as_slice())
}

/// `w(x) = w₀ + C·(x₀, x₁, x₀x₁)` normalised, with `w₀` large enough to stay away from zero.
fn section(domain: &ChartDomain, c: Vec<f64>) -> SmoothMap {
    let c2 = c.clone();
    let w = SmoothMap::analytic(
        domain.clone(),
        3,
        move |x| {
            let m = [x[0], x[1], x[0] * x[1]];
            let base = [2.0, 0.3, -0.4];
            (0..3).map(|i| base[i] + (0..3).map(|k| c[3 * i + k] * m[k]).sum::<f64>()).collect()
        },
        move |x| DMatrix::from_fn(3, 2, |i, j| c2[3 * i + j] + c2[3 * i + 2] * x[1 - j]),
    )
    .unwrap();
    normalize_map(w)
}

/// Components in the frame `e·g`: `g(x)ᵀ u(x)`.
fn transformed(u: &SmoothMap, g: &MatrixField) -> SmoothMap {
    let (u, g) = (u.clone(), g.clone());
    SmoothMap::differenced(u.source().clone(), 3, move |x| (g.eval(x).transpose() * nalgebra::DVector::from_vec(u.eval(x))).as_slice().to_vec(), 1e-5)
        .unwrap()
}

fn psi_top(u: &SmoothMap, conn: &Connection, x: &[f64]) -> f64 {
    psi(&SphereBundleMap::new(SmoothMap::identity(u.source()), u.clone()).unwrap(), conn).unwrap().top_coefficient(x)
}

fn max_change(conn: &Connection, u: &SmoothMap, g: &MatrixField) -> f64 {
    let changed = conn.gauge_transform(g, Fd::default()).unwrap();
    let v = transformed(u, g);
    let mut worst: f64 = 0.0;
    for x in [[0.1, 0.2], [-0.6, 0.5], [0.8, -0.9], [-0.3, -0.3]] {
        worst = worst.max((psi_top(u, conn, &x) - psi_top(&v, &changed, &x)).abs());
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn psi_is_invariant_under_constant_frame_changes(
        seed in 0u64..1000,
        c in prop::collection::vec(-0.5..0.5f64, 9),
        angles in (0.0..6.3f64, 0.0..3.1f64, 0.0..6.3f64),
    ) {
        let conn = generic_connection(3, 2, seed, 0.7, Fd::default()).unwrap();
        let u = section(conn.domain(), c);
        let r = rotation(angles.0, angles.1, angles.2);
        let g = MatrixField::new(3, move |_| r.clone());
        let dev = max_change(&conn, &u, &g);
        prop_assert!(dev < 1e-9, "deviation {dev}");
    }

    #[test]
    fn psi_is_invariant_under_smooth_frame_changes(
        seed in 0u64..1000,
        c in prop::collection::vec(-0.5..0.5f64, 9),
        k in prop::collection::vec(-1.5..1.5f64, 6),
    ) {
        let conn = generic_connection(3, 2, seed, 0.7, Fd::default()).unwrap();
        let u = section(conn.domain(), c);
        let g = MatrixField::new(3, move |x| rotation(k[0] + k[1] * x[0], k[2] * x[1] + k[3] * x[0] * x[1], k[4] + k[5] * x[1]));
        let dev = max_change(&conn, &u, &g);
        prop_assert!(dev < 1e-6, "deviation {dev}");
    }

    #[test]
    fn fiber_integral_is_one_over_every_base_point(theta in 0.2..2.9f64, phi in 0.0..6.2f64) {
        let geom = stabilize(&builtin_geometry(&Builtin::SphereRound { radius: 1.0 }, &GeometryOptions::default()).unwrap());
        let chart = if theta < std::f64::consts::FRAC_PI_2 { 0 } else { 1 };
        let domain = &geom.base.charts[chart].domain;
        let t = ((theta - domain.lo(0)) / domain.length(0)).clamp(0.0, 1.0);
        let p = domain.point_at(&[t, phi / std::f64::consts::TAU]);
        let map = fiber_map(&geom, chart, &p).unwrap();
        let form = psi(&map, &geom.connections[chart]).unwrap();
        let got = integrate(&form, &QuadratureSpec::default()).unwrap();
        prop_assert!((got.value - 1.0).abs() < 1e-8, "{}", got.value);
    }
}

#[test]
fn unit_tangent_field_on_the_flat_torus_pulls_psi_back_to_zero() {
    let geom = stabilize(&builtin_geometry(&Builtin::TorusFlat { r1: 1.0, r2: 1.5 }, &GeometryOptions::default()).unwrap());
    let domain = geom.base.charts[0].domain.clone();
    // unit tangent field turning with position, so Ψ is not trivially zero term by term
    let u = SmoothMap::analytic(
        domain.clone(),
        3,
        |x| vec![0.0, (x[0] + 2.0 * x[1]).cos(), (x[0] + 2.0 * x[1]).sin()],
        |x| {
            let (c, s) = ((x[0] + 2.0 * x[1]).cos(), (x[0] + 2.0 * x[1]).sin());
            DMatrix::from_row_slice(3, 2, &[0.0, 0.0, -s, -2.0 * s, c, 2.0 * c])
        },
    )
    .unwrap();
    let form = psi(&SphereBundleMap::new(SmoothMap::identity(&domain), u).unwrap(), &geom.connections[0]).unwrap();
    for t in [[0.1, 0.2], [0.5, 0.9], [0.77, 0.33]] {
        assert!(form.top_coefficient(&domain.point_at(&t)).abs() < 1e-15);
    }
}
