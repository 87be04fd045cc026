use nalgebra::DMatrix;
use proptest::prelude::*;
use transgress_core::harness::{load_scenario, scenario_names, Polynomial, ScenarioKind};
use transgress_core::indices::{index_by_degree, index_nondegenerate, winding_number};
use transgress_core::{QuadratureSpec, SmoothMap};

/// `(z − c)^d` as a map on the plane.
fn shifted_power(d: i32, c: [f64; 2]) -> SmoothMap {
    let field = Polynomial::complex_power(d).to_map().unwrap();
    let shift = SmoothMap::affine(field.source(), vec![-c[0], -c[1]], DMatrix::identity(2, 2)).unwrap();
    field.compose(&shift).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn degree_does_not_depend_on_the_radius(d in -3i32..=3, c in (-0.3..0.3f64, -0.3..0.3f64), r in 0.1..0.6f64) {
        prop_assume!(d != 0);
        let field = shifted_power(d, [c.0, c.1]);
        let spec = QuadratureSpec::default();
        let big = index_by_degree(&field, &[c.0, c.1], r, &spec).unwrap();
        let small = index_by_degree(&field, &[c.0, c.1], 0.5 * r, &spec).unwrap();
        prop_assert_eq!(big, small);
        prop_assert_eq!(big, d as i64);
    }

    #[test]
    fn degree_matches_the_winding_count(d in -3i32..=3, c in (-0.3..0.3f64, -0.3..0.3f64), r in 0.1..0.6f64) {
        prop_assume!(d != 0);
        let field = shifted_power(d, [c.0, c.1]);
        let degree = index_by_degree(&field, &[c.0, c.1], r, &QuadratureSpec::default()).unwrap();
        prop_assert_eq!(degree, winding_number(&field, &[c.0, c.1], r, 2048).unwrap());
    }
}

#[test]
fn jacobian_sign_agrees_with_degree_across_the_scenario_library() {
    let mut checked = 0;
    for name in scenario_names() {
        let s = load_scenario(name).unwrap();
        if s.kind != ScenarioKind::IndexTheorem {
            continue;
        }
        let field = Polynomial::from_spec(s.field.as_ref().unwrap()).unwrap().to_map().unwrap();
        for z in s.isolated_zeros().unwrap() {
            let Ok(sign) = index_nondegenerate(&z) else { continue };
            let degree = index_by_degree(&field, &z.location, 0.5 * z.isolation_radius, &QuadratureSpec::default()).unwrap();
            assert_eq!(sign, degree, "{name} at {:?}", z.location);
            checked += 1;
        }
    }
    assert!(checked >= 6, "only {checked} nondegenerate zeros in the library");
}

#[test]
fn declared_jacobians_match_the_fields() {
    for name in scenario_names() {
        let s = load_scenario(name).unwrap();
        let Some(spec) = s.field.as_ref() else { continue };
        let poly = Polynomial::from_spec(spec).unwrap();
        for z in s.isolated_zeros().unwrap() {
            assert!(poly.eval(&z.location).iter().all(|v| v.abs() < 1e-14), "{name}: not a zero at {:?}", z.location);
            if let Some(j) = &z.jacobian {
                assert!((j - poly.jacobian(&z.location)).amax() < 1e-14, "{name}: Jacobian at {:?}", z.location);
            }
        }
    }
}

#[test]
fn disk_scenarios_expect_the_winding_number() {
    for name in scenario_names().into_iter().filter(|n| n.starts_with("disk_winding")) {
        let s = load_scenario(name).unwrap();
        let field = Polynomial::from_spec(s.field.as_ref().unwrap()).unwrap().to_map().unwrap();
        let w = winding_number(&field, &[0.0, 0.0], 1.0, 4096).unwrap();
        let expect = |id: &str| s.expected.iter().find(|e| e.id == id).unwrap().value;
        assert_eq!(expect("index_sum"), w as f64, "{name}");
        assert_eq!(expect("boundary_integral"), (w - 1) as f64, "{name}");
    }
}
