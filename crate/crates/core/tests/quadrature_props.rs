use nalgebra::DMatrix;
use proptest::prelude::*;
use transgress_core::exterior::pullback;
use transgress_core::quadrature::integrate;
use transgress_core::{ChartDomain, KForm, QuadratureSpec, Scalar, SmoothMap};

fn box_domain(lo: f64, hi: f64) -> ChartDomain {
    ChartDomain::new(vec![(lo, hi), (lo + 0.5, hi + 0.25)], vec![false; 2]).unwrap()
}

/// `exp(a·x) cos(b·y + c)` as a top form.
fn smooth_top(domain: &ChartDomain, a: f64, b: f64, c: f64) -> KForm {
    KForm::top(domain, Scalar::from_fn(move |x| (a * x[0]).exp() * (b * x[1] + c).cos()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn halving_cells_cuts_the_estimate_fourfold(a in -2.0..2.0f64, b in 0.5..3.0f64, c in 0.0..6.0f64, k in 1usize..4) {
        let domain = box_domain(-1.0, 1.0);
        let form = smooth_top(&domain, a, b, c);
        let coarse = integrate(&form, &QuadratureSpec::new(4, k).unwrap()).unwrap();
        let fine = integrate(&form, &QuadratureSpec::new(4, 2 * k).unwrap()).unwrap();
        // skip integrands whose estimate is already at round-off
        prop_assume!(coarse.error_estimate > 1e-11);
        prop_assert!(fine.error_estimate * 4.0 <= coarse.error_estimate, "{} then {}", coarse.error_estimate, fine.error_estimate);
    }

    #[test]
    fn reversing_an_axis_flips_the_sign(a in -2.0..2.0f64, b in 0.5..3.0f64, c in 0.0..6.0f64, order in 2usize..30) {
        let domain = box_domain(-0.5, 1.5);
        let form = smooth_top(&domain, a, b, c);
        let (lo, hi) = (domain.lo(0), domain.hi(0));
        let flip = SmoothMap::affine(&domain, vec![lo + hi, 0.0], DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0])).unwrap();
        let spec = QuadratureSpec::new(order, 1).unwrap();
        let direct = integrate(&form, &spec).unwrap().value;
        let flipped = integrate(&pullback(&form, &flip).unwrap(), &spec).unwrap().value;
        prop_assert!((direct + flipped).abs() <= 8.0 * f64::EPSILON * (1.0 + direct.abs()), "{direct} vs {flipped}");
    }
}

#[test]
fn default_rule_exhausts_double_precision_on_analytic_integrands() {
    let domain = box_domain(-1.0, 1.0);
    let form = smooth_top(&domain, 1.3, 2.0, 0.4);
    let got = integrate(&form, &QuadratureSpec::default()).unwrap();
    // ∫ e^{ax} dx · ∫ cos(by + c) dy in closed form
    let (a, b, c) = (1.3f64, 2.0f64, 0.4f64);
    let ix = (a.exp() - (-a).exp()) / a;
    let iy = ((b * 1.25 + c).sin() - (b * -0.5 + c).sin()) / b;
    assert!((got.value - ix * iy).abs() < 1e-13, "{} vs {}", got.value, ix * iy);
    assert!(got.error_estimate < 1e-12);
}
