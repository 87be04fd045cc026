use std::collections::BTreeMap;
use std::sync::Arc;

use super::combinatorics::{det_small, increasing_subsets, is_increasing, sort_with_sign, MultiIndex};
use super::domain::ChartDomain;
use super::map::SmoothMap;
use super::scalar::{Fd, Scalar};
use crate::error::{Error, Result};

/// A differential form of fixed degree on a chart domain.
///
/// Coefficients are stored against increasing multi-indices; an absent index
/// means a zero coefficient and a form with no entries is the zero form.
/// Degrees above the chart dimension are allowed and always zero.
#[derive(Clone, Debug)]
pub struct KForm {
    domain: ChartDomain,
    degree: usize,
    coeffs: BTreeMap<MultiIndex, Scalar>,
}

impl KForm {
    pub fn zero(domain: &ChartDomain, degree: usize) -> Self {
        KForm { domain: domain.clone(), degree, coeffs: BTreeMap::new() }
    }

    pub fn from_coeffs<I>(domain: &ChartDomain, degree: usize, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Scalar)>,
    {
        let mut map = BTreeMap::new();
        for (idx, c) in coeffs {
            if idx.len() != degree || !is_increasing(&idx) || idx.iter().any(|&i| i >= domain.dim()) {
                return Err(Error::InvalidMultiIndex(idx, domain.dim()));
            }
            if !c.is_zero() {
                map.insert(idx, c);
            }
        }
        Ok(KForm { domain: domain.clone(), degree, coeffs: map })
    }

    /// A 0-form.
    pub fn function(domain: &ChartDomain, f: Scalar) -> Self {
        Self::from_coeffs(domain, 0, [(vec![], f)]).expect("empty index is valid")
    }

    /// The coordinate differential `dx_axis`.
    pub fn dx(domain: &ChartDomain, axis: usize) -> Result<Self> {
        Self::from_coeffs(domain, 1, [(vec![axis], Scalar::one())])
    }

    /// `dx_0 ∧ … ∧ dx_{dim-1}` scaled by `f`.
    pub fn top(domain: &ChartDomain, f: Scalar) -> Self {
        let idx: MultiIndex = (0..domain.dim()).collect();
        Self::from_coeffs(domain, domain.dim(), [(idx, f)]).expect("full index is valid")
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, &Scalar)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, idx: &[usize]) -> Scalar {
        self.coeffs.get(idx).cloned().unwrap_or_else(Scalar::zero)
    }

    /// Coefficient of `idx` at `x` (periodic axes wrapped first).
    pub fn eval_coeff(&self, idx: &[usize], x: &[f64]) -> f64 {
        match self.coeffs.get(idx) {
            Some(c) => c.eval(&self.domain.wrap(x)),
            None => 0.0,
        }
    }

    /// Coefficient of the volume element `dx_0 ∧ … ∧ dx_{dim-1}`.
    pub fn top_coefficient(&self, x: &[f64]) -> f64 {
        if self.degree != self.domain.dim() {
            return 0.0;
        }
        self.coeffs.values().next().map_or(0.0, |c| c.eval(&self.domain.wrap(x)))
    }

    /// Value on `degree` tangent vectors, as an alternating multilinear map.
    pub fn apply(&self, x: &[f64], vectors: &[Vec<f64>]) -> Result<f64> {
        if vectors.len() != self.degree {
            return Err(Error::DimensionMismatch(format!(
                "{}-form applied to {} vectors",
                self.degree,
                vectors.len()
            )));
        }
        let k = self.degree;
        let mut total = 0.0;
        for (idx, c) in &self.coeffs {
            let mut m = Vec::with_capacity(k * k);
            for &row in idx {
                for v in vectors {
                    m.push(v[row]);
                }
            }
            total += c.eval(&self.domain.wrap(x)) * det_small(m, k);
        }
        Ok(total)
    }

    pub fn max_abs_coeff(&self, x: &[f64]) -> f64 {
        self.coeffs.keys().map(|i| self.eval_coeff(i, x).abs()).fold(0.0, f64::max)
    }

    /// `Σ c_t · a_t` over forms of equal degree on the same domain.
    pub fn linear_combination(domain: &ChartDomain, degree: usize, terms: &[(f64, &KForm)]) -> Result<Self> {
        let mut by_index: BTreeMap<MultiIndex, Vec<(f64, Vec<Scalar>)>> = BTreeMap::new();
        for (c, form) in terms {
            if form.domain != *domain {
                return Err(Error::IncompatibleDomains);
            }
            if form.degree != degree {
                return Err(Error::DimensionMismatch(format!(
                    "cannot add a {}-form to a {}-form",
                    form.degree, degree
                )));
            }
            if *c == 0.0 {
                continue;
            }
            for (idx, s) in &form.coeffs {
                by_index.entry(idx.clone()).or_default().push((*c, vec![s.clone()]));
            }
        }
        Self::from_coeffs(domain, degree, by_index.into_iter().map(|(i, t)| (i, Scalar::sum_of_products(t))))
    }

    pub fn add(&self, other: &KForm) -> Result<Self> {
        Self::linear_combination(&self.domain, self.degree, &[(1.0, self), (1.0, other)])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::linear_combination(&self.domain, self.degree, &[(c, self)]).expect("same domain and degree")
    }

    /// Multiply every coefficient by a function.
    pub fn mul_function(&self, f: &Scalar) -> Self {
        let coeffs = self.coeffs.iter().map(|(i, c)| (i.clone(), c.mul(f)));
        Self::from_coeffs(&self.domain, self.degree, coeffs).expect("indices unchanged")
    }
}

/// Exterior product.
pub fn wedge(a: &KForm, b: &KForm) -> Result<KForm> {
    if a.domain != b.domain {
        return Err(Error::IncompatibleDomains);
    }
    let degree = a.degree + b.degree;
    if a.is_zero() || b.is_zero() || degree > a.domain.dim() {
        return Ok(KForm::zero(&a.domain, degree));
    }
    if a.degree == 0 {
        return Ok(b.mul_function(&a.coefficient(&[])));
    }
    if b.degree == 0 {
        return Ok(a.mul_function(&b.coefficient(&[])));
    }
    let mut by_index: BTreeMap<MultiIndex, Vec<(f64, Vec<Scalar>)>> = BTreeMap::new();
    for (i, ai) in &a.coeffs {
        for (j, bj) in &b.coeffs {
            let joined: Vec<usize> = i.iter().chain(j).copied().collect();
            if let Some((k, sign)) = sort_with_sign(&joined) {
                by_index.entry(k).or_default().push((sign, vec![ai.clone(), bj.clone()]));
            }
        }
    }
    KForm::from_coeffs(&a.domain, degree, by_index.into_iter().map(|(k, t)| (k, Scalar::sum_of_products(t))))
}

/// Exterior derivative; a form of top degree maps to the zero form one degree up.
pub fn exterior_derivative(a: &KForm, fd: Fd) -> KForm {
    let dim = a.domain.dim();
    if a.is_zero() || a.degree >= dim {
        return KForm::zero(&a.domain, a.degree + 1);
    }
    let mut by_index: BTreeMap<MultiIndex, Vec<(f64, Vec<Scalar>)>> = BTreeMap::new();
    for (idx, c) in &a.coeffs {
        for axis in 0..dim {
            if idx.contains(&axis) {
                continue;
            }
            let partial = c.partial(axis, fd, &a.domain);
            if partial.is_zero() {
                continue;
            }
            let joined: Vec<usize> = std::iter::once(axis).chain(idx.iter().copied()).collect();
            let (k, sign) = sort_with_sign(&joined).expect("axis not in idx");
            by_index.entry(k).or_default().push((sign, vec![partial]));
        }
    }
    KForm::from_coeffs(&a.domain, a.degree + 1, by_index.into_iter().map(|(k, t)| (k, Scalar::sum_of_products(t))))
        .expect("indices built increasing")
}

/// Pullback of `a` along `f`, producing a form on `f.source()`.
pub fn pullback(a: &KForm, f: &SmoothMap) -> Result<KForm> {
    if f.target_dim() != a.domain.dim() {
        return Err(Error::DimensionMismatch(format!(
            "map into R^{} cannot pull back a form on a {}-dim chart",
            f.target_dim(),
            a.domain.dim()
        )));
    }
    let source = f.source().clone();
    let k = a.degree;
    if a.is_zero() || k > source.dim() {
        return Ok(KForm::zero(&source, k));
    }
    if f.is_identity() && source.dim() == a.domain.dim() {
        return Ok(KForm { domain: source, degree: k, coeffs: a.coeffs.clone() });
    }
    if k == 0 {
        let c = a.coefficient(&[]);
        if let Some(v) = c.as_constant() {
            return Ok(KForm::function(&source, Scalar::constant(v)));
        }
        let (target, map) = (a.domain.clone(), f.clone());
        let (gc, gtarget, gmap) = (c.clone(), a.domain.clone(), f.clone());
        let value = move |x: &[f64]| c.eval(&target.wrap(&map.eval(x)));
        let composed = if gc.has_gradient() {
            let noise = gmap.jacobian_noise();
            Scalar::with_gradient_noise(
                value,
                move |x: &[f64]| {
                    let y = gmap.eval(x);
                    let g = gc.gradient(&gtarget.wrap(&y)).expect("has gradient");
                    let jac = gmap.jacobian(x);
                    (0..jac.ncols()).map(|col| (0..jac.nrows()).map(|r| jac[(r, col)] * g[r]).sum()).collect()
                },
                f64::EPSILON,
                noise,
            )
        } else {
            Scalar::from_fn(value)
        };
        return Ok(KForm::function(&source, composed));
    }
    if f.is_constant() {
        return Ok(KForm::zero(&source, k));
    }
    let entries: Arc<Vec<(MultiIndex, Scalar)>> = Arc::new(a.coeffs.iter().map(|(i, c)| (i.clone(), c.clone())).collect());
    let noise = entries.iter().map(|(_, c)| c.noise()).fold(f.jacobian_noise(), f64::max);
    let mut out = Vec::new();
    for cols in increasing_subsets(source.dim(), k) {
        let (entries, target, map) = (entries.clone(), a.domain.clone(), f.clone());
        let cols_c = cols.clone();
        let coeff = Scalar::with_noise(
            move |x: &[f64]| {
                let y = map.eval(x);
                let y = target.wrap(&y);
                let jac = map.jacobian(x);
                let mut total = 0.0;
                for (rows, c) in entries.iter() {
                    let mut m = Vec::with_capacity(k * k);
                    for &r in rows {
                        for &col in &cols_c {
                            m.push(jac[(r, col)]);
                        }
                    }
                    let minor = det_small(m, k);
                    if minor != 0.0 {
                        total += c.eval(&y) * minor;
                    }
                }
                total
            },
            noise,
        );
        out.push((cols, coeff));
    }
    KForm::from_coeffs(&source, k, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::f64::consts::{PI, TAU};

    fn plane() -> ChartDomain {
        ChartDomain::new(vec![(-2.0, 2.0), (-2.0, 2.0)], vec![false, false]).unwrap()
    }

    fn coord(axis: usize) -> Scalar {
        Scalar::with_gradient(move |x| x[axis], move |x| {
            let mut g = vec![0.0; x.len()];
            g[axis] = 1.0;
            g
        })
    }

    #[test]
    fn dx_wedge_dy_is_basis() {
        let d = plane();
        let w = wedge(&KForm::dx(&d, 0).unwrap(), &KForm::dx(&d, 1).unwrap()).unwrap();
        assert_eq!(w.degree(), 2);
        assert_eq!(w.eval_coeff(&[0, 1], &[0.3, 0.4]), 1.0);
    }

    #[test]
    fn dx_wedge_dx_vanishes() {
        let d = plane();
        let dx = KForm::dx(&d, 0).unwrap();
        assert!(wedge(&dx, &dx).unwrap().is_zero());
    }

    #[test]
    fn graded_commutativity_example() {
        let d = plane();
        let a = KForm::from_coeffs(&d, 1, [(vec![1], coord(0))]).unwrap(); // x dy
        let b = KForm::from_coeffs(&d, 1, [(vec![0], coord(1))]).unwrap(); // y dx
        let w = wedge(&a, &b).unwrap();
        let p = [0.7, -1.3];
        assert!((w.eval_coeff(&[0, 1], &p) + 0.7 * -1.3).abs() < 1e-15);
    }

    #[test]
    fn mismatched_domains_error() {
        let other = ChartDomain::unit_cube(2).unwrap();
        let e = wedge(&KForm::dx(&plane(), 0).unwrap(), &KForm::dx(&other, 0).unwrap()).unwrap_err();
        assert_eq!(e.to_string(), "incompatible chart domains");
    }

    #[test]
    fn d_of_x_dy() {
        let d = plane();
        let a = KForm::from_coeffs(&d, 1, [(vec![1], coord(0))]).unwrap();
        let da = exterior_derivative(&a, Fd::default());
        assert!((da.eval_coeff(&[0, 1], &[0.2, 0.9]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn d_of_constant_is_zero() {
        let d = plane();
        let c = KForm::function(&d, Scalar::constant(3.0));
        let dc = exterior_derivative(&c, Fd::default());
        assert_eq!(dc.degree(), 1);
        assert!(dc.is_zero());
    }

    #[test]
    fn d_of_top_form_is_zero_object() {
        let d = plane();
        let top = KForm::top(&d, Scalar::from_fn(|x| x[0] * x[1]));
        let dt = exterior_derivative(&top, Fd::default());
        assert_eq!(dt.degree(), 3);
        assert!(dt.is_zero());
    }

    #[test]
    fn d_sin_dy_converges_quadratically() {
        // Oracle: the analytic derivative cos(x).
        let d = plane();
        let a = KForm::from_coeffs(&d, 1, [(vec![1], Scalar::from_fn(|x| x[0].sin()))]).unwrap();
        let err = |h: f64| {
            let da = exterior_derivative(&a, Fd::new(h));
            [[0.3, 0.1], [-1.1, 0.5], [1.7, -0.2]]
                .iter()
                .map(|p| (da.eval_coeff(&[0, 1], p) - p[0].cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 < 1e-2f64.powi(2), "err {e1}");
        assert!((e1 / e2 - 4.0).abs() < 0.1);
    }

    #[test]
    fn polar_pullback_of_area() {
        let polar = ChartDomain::new(vec![(0.1, 1.0), (0.0, TAU)], vec![false, true]).unwrap();
        let f = SmoothMap::analytic(
            polar,
            2,
            |x| vec![x[0] * x[1].cos(), x[0] * x[1].sin()],
            |x| DMatrix::from_row_slice(2, 2, &[x[1].cos(), -x[0] * x[1].sin(), x[1].sin(), x[0] * x[1].cos()]),
        )
        .unwrap();
        let area = wedge(&KForm::dx(&plane(), 0).unwrap(), &KForm::dx(&plane(), 1).unwrap()).unwrap();
        let pb = pullback(&area, &f).unwrap();
        for p in [[0.5, 1.0], [0.9, 4.0]] {
            assert!((pb.top_coefficient(&p) - p[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn pullback_of_function_composes() {
        let circle = ChartDomain::new(vec![(0.0, TAU)], vec![true]).unwrap();
        let f = SmoothMap::differenced(circle, 2, |x| vec![x[0].cos(), x[0].sin()], 1e-5).unwrap();
        let g = KForm::function(&plane(), Scalar::from_fn(|x| x[0] * x[0] + 2.0 * x[1]));
        let pb = pullback(&g, &f).unwrap();
        let t = 0.8f64;
        assert!((pb.eval_coeff(&[], &[t]) - (t.cos().powi(2) + 2.0 * t.sin())).abs() < 1e-15);
    }

    #[test]
    fn angle_form_pulls_back_to_dtheta() {
        let circle = ChartDomain::new(vec![(0.0, TAU)], vec![true]).unwrap();
        let f = SmoothMap::differenced(circle, 2, |x| vec![x[0].cos(), x[0].sin()], 1e-5).unwrap();
        let r2 = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let angle = KForm::from_coeffs(
            &plane(),
            1,
            [(vec![0], Scalar::from_fn(move |x| -x[1] / r2(x))), (vec![1], Scalar::from_fn(move |x| x[0] / r2(x)))],
        )
        .unwrap();
        let pb = pullback(&angle, &f).unwrap();
        for t in [0.0, 1.0, PI, 5.5] {
            assert!((pb.eval_coeff(&[0], &[t]) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn evaluation_matches_coefficients() {
        let d = ChartDomain::unit_cube(3).unwrap();
        let a = KForm::from_coeffs(&d, 2, [(vec![0, 2], Scalar::constant(2.0)), (vec![1, 2], coord(0))]).unwrap();
        let e = |i: usize| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            v
        };
        let x = [0.4, 0.5, 0.6];
        assert_eq!(a.apply(&x, &[e(0), e(2)]).unwrap(), 2.0);
        assert_eq!(a.apply(&x, &[e(2), e(0)]).unwrap(), -2.0);
        assert!((a.apply(&x, &[e(1), e(2)]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(a.apply(&x, &[e(0), e(1)]).unwrap(), 0.0);
    }
}
