//! Tensor-product integration of top-degree forms.
//!
//! Non-periodic axes use composite Gauss-Legendre, periodic axes the
//! trapezoid rule with `4 · order · subdivision` points. The error estimate
//! is the change against the same rule at half the order.

pub mod rules;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{pullback, ChartDomain, KForm, SmoothMap};
use crate::geometry::{FramedGeometry, PoleCap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss-Legendre points per cell on non-periodic axes.
    pub order: usize,
    /// Cells per axis.
    pub subdivision: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { order: 24, subdivision: 1 }
    }
}

impl QuadratureSpec {
    pub fn new(order: usize, subdivision: usize) -> Result<Self> {
        let spec = QuadratureSpec { order, subdivision };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || self.subdivision < 1 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs order >= 2 and subdivision >= 1, got {} and {}",
                self.order, self.subdivision
            )));
        }
        Ok(())
    }

    pub fn periodic_points(&self) -> usize {
        4 * self.order * self.subdivision
    }

    /// The coarser rule used for the error estimate.
    pub fn halved(&self) -> Self {
        QuadratureSpec { order: (self.order / 2).max(1), subdivision: self.subdivision }
    }

    fn axis_rule(&self, domain: &ChartDomain, axis: usize) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = (domain.lo(axis), domain.hi(axis));
        if domain.is_periodic(axis) {
            rules::periodic_trapezoid(lo, hi, self.periodic_points())
        } else {
            rules::composite_gauss(lo, hi, self.order, self.subdivision)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

impl Integral {
    pub fn zero() -> Self {
        Integral { value: 0.0, error_estimate: 0.0 }
    }

    pub fn add(self, other: Integral) -> Integral {
        Integral { value: self.value + other.value, error_estimate: self.error_estimate + other.error_estimate }
    }

    pub fn scale(self, c: f64) -> Integral {
        Integral { value: c * self.value, error_estimate: c.abs() * self.error_estimate }
    }
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct Accumulator {
    sum: f64,
    carry: f64,
}

impl Accumulator {
    fn push(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Tensor rule applied to `f` over `domain`, parallel over the nodes of the
/// first axis. Partial sums are reduced in node order, so the result does not
/// depend on the thread count.
pub fn tensor_sum<F>(domain: &ChartDomain, spec: &QuadratureSpec, f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..domain.dim()).map(|a| spec.axis_rule(domain, a)).collect();
    let (outer_x, outer_w) = &rules[0];
    let inner = &rules[1..];
    let partial: Vec<f64> = outer_x
        .par_iter()
        .zip(outer_w.par_iter())
        .map(|(&x0, &w0)| {
            let mut point = vec![0.0; domain.dim()];
            point[0] = x0;
            let mut counter = vec![0usize; inner.len()];
            let mut acc = Accumulator::default();
            loop {
                let mut w = w0;
                for (k, (xs, ws)) in inner.iter().enumerate() {
                    point[k + 1] = xs[counter[k]];
                    w *= ws[counter[k]];
                }
                acc.push(w * f(&point));
                // odometer over the inner axes, last axis fastest
                let mut k = inner.len();
                loop {
                    if k == 0 {
                        return acc.total();
                    }
                    k -= 1;
                    counter[k] += 1;
                    if counter[k] < inner[k].0.len() {
                        break;
                    }
                    counter[k] = 0;
                }
            }
        })
        .collect();
    let mut acc = Accumulator::default();
    partial.iter().for_each(|&p| acc.push(p));
    acc.total()
}

fn check_top(form: &KForm) -> Result<()> {
    let dim = form.domain().dim();
    if form.degree() != dim {
        return Err(Error::DegreeMismatch { form: form.degree(), dim });
    }
    Ok(())
}

/// Integral of a top-degree form over its chart (positive orientation of the
/// coordinate order).
pub fn integrate(form: &KForm, spec: &QuadratureSpec) -> Result<Integral> {
    check_top(form)?;
    spec.validate()?;
    if form.is_zero() {
        return Ok(Integral::zero());
    }
    let f = |x: &[f64]| form.top_coefficient(x);
    let fine = tensor_sum(form.domain(), spec, f);
    let coarse = tensor_sum(form.domain(), &spec.halved(), f);
    Ok(Integral { value: fine, error_estimate: (fine - coarse).abs() })
}

/// Omitted strip between a polar chart edge and its pole.
///
/// The coefficient of a smooth top form vanishes linearly at a polar
/// coordinate singularity, so the strip contributes `(ε/2) ∫ c(edge)` up to
/// `O(ε³)`; `ε² max|c(edge)|` bounds the neglected part.
fn pole_cap(form: &KForm, cap: &PoleCap, spec: &QuadratureSpec) -> Result<(f64, f64, f64)> {
    let domain = form.domain();
    let edge = if cap.at_upper { domain.hi(cap.axis) } else { domain.lo(cap.axis) };
    let insert = move |y: &[f64]| {
        let mut x = Vec::with_capacity(y.len() + 1);
        x.extend_from_slice(&y[..cap.axis]);
        x.push(edge);
        x.extend_from_slice(&y[cap.axis..]);
        x
    };
    if domain.dim() == 1 {
        let c = form.top_coefficient(&[edge]);
        return Ok((0.5 * cap.margin * c, 0.5 * cap.margin * c, cap.margin * cap.margin * c.abs()));
    }
    let keep: Vec<usize> = (0..domain.dim()).filter(|&a| a != cap.axis).collect();
    let rim = ChartDomain::new(keep.iter().map(|&a| domain.bounds()[a]).collect(), keep.iter().map(|&a| domain.is_periodic(a)).collect())?;
    let fine = tensor_sum(&rim, spec, |y| form.top_coefficient(&insert(y)));
    let coarse = tensor_sum(&rim, &spec.halved(), |y| form.top_coefficient(&insert(y)));
    let mut peak: f64 = 0.0;
    for p in crate::geometry::sample_grid(&rim, 17) {
        peak = peak.max(form.top_coefficient(&insert(&p)).abs());
    }
    let half = 0.5 * cap.margin;
    Ok((half * fine, half * coarse, cap.margin * cap.margin * peak))
}

/// Integral over one chart plus the strips omitted at its pole caps.
pub fn integrate_chart(form: &KForm, caps: &[PoleCap], spec: &QuadratureSpec) -> Result<Integral> {
    check_top(form)?;
    spec.validate()?;
    if form.is_zero() {
        return Ok(Integral::zero());
    }
    let f = |x: &[f64]| form.top_coefficient(x);
    let mut fine = tensor_sum(form.domain(), spec, f);
    let mut coarse = tensor_sum(form.domain(), &spec.halved(), f);
    let mut bound = 0.0;
    for cap in caps {
        if cap.axis >= form.domain().dim() {
            return Err(Error::IndexOutOfRange(cap.axis, form.domain().dim()));
        }
        let (cf, cc, b) = pole_cap(form, cap, spec)?;
        fine += cf;
        coarse += cc;
        bound += b;
    }
    Ok(Integral { value: fine, error_estimate: (fine - coarse).abs() + bound })
}

/// Sum of per-chart integrals over an atlas with disjoint chart ranges.
pub fn integrate_over_atlas(forms: &[KForm], geom: &FramedGeometry, spec: &QuadratureSpec) -> Result<Integral> {
    geom.validate_atlas()?;
    if forms.len() != geom.charts.len() {
        return Err(Error::DimensionMismatch(format!("{} forms for {} charts", forms.len(), geom.charts.len())));
    }
    let mut total = Integral::zero();
    for (form, chart) in forms.iter().zip(&geom.charts) {
        if form.domain() != &chart.domain {
            return Err(Error::IncompatibleDomains);
        }
        total = total.add(integrate_chart(form, &chart.pole_caps, spec)?);
    }
    Ok(total)
}

/// Inclusion of the face `x_axis = value` of `domain`, parametrised by the
/// remaining coordinates in order.
pub fn face_inclusion(domain: &ChartDomain, axis: usize, value: f64) -> Result<SmoothMap> {
    let dim = domain.dim();
    let keep: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
    let face = ChartDomain::new(keep.iter().map(|&a| domain.bounds()[a]).collect(), keep.iter().map(|&a| domain.is_periodic(a)).collect())?;
    let mut offset = vec![0.0; dim];
    offset[axis] = value;
    let mut linear = DMatrix::zeros(dim, dim - 1);
    for (col, &a) in keep.iter().enumerate() {
        linear[(a, col)] = 1.0;
    }
    SmoothMap::affine(&face, offset, linear)
}

/// `∫_{∂C} a` for a `(k-1)`-form on a `k`-dimensional box `C`, with the
/// boundary oriented by the outward normal first:
/// `Σ_i (−1)^i (∫_{x_i = hi} a − ∫_{x_i = lo} a)`. Periodic axes have no faces.
pub fn boundary_integral(form: &KForm, spec: &QuadratureSpec) -> Result<Integral> {
    let domain = form.domain();
    let k = domain.dim();
    if form.degree() + 1 != k {
        return Err(Error::DegreeMismatch { form: form.degree(), dim: k });
    }
    if k == 1 {
        if domain.is_periodic(0) {
            return Ok(Integral::zero());
        }
        let value = form.eval_coeff(&[], &[domain.hi(0)]) - form.eval_coeff(&[], &[domain.lo(0)]);
        return Ok(Integral { value, error_estimate: 0.0 });
    }
    let mut total = Integral::zero();
    for axis in 0..k {
        if domain.is_periodic(axis) {
            continue;
        }
        let sign = if axis % 2 == 0 { 1.0 } else { -1.0 };
        for (end, s) in [(domain.hi(axis), sign), (domain.lo(axis), -sign)] {
            let face = pullback(form, &face_inclusion(domain, axis, end)?)?;
            total = total.add(integrate(&face, spec)?.scale(s));
        }
    }
    Ok(total)
}
