//! Levi-Civita connection forms of a metric in a given orthonormal frame.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::connection::{MatrixField, MatrixForm};
use crate::error::{Error, Result};
use crate::exterior::{exterior_derivative, wedge, ChartDomain, Fd, KForm, Scalar};

/// Grid of sample points (including the box corners) used for pointwise
/// precondition checks.
pub(crate) fn sample_grid(domain: &ChartDomain, per_axis: usize) -> Vec<Vec<f64>> {
    let dim = domain.dim();
    let mut out = Vec::new();
    let total = per_axis.pow(dim as u32);
    for mut k in 0..total {
        let mut t = Vec::with_capacity(dim);
        for _ in 0..dim {
            t.push((k % per_axis) as f64 / (per_axis - 1) as f64);
            k /= per_axis;
        }
        let mut p = domain.point_at(&t);
        // periodic upper ends coincide with the lower ends
        for (a, v) in p.iter_mut().enumerate() {
            if domain.is_periodic(a) && t[a] == 1.0 {
                *v = domain.lo(a);
            }
        }
        out.push(p);
    }
    out
}

/// Checks that `metric` is symmetric positive definite and `frame` is
/// orthonormal for it on a sample grid.
pub fn check_metric_and_frame(metric: &MatrixField, frame: &MatrixField, domain: &ChartDomain) -> Result<()> {
    for p in sample_grid(domain, 7) {
        let g = metric.eval(&p);
        let asym = (&g - g.transpose()).amax();
        if asym > 1e-12 * g.amax().max(1.0) || g.clone().cholesky().is_none() {
            return Err(Error::MetricNotPositiveDefinite(p));
        }
        let f = frame.eval(&p);
        let defect = (f.transpose() * &g * &f - DMatrix::identity(g.nrows(), g.nrows())).amax();
        if defect > 1e-9 {
            return Err(Error::FrameNotOrthonormal(p, defect));
        }
    }
    Ok(())
}

/// Derivatives `∂_ν F` of the frame matrix by central differences.
fn frame_derivatives(frame: &MatrixField, domain: &ChartDomain, x: &[f64], step: f64) -> Vec<DMatrix<f64>> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|nu| {
            p[nu] = x[nu] + step;
            let fp = frame.eval(&domain.wrap(&p));
            p[nu] = x[nu] - step;
            let fm = frame.eval(&domain.wrap(&p));
            p[nu] = x[nu];
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// Connection coefficients `ω_ab(∂_μ)` at `x`, one `n×n` matrix per coordinate `μ`.
///
/// With `e_a = F[:, a]` and `c^a_bc = θ^a([e_b, e_c])`, the Koszul formula in
/// an orthonormal frame gives
/// `ω_ab(e_c) = ½ (c^a_cb − c^c_ba + c^b_ac)`, where `∇e_b = Σ_a e_a ω_ab`.
fn connection_coefficients(frame: &MatrixField, domain: &ChartDomain, x: &[f64], step: f64) -> Vec<DMatrix<f64>> {
    let n = frame.size();
    let f = frame.eval(x);
    let f_inv = f.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(n, n));
    let df = frame_derivatives(frame, domain, x, step);
    // brackets[b][c] = [e_b, e_c] in coordinates
    let mut structure = vec![0.0; n * n * n]; // c^a_bc at a*n*n + b*n + c
    for b in 0..n {
        for c in 0..n {
            if b == c {
                continue;
            }
            let mut bracket = vec![0.0; n];
            for (mu, br) in bracket.iter_mut().enumerate() {
                for (nu, dnu) in df.iter().enumerate() {
                    *br += f[(nu, b)] * dnu[(mu, c)] - f[(nu, c)] * dnu[(mu, b)];
                }
            }
            for a in 0..n {
                structure[a * n * n + b * n + c] = (0..n).map(|mu| f_inv[(a, mu)] * bracket[mu]).sum();
            }
        }
    }
    let s = |a: usize, b: usize, c: usize| structure[a * n * n + b * n + c];
    (0..n)
        .map(|mu| {
            DMatrix::from_fn(n, n, |a, b| {
                (0..n).map(|c| 0.5 * (s(a, c, b) - s(c, b, a) + s(b, a, c)) * f_inv[(c, mu)]).sum()
            })
        })
        .collect()
}

/// The Levi-Civita connection of `metric` in the orthonormal `frame` (columns
/// are frame vectors in coordinates), with frame derivatives taken by central
/// differences.
pub fn levi_civita_from_metric(metric: &MatrixField, domain: &ChartDomain, frame: &MatrixField, fd: Fd) -> Result<MatrixForm> {
    let n = frame.size();
    if metric.size() != n || domain.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "metric {}x{}, frame {n}x{n} on a {}-dim chart",
            metric.size(),
            metric.size(),
            domain.dim()
        )));
    }
    check_metric_and_frame(metric, frame, domain)?;
    let step = fd.step_for(f64::EPSILON);
    let noise = Fd::differenced_noise(f64::EPSILON, step);
    let mut upper = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let coeffs = (0..n).map(|mu| {
                let (frame, domain) = (frame.clone(), domain.clone());
                let s = Scalar::with_noise(move |x| connection_coefficients(&frame, &domain, x, step)[mu][(a, b)], noise);
                (vec![mu], s)
            });
            upper.push((a, b, KForm::from_coeffs(domain, 1, coeffs)?));
        }
    }
    MatrixForm::antisymmetric(domain, n, 1, upper)
}

/// Coframe 1-forms `θ^a = Σ_μ (F⁻¹)_aμ dx^μ`.
pub fn coframe(frame: &MatrixField, domain: &ChartDomain) -> Result<Vec<KForm>> {
    let n = frame.size();
    let inverse = Arc::new({
        let frame = frame.clone();
        move |x: &[f64]| frame.eval(x).try_inverse().unwrap_or_else(|| DMatrix::zeros(n, n))
    });
    (0..n)
        .map(|a| {
            let coeffs = (0..n).map(|mu| {
                let inv = inverse.clone();
                (vec![mu], Scalar::from_fn(move |x| inv(x)[(a, mu)]))
            });
            KForm::from_coeffs(domain, 1, coeffs)
        })
        .collect()
}

/// Largest coefficient of the torsion `dθ^a + Σ_b ω_ab ∧ θ^b` at `x`.
pub fn torsion_residual(frame: &MatrixField, omega: &MatrixForm, fd: Fd, x: &[f64]) -> Result<f64> {
    let domain = omega.domain();
    let theta = coframe(frame, domain)?;
    let mut worst: f64 = 0.0;
    for a in 0..theta.len() {
        let mut torsion = exterior_derivative(&theta[a], fd);
        for (b, th) in theta.iter().enumerate() {
            torsion = torsion.add(&wedge(omega.get(a, b), th)?)?;
        }
        worst = worst.max(torsion.max_abs_coeff(x));
    }
    Ok(worst)
}
