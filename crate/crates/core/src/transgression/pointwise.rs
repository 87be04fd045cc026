//! Differential forms frozen at a single point: elements of the exterior
//! algebra of the cotangent space, indexed by bitmasks of coordinate axes.

use nalgebra::DMatrix;

use crate::exterior::MultiIndex;

/// A homogeneous element of `Λ^degree (R^dim)*`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointForm {
    dim: usize,
    degree: usize,
    /// Dense coefficients by axis bitmask; only masks with `degree` bits are used.
    coeffs: Vec<f64>,
}

pub(crate) fn mask_of(idx: &[usize]) -> usize {
    idx.iter().fold(0, |m, &i| m | (1 << i))
}

/// Sign of the shuffle sorting the axes of `a` followed by those of `b`
/// (assumed disjoint).
fn merge_sign(a: usize, b: usize) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let q = rest.trailing_zeros();
        inversions += (a >> (q + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl PointForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        PointForm { dim, degree, coeffs: vec![0.0; 1 << dim] }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut f = Self::zero(dim, 0);
        f.coeffs[0] = value;
        f
    }

    /// A 1-form from its components.
    pub fn covector(components: &[f64]) -> Self {
        let mut f = Self::zero(components.len(), 1);
        for (i, c) in components.iter().enumerate() {
            f.coeffs[1 << i] = *c;
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        if idx.len() != self.degree {
            return 0.0;
        }
        self.coeffs[mask_of(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        debug_assert_eq!(idx.len(), self.degree);
        self.coeffs[mask_of(idx)] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(m, c)| (m, *c))
    }

    pub fn wedge(&self, other: &PointForm) -> PointForm {
        let mut out = PointForm::zero(self.dim, self.degree + other.degree);
        if out.degree > self.dim {
            return out;
        }
        for (ma, va) in self.nonzero() {
            for (mb, vb) in other.nonzero() {
                if ma & mb == 0 {
                    out.coeffs[ma | mb] += merge_sign(ma, mb) * va * vb;
                }
            }
        }
        out
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: f64, other: &PointForm) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    pub fn scaled(mut self, c: f64) -> PointForm {
        self.coeffs.iter_mut().for_each(|v| *v *= c);
        self
    }

    /// Pullback along a linear map with matrix `jac` (rows: the axes of
    /// this form, columns: the axes of the result).
    pub fn pullback(&self, jac: &DMatrix<f64>) -> PointForm {
        debug_assert_eq!(jac.nrows(), self.dim);
        let m = jac.ncols();
        let rows: Vec<PointForm> = (0..self.dim).map(|i| PointForm::covector(&jac.row(i).iter().copied().collect::<Vec<_>>())).collect();
        let mut out = PointForm::zero(m, self.degree);
        if self.degree > m {
            return out;
        }
        for (mask, c) in self.nonzero() {
            let mut term = PointForm::scalar(m, c);
            let mut bits = mask;
            while bits != 0 {
                term = term.wedge(&rows[bits.trailing_zeros() as usize]);
                bits &= bits - 1;
            }
            out.add_scaled(1.0, &term);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Coefficients on the increasing multi-indices of the form's degree.
    pub fn components(&self) -> Vec<(MultiIndex, f64)> {
        crate::exterior::combinatorics::increasing_subsets(self.dim, self.degree)
            .into_iter()
            .map(|idx| {
                let v = self.coeffs[mask_of(&idx)];
                (idx, v)
            })
            .collect()
    }
}
