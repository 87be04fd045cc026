use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{exterior_derivative, pullback, wedge, ChartDomain, Fd, KForm, MatrixFn, Scalar, SmoothMap};

/// Square matrix of forms of a common degree on one chart.
#[derive(Clone, Debug)]
pub struct MatrixForm {
    domain: ChartDomain,
    size: usize,
    degree: usize,
    entries: Vec<KForm>,
}

impl MatrixForm {
    pub fn zeros(domain: &ChartDomain, size: usize, degree: usize) -> Self {
        MatrixForm { domain: domain.clone(), size, degree, entries: vec![KForm::zero(domain, degree); size * size] }
    }

    /// Row-major entries.
    pub fn from_entries(domain: &ChartDomain, size: usize, degree: usize, entries: Vec<KForm>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch(format!("{} entries for a {size}x{size} matrix", entries.len())));
        }
        for e in &entries {
            if e.domain() != domain {
                return Err(Error::IncompatibleDomains);
            }
            if e.degree() != degree {
                return Err(Error::DimensionMismatch(format!("entry of degree {} in a {degree}-form matrix", e.degree())));
            }
        }
        Ok(MatrixForm { domain: domain.clone(), size, degree, entries })
    }

    /// Antisymmetric matrix built from its strict upper triangle `(i, j, form)`.
    pub fn antisymmetric(domain: &ChartDomain, size: usize, degree: usize, upper: Vec<(usize, usize, KForm)>) -> Result<Self> {
        let mut m = Self::zeros(domain, size, degree);
        for (i, j, f) in upper {
            if i >= j || j >= size {
                return Err(Error::InvalidParameter(format!("({i}, {j}) is not strictly upper triangular")));
            }
            m.set(j, i, f.scale(-1.0))?;
            m.set(i, j, f)?;
        }
        Ok(m)
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, i: usize, j: usize) -> &KForm {
        &self.entries[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: KForm) -> Result<()> {
        if f.domain() != &self.domain {
            return Err(Error::IncompatibleDomains);
        }
        if f.degree() != self.degree {
            return Err(Error::DimensionMismatch(format!("entry of degree {} in a {}-form matrix", f.degree(), self.degree)));
        }
        self.entries[i * self.size + j] = f;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(KForm::is_zero)
    }

    /// Matrix of the coefficient of `idx` at `x`.
    pub fn eval(&self, idx: &[usize], x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.get(i, j).eval_coeff(idx, x))
    }

    /// Checks `A + Aᵀ = 0` on a coarse sample grid, relative to the entry size.
    pub fn check_antisymmetric(&self) -> Result<()> {
        if self.is_zero() {
            return Ok(());
        }
        for p in super::levi_civita::sample_grid(&self.domain, 2) {
            let scale = 1.0
                + crate::exterior::combinatorics::increasing_subsets(self.domain.dim(), self.degree)
                    .iter()
                    .map(|idx| self.eval(idx, &p).amax())
                    .fold(0.0, f64::max);
            let defect = self.antisymmetry_defect(&p);
            if defect > 1e-6 * scale {
                return Err(Error::InvalidParameter(format!("matrix of forms is not antisymmetric at {p:?} (defect {defect:.3e})")));
            }
        }
        Ok(())
    }

    /// Largest entry of `A + Aᵀ` over all coefficients at `x`.
    pub fn antisymmetry_defect(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in crate::exterior::combinatorics::increasing_subsets(self.domain.dim(), self.degree) {
            let m = self.eval(&idx, x);
            worst = worst.max((&m + m.transpose()).amax());
        }
        worst
    }

    pub fn add(&self, other: &MatrixForm) -> Result<Self> {
        if other.size != self.size {
            return Err(Error::DimensionMismatch("matrix sizes differ".into()));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect::<Result<Vec<_>>>()?;
        Self::from_entries(&self.domain, self.size, self.degree, entries)
    }

    /// Matrix product with wedge: `(A ∧ B)_ij = Σ_k A_ik ∧ B_kj`.
    pub fn wedge(&self, other: &MatrixForm) -> Result<Self> {
        if other.size != self.size {
            return Err(Error::DimensionMismatch("matrix sizes differ".into()));
        }
        let n = self.size;
        let degree = self.degree + other.degree;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let products = (0..n).map(|k| wedge(self.get(i, k), other.get(k, j))).collect::<Result<Vec<_>>>()?;
                let terms: Vec<(f64, &KForm)> = products.iter().map(|p| (1.0, p)).collect();
                entries.push(KForm::linear_combination(&self.domain, degree, &terms)?);
            }
        }
        Self::from_entries(&self.domain, n, degree, entries)
    }

    pub fn exterior_derivative(&self, fd: Fd) -> Self {
        let entries = self.entries.iter().map(|e| exterior_derivative(e, fd)).collect();
        MatrixForm { domain: self.domain.clone(), size: self.size, degree: self.degree + 1, entries }
    }

    pub fn pullback(&self, f: &SmoothMap) -> Result<Self> {
        let entries = self.entries.iter().map(|e| pullback(e, f)).collect::<Result<Vec<_>>>()?;
        Self::from_entries(f.source(), self.size, self.degree, entries)
    }

    /// Entrywise `g(x)ᵀ · A · g(x)` for an orthogonal-matrix field `g`.
    pub fn conjugate(&self, g: &MatrixField) -> Result<Self> {
        let gm = g.entries();
        let g_t = transpose_scalars(&gm, self.size);
        let left = matrix_times_forms(&g_t, self, self.size)?;
        forms_times_matrix(&left, &gm, self.size)
    }

    /// Block-diagonal embedding `diag(0, A)` of size `size + 1`.
    pub fn prepend_zero_row_col(&self) -> Self {
        let n = self.size + 1;
        let mut m = Self::zeros(&self.domain, n, self.degree);
        for i in 0..self.size {
            for j in 0..self.size {
                m.entries[(i + 1) * n + (j + 1)] = self.get(i, j).clone();
            }
        }
        m
    }
}

fn transpose_scalars(m: &[Scalar], n: usize) -> Vec<Scalar> {
    (0..n * n).map(|k| m[(k % n) * n + k / n].clone()).collect()
}

fn matrix_times_forms(m: &[Scalar], a: &MatrixForm, n: usize) -> Result<MatrixForm> {
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let terms: Vec<KForm> = (0..n).map(|k| a.get(k, j).mul_function(&m[i * n + k])).collect();
            let refs: Vec<(f64, &KForm)> = terms.iter().map(|t| (1.0, t)).collect();
            entries.push(KForm::linear_combination(a.domain(), a.degree(), &refs)?);
        }
    }
    MatrixForm::from_entries(a.domain(), n, a.degree(), entries)
}

fn forms_times_matrix(a: &MatrixForm, m: &[Scalar], n: usize) -> Result<MatrixForm> {
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let terms: Vec<KForm> = (0..n).map(|k| a.get(i, k).mul_function(&m[k * n + j])).collect();
            let refs: Vec<(f64, &KForm)> = terms.iter().map(|t| (1.0, t)).collect();
            entries.push(KForm::linear_combination(a.domain(), a.degree(), &refs)?);
        }
    }
    MatrixForm::from_entries(a.domain(), n, a.degree(), entries)
}

/// A matrix-valued function on a chart (frame changes, frames).
#[derive(Clone)]
pub struct MatrixField {
    size: usize,
    value: Arc<MatrixFn>,
}

impl MatrixField {
    pub fn new<F>(size: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        MatrixField { size, value: Arc::new(f) }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        (self.value)(x)
    }

    /// Entries as 0-form evaluators, row-major.
    pub fn entries(&self) -> Vec<Scalar> {
        let n = self.size;
        (0..n * n)
            .map(|k| {
                let v = self.value.clone();
                Scalar::from_fn(move |x| v(x)[(k / n, k % n)])
            })
            .collect()
    }

    /// `diag(1, g)`.
    pub fn prepend_identity(&self) -> MatrixField {
        let inner = self.value.clone();
        let n = self.size + 1;
        MatrixField::new(n, move |x| {
            let g = inner(x);
            let mut m = DMatrix::identity(n, n);
            m.view_mut((1, 1), (n - 1, n - 1)).copy_from(&g);
            m
        })
    }
}

impl std::fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MatrixField({}x{})", self.size, self.size)
    }
}

/// `Ω = dω + ω ∧ ω`.
pub fn curvature_from_connection(omega: &MatrixForm, fd: Fd) -> Result<MatrixForm> {
    if omega.degree() != 1 {
        return Err(Error::DimensionMismatch(format!("connection must be a 1-form matrix, got degree {}", omega.degree())));
    }
    omega.exterior_derivative(fd).add(&omega.wedge(omega)?)
}

/// A metric connection on a trivialised bundle over one chart.
#[derive(Clone, Debug)]
pub struct Connection {
    omega: MatrixForm,
    curvature: MatrixForm,
}

impl Connection {
    pub fn new(omega: MatrixForm, curvature: MatrixForm) -> Result<Self> {
        if omega.degree() != 1 || curvature.degree() != 2 {
            return Err(Error::DimensionMismatch("connection needs a 1-form and a 2-form matrix".into()));
        }
        if omega.size() != curvature.size() {
            return Err(Error::DimensionMismatch("connection and curvature sizes differ".into()));
        }
        if omega.domain() != curvature.domain() {
            return Err(Error::IncompatibleDomains);
        }
        omega.check_antisymmetric()?;
        curvature.check_antisymmetric()?;
        Ok(Connection { omega, curvature })
    }

    pub fn from_omega(omega: MatrixForm, fd: Fd) -> Result<Self> {
        let curvature = curvature_from_connection(&omega, fd)?;
        Self::new(omega, curvature)
    }

    pub fn flat(domain: &ChartDomain, rank: usize) -> Self {
        Connection { omega: MatrixForm::zeros(domain, rank, 1), curvature: MatrixForm::zeros(domain, rank, 2) }
    }

    pub fn rank(&self) -> usize {
        self.omega.size()
    }

    pub fn domain(&self) -> &ChartDomain {
        self.omega.domain()
    }

    pub fn omega(&self) -> &MatrixForm {
        &self.omega
    }

    pub fn curvature(&self) -> &MatrixForm {
        &self.curvature
    }

    /// Connection on `ν ⊕ ξ`: first row and column zero.
    pub fn stabilized(&self) -> Connection {
        Connection { omega: self.omega.prepend_zero_row_col(), curvature: self.curvature.prepend_zero_row_col() }
    }

    /// Frame change `e ↦ e·g`: `ω ↦ g⁻¹ωg + g⁻¹dg`, `Ω ↦ g⁻¹Ωg`.
    pub fn gauge_transform(&self, g: &MatrixField, fd: Fd) -> Result<Connection> {
        let n = self.rank();
        if g.size() != n {
            return Err(Error::DimensionMismatch(format!("{}x{} frame change for a rank-{n} connection", g.size(), g.size())));
        }
        let domain = self.domain().clone();
        let g_entries = g.entries();
        let g_t = transpose_scalars(&g_entries, n);
        let dg = MatrixForm::from_entries(
            &domain,
            n,
            1,
            g_entries.iter().map(|s| exterior_derivative(&KForm::function(&domain, s.clone()), fd)).collect(),
        )?;
        let maurer_cartan = matrix_times_forms(&g_t, &dg, n)?;
        let omega = self.omega.conjugate(g)?.add(&maurer_cartan)?;
        let curvature = self.curvature.conjugate(g)?;
        Connection::new(omega, curvature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ChartDomain {
        ChartDomain::new(vec![(-1.0, 1.0), (-1.0, 1.0)], vec![false, false]).unwrap()
    }

    #[test]
    fn flat_connection_has_zero_curvature() {
        let c = Connection::flat(&square(), 3);
        let omega_curv = curvature_from_connection(c.omega(), Fd::default()).unwrap();
        assert!(omega_curv.is_zero());
    }

    #[test]
    fn abelian_curvature_is_da() {
        let d = square();
        let a = KForm::from_coeffs(&d, 1, [(vec![1], Scalar::with_gradient(|x| x[0] * x[0], |x| vec![2.0 * x[0], 0.0]))]).unwrap();
        let omega = MatrixForm::antisymmetric(&d, 2, 1, vec![(0, 1, a)]).unwrap();
        let c = Connection::from_omega(omega, Fd::default()).unwrap();
        let x = [0.3, -0.4];
        assert!((c.curvature().get(0, 1).eval_coeff(&[0, 1], &x) - 0.6).abs() < 1e-14);
        assert!(c.curvature().antisymmetry_defect(&x) < 1e-15);
    }

    #[test]
    fn stabilization_pads_first_row_and_column() {
        let d = square();
        let a = KForm::from_coeffs(&d, 1, [(vec![0], Scalar::from_fn(|x| x[1]))]).unwrap();
        let omega = MatrixForm::antisymmetric(&d, 2, 1, vec![(0, 1, a)]).unwrap();
        let s = Connection::from_omega(omega, Fd::default()).unwrap().stabilized();
        assert_eq!(s.rank(), 3);
        for k in 0..3 {
            assert!(s.omega().get(0, k).is_zero() && s.omega().get(k, 0).is_zero());
            assert!(s.curvature().get(0, k).is_zero() && s.curvature().get(k, 0).is_zero());
        }
        assert!(!s.omega().get(1, 2).is_zero());
    }
}
