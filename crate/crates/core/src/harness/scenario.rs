//! Declarative scenario files.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{ChartDomain, SmoothMap};
use crate::indices::IsolatedZero;
use crate::quadrature::QuadratureSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Index sum of an interior extension against the boundary integral.
    IndexTheorem,
    FiberNormalization,
    /// Boundary integrals of `Ψ` over small cubes for a split connection.
    Closedness,
    /// `∮ Ψ + ∫ E(Ω)` over small cubes for a full connection.
    Transgression,
    SectionProperties,
    ThomShadow,
    SpecialCases,
    GaussBonnet,
    FrameEquivariance,
}

/// How an expected value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Stated outright by the theory being checked.
    Theorem,
    /// Computed by an independent oracle, named alongside.
    Derived,
    /// Holds by construction.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

/// Polynomial vector fields on `R^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `z^d` for `d ≥ 0`, `conj(z)^|d|` for `d < 0`.
    ComplexPower { degree: i32 },
    /// One list of `[coefficient, exponents]` terms per component.
    Polynomial { coefficients: Vec<Vec<(f64, Vec<u32>)>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSpec {
    pub location: Vec<f64>,
    #[serde(default)]
    pub jacobian: Option<Vec<Vec<f64>>>,
    pub isolation_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub id: String,
    pub value: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    pub tol: f64,
}

/// Parameters of the randomised scenario kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sampling {
    pub seed: u64,
    pub count: usize,
    /// Cube edge length.
    pub scale: f64,
    /// Amplitude of random connections and frame changes.
    pub amplitude: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { seed: 1, count: 20, scale: 0.1, amplitude: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub description: String,
    pub geometry: GeometrySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    /// Euler characteristic of the filled-in manifold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_characteristic: Option<i64>,
    #[serde(default)]
    pub zeros: Vec<ZeroSpec>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub sampling: Sampling,
    pub expected: Vec<Expected>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate().map_err(|e| Error::Config(format!("{}: {e}", self.name)))?;
        for e in &self.expected {
            if e.provenance == Provenance::Derived && e.oracle.is_none() {
                return Err(Error::Config(format!("{}: derived value {} names no oracle", self.name, e.id)));
            }
            if !(e.tol >= 0.0) {
                return Err(Error::Config(format!("{}: negative tolerance for {}", self.name, e.id)));
            }
        }
        if self.kind == ScenarioKind::IndexTheorem && (self.field.is_none() || self.euler_characteristic.is_none()) {
            return Err(Error::Config(format!("{}: index scenarios need a field and an Euler characteristic", self.name)));
        }
        Ok(())
    }

    pub fn isolated_zeros(&self) -> Result<Vec<IsolatedZero>> {
        self.zeros
            .iter()
            .map(|z| {
                let jacobian = match &z.jacobian {
                    None => None,
                    Some(rows) => {
                        let n = rows.len();
                        if rows.iter().any(|r| r.len() != n) {
                            return Err(Error::Config(format!("{}: Jacobian at {:?} is not square", self.name, z.location)));
                        }
                        Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
                    }
                };
                Ok(IsolatedZero { location: z.location.clone(), jacobian, isolation_radius: z.isolation_radius })
            })
            .collect()
    }
}

/// `Σ c·x^e` per component.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    components: Vec<Vec<(f64, Vec<u32>)>>,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Polynomial {
    pub fn new(components: Vec<Vec<(f64, Vec<u32>)>>) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return Err(Error::Config("polynomial field with no components".into()));
        }
        for term in components.iter().flatten() {
            if term.1.len() != dim {
                return Err(Error::Config(format!("exponent vector {:?} for a field on R^{dim}", term.1)));
            }
        }
        Ok(Polynomial { dim, components })
    }

    /// Real and imaginary parts of `z^d` (or `conj(z)^|d|` when `d < 0`).
    pub fn complex_power(d: i32) -> Self {
        let k = d.unsigned_abs();
        let conj: f64 = if d < 0 { -1.0 } else { 1.0 };
        let (mut re, mut im) = (Vec::new(), Vec::new());
        for j in 0..=k {
            // C(k,j) x^{k-j} (i·conj·y)^j
            let c = binomial(k, j) * conj.powi(j as i32);
            let exps = vec![k - j, j];
            match j % 4 {
                0 => re.push((c, exps)),
                1 => im.push((c, exps)),
                2 => re.push((-c, exps)),
                _ => im.push((-c, exps)),
            }
        }
        Polynomial { dim: 2, components: vec![re, im] }
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        match spec {
            FieldSpec::ComplexPower { degree } => Ok(Self::complex_power(*degree)),
            FieldSpec::Polynomial { coefficients } => Self::new(coefficients.clone()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|terms| terms.iter().map(|(c, e)| c * monomial(x, e)).sum()).collect()
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            self.components[i]
                .iter()
                .filter(|(_, e)| e[j] > 0)
                .map(|(c, e)| {
                    let mut lower = e.clone();
                    lower[j] -= 1;
                    c * e[j] as f64 * monomial(x, &lower)
                })
                .sum()
        })
    }

    /// The field as a map on `[-2, 2]^dim` with its exact Jacobian.
    pub fn to_map(&self) -> Result<SmoothMap> {
        let domain = ChartDomain::new(vec![(-2.0, 2.0); self.dim], vec![false; self.dim])?;
        let (a, b) = (self.clone(), self.clone());
        SmoothMap::analytic(domain, self.dim, move |x| a.eval(x), move |x| b.jacobian(x))
    }
}

fn monomial(x: &[f64], e: &[u32]) -> f64 {
    x.iter().zip(e).map(|(v, &p)| v.powi(p as i32)).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_powers_match_complex_arithmetic() {
        let (x, y) = (0.3_f64, -0.7_f64);
        for d in -3..=4 {
            let p = Polynomial::complex_power(d).eval(&[x, y]);
            let (r, t) = ((x * x + y * y).sqrt(), y.atan2(x));
            let rk = r.powi(d.abs());
            let (re, im) = (rk * (d as f64 * t).cos(), rk * (d as f64 * t).sin());
            assert!((p[0] - re).abs() < 1e-14 && (p[1] - im).abs() < 1e-14, "d = {d}: {p:?} vs ({re}, {im})");
        }
    }

    #[test]
    fn polynomial_jacobian_matches_differences() {
        let p = Polynomial::new(vec![vec![(1.0, vec![1, 0, 0])], vec![(2.0, vec![1, 1, 0])], vec![(1.0, vec![0, 0, 2]), (-0.25, vec![0, 0, 0])]]).unwrap();
        let x = [0.2, -0.4, 0.9];
        let j = p.jacobian(&x);
        let h = 1e-6;
        for c in 0..3 {
            let (mut a, mut b) = (x, x);
            a[c] += h;
            b[c] -= h;
            let (fa, fb) = (p.eval(&a), p.eval(&b));
            for r in 0..3 {
                assert!((j[(r, c)] - (fa[r] - fb[r]) / (2.0 * h)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn derived_values_need_an_oracle() {
        let text = r#"{"name":"x","kind":"gauss_bonnet","geometry":{"name":"sphere_round","params":[1]},
            "expected":[{"id":"gauss_bonnet","value":2,"provenance":"derived","tol":1e-6}]}"#;
        assert!(matches!(Scenario::from_json(text), Err(Error::Config(_))));
    }
}
