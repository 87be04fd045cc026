//! Lazy scalar evaluators used as form coefficients.

use std::sync::Arc;

use super::domain::ChartDomain;

pub(crate) type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub(crate) type GradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Finite-difference configuration shared by every derivative the crate takes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fd {
    pub step: f64,
}

impl Default for Fd {
    fn default() -> Self {
        Fd { step: 1e-5 }
    }
}

impl Fd {
    pub fn new(step: f64) -> Self {
        Fd { step }
    }

    /// Step used to difference an evaluator whose values carry relative
    /// round-off `noise`.
    ///
    /// Clean evaluators use the configured step. Evaluators that are
    /// themselves difference quotients get the step that balances their
    /// amplified noise against the O(s²) truncation, never smaller than the
    /// configured one.
    pub fn step_for(&self, noise: f64) -> f64 {
        if noise <= 16.0 * f64::EPSILON {
            self.step
        } else {
            self.step.max(noise.cbrt())
        }
    }

    /// Relative noise of a central difference taken with `step` on an input
    /// with the given noise.
    pub fn differenced_noise(noise: f64, step: f64) -> f64 {
        noise.max(f64::EPSILON) / step
    }
}

struct Field {
    value: Box<ValueFn>,
    gradient: Option<Box<GradientFn>>,
    noise: f64,
    gradient_noise: f64,
}

#[derive(Clone)]
enum Repr {
    Const(f64),
    Field(Arc<Field>),
}

/// A real-valued evaluator on chart coordinates.
///
/// Constants are kept symbolic so that structural zeros fold away when forms
/// are combined. A field may carry an analytic gradient; otherwise its
/// derivatives are taken by central differences.
#[derive(Clone)]
pub struct Scalar(Repr);

impl std::fmt::Debug for Scalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.0 {
            Repr::Const(c) => write!(f, "Scalar::Const({c})"),
            Repr::Field(field) => write!(
                f,
                "Scalar::Field {{ gradient: {}, noise: {:.1e} }}",
                field.gradient.is_some(),
                field.noise
            ),
        }
    }
}

impl Scalar {
    pub fn constant(c: f64) -> Self {
        Scalar(Repr::Const(c))
    }

    pub fn zero() -> Self {
        Scalar::constant(0.0)
    }

    pub fn one() -> Self {
        Scalar::constant(1.0)
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::with_noise(f, f64::EPSILON)
    }

    /// Evaluator whose values carry relative round-off `noise` (for example a
    /// difference quotient).
    pub fn with_noise<F>(f: F, noise: f64) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Scalar(Repr::Field(Arc::new(Field {
            value: Box::new(f),
            gradient: None,
            noise,
            gradient_noise: noise,
        })))
    }

    pub fn with_gradient<F, G>(f: F, gradient: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::with_gradient_noise(f, gradient, f64::EPSILON, f64::EPSILON)
    }

    pub(crate) fn with_gradient_noise<F, G>(
        f: F,
        gradient: G,
        noise: f64,
        gradient_noise: f64,
    ) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Scalar(Repr::Field(Arc::new(Field {
            value: Box::new(f),
            gradient: Some(Box::new(gradient)),
            noise,
            gradient_noise,
        })))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.0 {
            Repr::Const(c) => Some(c),
            Repr::Field(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn has_gradient(&self) -> bool {
        match &self.0 {
            Repr::Const(_) => true,
            Repr::Field(f) => f.gradient.is_some(),
        }
    }

    /// Relative round-off level of the values.
    pub fn noise(&self) -> f64 {
        match &self.0 {
            Repr::Const(_) => 0.0,
            Repr::Field(f) => f.noise,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.0 {
            Repr::Const(c) => *c,
            Repr::Field(f) => (f.value)(x),
        }
    }

    /// Analytic gradient, if one is attached.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.0 {
            Repr::Const(_) => Some(vec![0.0; x.len()]),
            Repr::Field(f) => f.gradient.as_ref().map(|g| g(x)),
        }
    }

    /// Lazy partial derivative along `axis`.
    ///
    /// Uses the attached gradient when present and a central difference
    /// otherwise. Stencil points are wrapped on periodic axes of `domain`.
    pub fn partial(&self, axis: usize, fd: Fd, domain: &ChartDomain) -> Scalar {
        let field = match &self.0 {
            Repr::Const(_) => return Scalar::zero(),
            Repr::Field(f) => f.clone(),
        };
        if field.gradient.is_some() {
            let noise = field.gradient_noise;
            return Scalar::with_noise(
                move |x| (field.gradient.as_ref().expect("gradient present"))(x)[axis],
                noise,
            );
        }
        let step = fd.step_for(field.noise);
        let noise = Fd::differenced_noise(field.noise, step);
        let domain = domain.clone();
        Scalar::with_noise(
            move |x| {
                let mut p = x.to_vec();
                p[axis] = x[axis] + step;
                let fp = (field.value)(&domain.wrap(&p));
                p[axis] = x[axis] - step;
                let fm = (field.value)(&domain.wrap(&p));
                (fp - fm) / (2.0 * step)
            },
            noise,
        )
    }

    /// `Σ_t c_t · Π_k f_{t,k}` with constant folding.
    ///
    /// The gradient is propagated by the product rule when every factor has
    /// one.
    pub fn sum_of_products(terms: Vec<(f64, Vec<Scalar>)>) -> Scalar {
        let mut constant = 0.0;
        let mut folded: Vec<(f64, Vec<Scalar>)> = Vec::new();
        for (c, factors) in terms {
            let mut coef = c;
            let mut rest = Vec::with_capacity(factors.len());
            for f in factors {
                match f.as_constant() {
                    Some(v) => coef *= v,
                    None => rest.push(f),
                }
            }
            if coef == 0.0 {
                continue;
            }
            if rest.is_empty() {
                constant += coef;
            } else {
                folded.push((coef, rest));
            }
        }
        if folded.is_empty() {
            return Scalar::constant(constant);
        }
        if constant == 0.0 && folded.len() == 1 && folded[0].0 == 1.0 && folded[0].1.len() == 1 {
            return folded.pop().expect("one term").1.pop().expect("one factor");
        }
        let noise = folded
            .iter()
            .flat_map(|(_, fs)| fs.iter().map(Scalar::noise))
            .fold(f64::EPSILON, f64::max);
        let differentiable = folded.iter().all(|(_, fs)| fs.iter().all(Scalar::has_gradient));
        let terms = Arc::new(folded);
        let value_terms = terms.clone();
        let value = move |x: &[f64]| {
            let mut acc = constant;
            for (c, fs) in value_terms.iter() {
                let mut p = *c;
                for f in fs {
                    p *= f.eval(x);
                }
                acc += p;
            }
            acc
        };
        if !differentiable {
            return Scalar::with_noise(value, noise);
        }
        let gradient_noise = terms
            .iter()
            .flat_map(|(_, fs)| fs.iter().map(Scalar::gradient_noise))
            .fold(f64::EPSILON, f64::max);
        let gradient = move |x: &[f64]| {
            let mut g = vec![0.0; x.len()];
            for (c, fs) in terms.iter() {
                let values: Vec<f64> = fs.iter().map(|f| f.eval(x)).collect();
                for (k, f) in fs.iter().enumerate() {
                    if f.as_constant().is_some() {
                        continue;
                    }
                    let others: f64 = values
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != k)
                        .map(|(_, v)| v)
                        .product();
                    let gk = f.gradient(x).expect("differentiable factor");
                    for (gi, d) in g.iter_mut().zip(gk) {
                        *gi += c * others * d;
                    }
                }
            }
            g
        };
        Scalar::with_gradient_noise(value, gradient, noise, gradient_noise)
    }

    fn gradient_noise(&self) -> f64 {
        match &self.0 {
            Repr::Const(_) => 0.0,
            Repr::Field(f) => f.gradient_noise,
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        Scalar::sum_of_products(vec![(1.0, vec![self.clone()]), (1.0, vec![other.clone()])])
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        Scalar::sum_of_products(vec![(1.0, vec![self.clone(), other.clone()])])
    }

    pub fn scale(&self, c: f64) -> Scalar {
        Scalar::sum_of_products(vec![(c, vec![self.clone()])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> ChartDomain {
        ChartDomain::new(vec![(-1.0, 1.0)], vec![false]).unwrap()
    }

    #[test]
    fn constants_fold() {
        let s = Scalar::sum_of_products(vec![
            (2.0, vec![Scalar::constant(3.0)]),
            (1.0, vec![Scalar::zero(), Scalar::from_fn(|x| x[0])]),
        ]);
        assert_eq!(s.as_constant(), Some(6.0));
    }

    #[test]
    fn product_rule_gradient() {
        let x = Scalar::with_gradient(|p| p[0], |_| vec![1.0]);
        let sin = Scalar::with_gradient(|p| p[0].sin(), |p| vec![p[0].cos()]);
        let prod = x.mul(&sin);
        let g = prod.gradient(&[0.7]).unwrap();
        assert!((g[0] - (0.7f64.sin() + 0.7 * 0.7f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn central_difference_is_second_order() {
        let f = Scalar::from_fn(|p| p[0].sin());
        let err = |h: f64| {
            let d = f.partial(0, Fd::new(h), &line());
            (d.eval(&[0.3]) - 0.3f64.cos()).abs()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn nested_difference_widens_step() {
        let fd = Fd::default();
        assert_eq!(fd.step_for(f64::EPSILON), fd.step);
        let noisy = Fd::differenced_noise(f64::EPSILON, fd.step);
        assert!(fd.step_for(noisy) > fd.step);
    }
}
