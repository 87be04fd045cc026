use std::cell::RefCell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::bundle::SphereBundleMap;
use super::pointwise::PointForm;
use super::{euler_normalization, psi_weights};
use crate::error::{Error, Result};
use crate::exterior::combinatorics::{factorial, increasing_subsets, signed_permutations};
use crate::exterior::{exterior_derivative, wedge, ChartDomain, Fd, KForm, Scalar, SmoothMap};
use crate::geometry::{Connection, MatrixForm};

/// Connection and curvature of a rank `n+1` bundle pulled back to the
/// source chart of `map`.
pub fn pulled_connection(map: &SphereBundleMap, connection: &Connection) -> Result<(MatrixForm, MatrixForm)> {
    if connection.rank() != map.u().target_dim() {
        return Err(Error::DimensionMismatch(format!(
            "rank-{} connection for unit vectors in R^{}",
            connection.rank(),
            map.u().target_dim()
        )));
    }
    Ok((connection.omega().pullback(map.base_map())?, connection.curvature().pullback(map.base_map())?))
}

/// Components of `u` as 0-forms; a constant map gives symbolic constants so
/// that structural zeros survive.
fn components(map: &SphereBundleMap) -> Vec<Scalar> {
    let u = map.u();
    if u.is_constant() {
        let x: Vec<f64> = (0..u.source().dim()).map(|a| u.source().lo(a)).collect();
        return u.eval(&x).into_iter().map(Scalar::constant).collect();
    }
    (0..u.target_dim()).map(|i| u.component(i)).collect()
}

/// `θ_i = du_i + Σ_j ω_ij u_j` on the source chart of `map`.
pub fn theta(map: &SphereBundleMap, connection: &Connection) -> Result<Vec<KForm>> {
    let (omega, _) = pulled_connection(map, connection)?;
    let domain = map.source();
    let r = map.u().target_dim();
    let u = components(map);
    (0..r)
        .map(|i| {
            let du = exterior_derivative(&KForm::function(domain, u[i].clone()), Fd::default());
            let rotated: Vec<KForm> = (0..r).map(|j| omega.get(i, j).mul_function(&u[j])).collect();
            let mut terms: Vec<(f64, &KForm)> = vec![(1.0, &du)];
            terms.extend(rotated.iter().map(|t| (1.0, t)));
            KForm::linear_combination(domain, 1, &terms)
        })
        .collect()
}

/// The permutation sum `Ψ_j` over all `(n+1)!` permutations, built from
/// forms with the exterior algebra of [`crate::exterior`].
pub fn psi_j(u: &[Scalar], theta: &[KForm], curvature: &MatrixForm, j: usize) -> Result<KForm> {
    let r = u.len();
    if r < 2 || theta.len() != r || curvature.size() != r {
        return Err(Error::DimensionMismatch(format!(
            "{} components, {} theta forms, {}x{} curvature",
            r,
            theta.len(),
            curvature.size(),
            curvature.size()
        )));
    }
    let n = r - 1;
    if j > n / 2 {
        return Err(Error::IndexOutOfRange(j, n / 2 + 1));
    }
    let domain = theta[0].domain();
    let mut terms = Vec::new();
    for (perm, sign) in signed_permutations(r) {
        let mut term = KForm::function(domain, u[perm[0]].scale(sign));
        for &k in &perm[1..=n - 2 * j] {
            if term.is_zero() {
                break;
            }
            term = wedge(&term, &theta[k])?;
        }
        for pair in perm[n - 2 * j + 1..].chunks(2) {
            if term.is_zero() {
                break;
            }
            term = wedge(&term, curvature.get(pair[0], pair[1]))?;
        }
        if !term.is_zero() {
            terms.push(term);
        }
    }
    let refs: Vec<(f64, &KForm)> = terms.iter().map(|t| (1.0, t)).collect();
    KForm::linear_combination(domain, n, &refs)
}

/// `Ψ` pulled back along `map`, assembled from [`psi_j`].
pub fn psi_assembled(map: &SphereBundleMap, connection: &Connection) -> Result<KForm> {
    let n = map.fiber_dim();
    let th = theta(map, connection)?;
    let (_, curvature) = pulled_connection(map, connection)?;
    let u = components(map);
    let parts = psi_weights(n)?
        .into_iter()
        .enumerate()
        .map(|(j, w)| Ok((w, psi_j(&u, &th, &curvature, j)?)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(f64, &KForm)> = parts.iter().map(|(w, f)| (*w, f)).collect();
    KForm::linear_combination(map.source(), n, &refs)
}

/// Nonzero entries of a matrix of forms, for pointwise evaluation.
struct Entries {
    size: usize,
    entries: Vec<(usize, usize, KForm)>,
    antisymmetric: bool,
}

impl Entries {
    fn new(m: &MatrixForm) -> Self {
        let size = m.size();
        let mut entries = Vec::new();
        for i in 0..size {
            for j in 0..size {
                let e = m.get(i, j);
                if !e.is_zero() {
                    entries.push((i, j, e.clone()));
                }
            }
        }
        Entries { size, entries, antisymmetric: false }
    }

    fn noise(&self) -> f64 {
        self.entries.iter().flat_map(|(_, _, e)| e.coefficients().map(|(_, c)| c.noise())).fold(0.0, f64::max)
    }

    /// Entries above the diagonal of an antisymmetric matrix; the rest are
    /// filled in by negation.
    fn upper(m: &MatrixForm) -> Self {
        let mut e = Self::new(m);
        e.entries.retain(|(i, j, _)| i < j);
        e.antisymmetric = true;
        e
    }

    fn empty(size: usize) -> Self {
        Entries { size, entries: Vec::new(), antisymmetric: false }
    }

    fn at(&self, x: &[f64]) -> Vec<Option<PointForm>> {
        let mut out = vec![None; self.size * self.size];
        for (i, j, e) in &self.entries {
            let mut p = PointForm::zero(x.len(), e.degree());
            for (idx, _) in e.coefficients() {
                p.set(idx, e.eval_coeff(idx, x));
            }
            if self.antisymmetric {
                out[j * self.size + i] = Some(p.clone().scaled(-1.0));
            }
            out[i * self.size + j] = Some(p);
        }
        out
    }

    /// Entries at `base_map(x)`, pulled back to the source of `base_map`.
    fn pulled_at(&self, base_map: &SmoothMap, x: &[f64]) -> Vec<Option<PointForm>> {
        if self.entries.is_empty() {
            return vec![None; self.size * self.size];
        }
        let jac = base_map.jacobian(x);
        let mut out = self.at(&base_map.eval(x));
        for p in out.iter_mut().flatten() {
            *p = p.pullback(&jac);
        }
        out
    }
}

/// A permutation and the signed count of permutations it stands for.
type WeightedPermutation = (Vec<usize>, f64);

/// Permutations of `0..r` whose value in the sum is unchanged by reordering
/// the `θ` block, swapping within an `Ω` pair or permuting the pairs. A
/// permutation reads as `lead` leading indices, `thetas` indices of the `θ`
/// block, then pairs. Each representative (θ block increasing, pairs
/// increasing and sorted by first entry) stands for `m!·2^j·j!` permutations,
/// and carries that multiple of its sign.
fn representatives(r: usize, lead: usize, thetas: usize) -> Vec<WeightedPermutation> {
    let pairs = (r - lead - thetas) / 2;
    let multiplicity = (factorial(thetas as u64) * (1u128 << pairs) * factorial(pairs as u64)) as f64;
    signed_permutations(r)
        .into_iter()
        .filter(|(p, _)| {
            let block = &p[lead..lead + thetas];
            let tail: Vec<&[usize]> = p[lead + thetas..].chunks(2).collect();
            block.windows(2).all(|w| w[0] < w[1]) && tail.iter().all(|c| c[0] < c[1]) && tail.windows(2).all(|w| w[0][0] < w[1][0])
        })
        .map(|(p, sign)| (p, sign * multiplicity))
        .collect()
}

/// Pointwise evaluation of `Ψ` from frozen `u`, `θ` and `Ω`: the permutation
/// sum of [`psi_j`] with equal terms collected, done in the exterior algebra
/// at one point.
struct PsiKernel {
    n: usize,
    map: SphereBundleMap,
    omega: Entries,
    curvature: Entries,
    /// Per `j`, the weight `w_j` and the representative permutations.
    terms: Vec<(f64, Vec<WeightedPermutation>)>,
}

impl PsiKernel {
    fn eval(&self, x: &[f64]) -> PointForm {
        let (n, r, dim) = (self.n, self.n + 1, x.len());
        let u = self.map.u().eval(x);
        let jac = self.map.u().jacobian(x);
        let omega = self.omega.pulled_at(self.map.base_map(), x);
        let curvature = self.curvature.pulled_at(self.map.base_map(), x);
        let theta: Vec<PointForm> = (0..r)
            .map(|i| {
                let row: Vec<f64> = (0..dim).map(|k| jac[(i, k)]).collect();
                let mut t = PointForm::covector(&row);
                for (j, uj) in u.iter().enumerate() {
                    if let Some(w) = &omega[i * r + j] {
                        t.add_scaled(*uj, w);
                    }
                }
                t
            })
            .collect();
        let mut total = PointForm::zero(dim, n);
        for (j, (w, perms)) in self.terms.iter().enumerate() {
            if j > 0 && self.curvature.entries.is_empty() {
                break;
            }
            'perm: for (perm, sign) in perms {
                let lead = sign * u[perm[0]];
                if lead == 0.0 {
                    continue;
                }
                let mut term = PointForm::scalar(dim, lead);
                for &k in &perm[1..=n - 2 * j] {
                    term = term.wedge(&theta[k]);
                }
                for pair in perm[n - 2 * j + 1..].chunks(2) {
                    match &curvature[pair[0] * r + pair[1]] {
                        Some(c) => term = term.wedge(c),
                        None => continue 'perm,
                    }
                }
                total.add_scaled(*w, &term);
            }
        }
        total
    }
}

static NEXT_KERNEL: AtomicU64 = AtomicU64::new(0);

thread_local! {
    /// Last point evaluated by a pointwise kernel on this thread. Pullbacks
    /// and quadratures ask for every coefficient at one point in a row.
    static LAST_POINT: RefCell<Option<(u64, Vec<f64>, PointForm)>> = const { RefCell::new(None) };
}

fn memoized<F>(id: u64, x: &[f64], f: &F, key: &[usize]) -> f64
where
    F: Fn(&[f64]) -> PointForm + ?Sized,
{
    let hit = LAST_POINT.with(|c| match &*c.borrow() {
        Some((k, p, v)) if *k == id && p.as_slice() == x => Some(v.get(key)),
        _ => None,
    });
    if let Some(v) = hit {
        return v;
    }
    // the kernel may itself evaluate other kernels, so the cell is not held here
    let v = f(x);
    let out = v.get(key);
    LAST_POINT.with(|c| *c.borrow_mut() = Some((id, x.to_vec(), v)));
    out
}

/// A form whose coefficients all come from one pointwise evaluator.
fn pointwise_form<F>(domain: &ChartDomain, degree: usize, noise: f64, f: F) -> Result<KForm>
where
    F: Fn(&[f64]) -> PointForm + Send + Sync + 'static,
{
    if degree > domain.dim() {
        return Ok(KForm::zero(domain, degree));
    }
    let f = Arc::new(f);
    let wrap = domain.clone();
    let id = NEXT_KERNEL.fetch_add(1, Ordering::Relaxed);
    let coeffs = increasing_subsets(domain.dim(), degree).into_iter().map(|idx| {
        let (f, wrap, key) = (f.clone(), wrap.clone(), idx.clone());
        (idx, Scalar::with_noise(move |x| memoized(id, &wrap.wrap(x), &*f, &key), noise))
    });
    KForm::from_coeffs(domain, degree, coeffs)
}

/// `Ψ` pulled back along `map`.
pub fn psi(map: &SphereBundleMap, connection: &Connection) -> Result<KForm> {
    let n = map.fiber_dim();
    if connection.rank() != n + 1 {
        return Err(Error::DimensionMismatch(format!("rank-{} connection for unit vectors in R^{}", connection.rank(), n + 1)));
    }
    // a constant base map pulls the connection back to zero
    let (omega, curvature) = if map.base_map().is_constant() {
        (Entries::empty(n + 1), Entries::empty(n + 1))
    } else {
        (Entries::upper(connection.omega()), Entries::upper(connection.curvature()))
    };
    let kernel = PsiKernel {
        n,
        map: map.clone(),
        omega,
        curvature,
        terms: psi_weights(n)?.into_iter().enumerate().map(|(j, w)| (w, representatives(n + 1, 1, n - 2 * j))).collect(),
    };
    let noise = kernel.omega.noise().max(kernel.curvature.noise()).max(map.u().jacobian_noise());
    pointwise_form(map.source(), n, noise, move |x| kernel.eval(x))
}

/// Euler curvature form of an even-rank curvature matrix,
/// `1/((4π)^{m+1}(m+1)!) Σ_τ sgn(τ) Ω_{τ0τ1} ∧ … ∧ Ω_{τ(2m)τ(2m+1)}`.
pub fn euler_form(curvature: &MatrixForm) -> Result<KForm> {
    let r = curvature.size();
    let scale = euler_normalization(r)?;
    let domain = curvature.domain();
    curvature.check_antisymmetric()?;
    let entries = Entries::upper(curvature);
    if entries.entries.is_empty() {
        return Ok(KForm::zero(domain, r));
    }
    let noise = entries.noise();
    let perms = representatives(r, 0, 0);
    pointwise_form(domain, r, noise, move |x| {
        let omega = entries.at(x);
        let mut total = PointForm::zero(x.len(), r);
        'perm: for (perm, sign) in &perms {
            let mut term = PointForm::scalar(x.len(), *sign);
            for pair in perm.chunks(2) {
                match &omega[pair[0] * r + pair[1]] {
                    Some(c) => term = term.wedge(c),
                    None => continue 'perm,
                }
            }
            total.add_scaled(scale, &term);
        }
        total
    })
}
