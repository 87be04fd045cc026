//! One-dimensional rules.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Roots of `P_n` by Newton iteration from the Chebyshev-like initial
/// guesses; the rule is mirrored so that nodes are exactly symmetric.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre on `[lo, hi]` with `cells` equal cells.
pub fn composite_gauss(lo: f64, hi: f64, order: usize, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(order);
    let h = (hi - lo) / cells as f64;
    let mut nodes = Vec::with_capacity(order * cells);
    let mut weights = Vec::with_capacity(order * cells);
    for c in 0..cells {
        let a = lo + c as f64 * h;
        for (ti, wi) in t.iter().zip(&w) {
            nodes.push(a + 0.5 * h * (1.0 + ti));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Trapezoid rule for a periodic axis: `points` equally spaced nodes, equal weights.
pub fn periodic_trapezoid(lo: f64, hi: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / points as f64;
    ((0..points).map(|k| lo + k as f64 * h).collect(), vec![h; points])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_are_symmetric() {
        for n in [1, 2, 5, 12, 24, 32, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14, "n = {n}");
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn exact_for_degree_two_n_minus_one() {
        for n in [3, 8, 24] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            // ∫_{-1}^{1} (x^deg + x^(deg-1)) dx = 2/deg (deg odd)
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * (xi.powi(deg as i32) + xi.powi(deg as i32 - 1))).sum();
            assert!((q - 2.0 / deg as f64).abs() < 1e-14, "n = {n}: {q}");
        }
    }

    #[test]
    fn trapezoid_is_exact_for_low_trig() {
        let (x, w) = periodic_trapezoid(0.0, std::f64::consts::TAU, 16);
        let q: f64 = x.iter().zip(&w).map(|(t, h)| h * (3.0 * t).cos().powi(2)).sum();
        assert!((q - PI).abs() < 1e-14);
    }
}
