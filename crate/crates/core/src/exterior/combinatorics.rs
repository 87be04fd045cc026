//! Multi-index and permutation helpers.

/// Increasing multi-index into the coordinate axes of a chart (0-based).
pub type MultiIndex = Vec<usize>;

/// All increasing multi-indices of length `k` drawn from `0..n`.
pub fn increasing_subsets(n: usize, k: usize) -> Vec<MultiIndex> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

pub fn is_increasing(idx: &[usize]) -> bool {
    idx.windows(2).all(|w| w[0] < w[1])
}

/// Sorts `idx` and returns the sign of the sorting permutation, or `None`
/// when an index repeats.
pub fn sort_with_sign(idx: &[usize]) -> Option<(MultiIndex, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    // insertion sort counting transpositions; lengths are tiny
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

/// All permutations of `0..n` paired with their signs, in lexicographic order.
pub fn signed_permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    loop {
        let sign = permutation_sign(&perm);
        out.push((perm.clone(), sign));
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).expect("successor exists");
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    out
}

pub fn permutation_sign(perm: &[usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Determinant of a small dense row-major `k×k` matrix by partial pivoting.
pub fn det_small(mut m: Vec<f64>, k: usize) -> f64 {
    match k {
        0 => return 1.0,
        1 => return m[0],
        2 => return m[0] * m[3] - m[1] * m[2],
        _ => {}
    }
    let mut det = 1.0;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| m[a * k + col].abs().total_cmp(&m[b * k + col].abs()))
            .expect("non-empty");
        if m[pivot * k + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..k {
                m.swap(pivot * k + c, col * k + c);
            }
            det = -det;
        }
        let p = m[col * k + col];
        det *= p;
        for r in col + 1..k {
            let f = m[r * k + col] / p;
            if f != 0.0 {
                for c in col..k {
                    m[r * k + c] -= f * m[col * k + c];
                }
            }
        }
    }
    det
}

pub fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}

/// `n!!` with the convention `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> u128 {
    if n <= 0 {
        return 1;
    }
    let mut acc: u128 = 1;
    let mut k = n as u128;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}
