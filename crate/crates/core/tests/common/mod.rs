//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's linear algebra or assignment code.

#![allow(dead_code)]

/// Dense switch incidence matrix, rows `i + n j`, built from the definition.
pub fn switch_b(n: usize) -> Vec<Vec<f64>> {
    let mut b = vec![vec![0.0; 2 * n]; n * n];
    for j in 0..n {
        for i in 0..n {
            b[i + n * j][i] = 1.0;
            b[i + n * j][n + j] = 1.0;
        }
    }
    b
}

/// Solves `A x = y` by Gaussian elimination with partial pivoting.
/// Returns `None` for a numerically singular system.
#[allow(clippy::needless_range_loop)]
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut y: Vec<f64>) -> Option<Vec<f64>> {
    let n = y.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        y.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            y[r] -= f * y[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (y[r] - s) / a[r][r];
    }
    Some(x)
}

/// Least squares on the chosen columns via the normal equations.
pub fn least_squares(b: &[Vec<f64>], cols: &[usize], x: &[f64]) -> Option<Vec<f64>> {
    let k = cols.len();
    let mut g = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (p, &cp) in cols.iter().enumerate() {
        for (q, &cq) in cols.iter().enumerate() {
            g[p][q] = b.iter().map(|row| row[cp] * row[cq]).sum();
        }
        rhs[p] = b.iter().zip(x).map(|(row, xi)| row[cp] * xi).sum();
    }
    gauss_solve(g, rhs)
}

pub fn combine(b: &[Vec<f64>], cols: &[usize], w: &[f64]) -> Vec<f64> {
    b.iter()
        .map(|row| cols.iter().zip(w).map(|(&c, wc)| row[c] * wc).sum())
        .collect()
}

/// Projection onto the column space of the switch `B`: the null direction
/// `[1; -1]` is removed by dropping the last column.
pub fn subspace_oracle(n: usize, x: &[f64]) -> Vec<f64> {
    let b = switch_b(n);
    let cols: Vec<usize> = (0..2 * n - 1).collect();
    let w = least_squares(&b, &cols, x).expect("remaining columns independent");
    combine(&b, &cols, &w)
}

/// Cone projection by enumerating every passive set of columns, keeping the
/// feasible (non-negative) unconstrained solutions and taking the best.
pub fn cone_oracle(n: usize, x: &[f64]) -> Vec<f64> {
    let b = switch_b(n);
    let m = 2 * n;
    let mut best = vec![0.0; n * n];
    let mut best_obj: f64 = x.iter().map(|v| v * v).sum();
    for mask in 1u32..(1 << m) {
        let cols: Vec<usize> = (0..m).filter(|&c| mask & (1 << c) != 0).collect();
        let Some(w) = least_squares(&b, &cols, x) else {
            continue;
        };
        if w.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let p = combine(&b, &cols, &w);
        let obj: f64 = x.iter().zip(&p).map(|(a, c)| (a - c).powi(2)).sum();
        if obj < best_obj - 1e-13 {
            best_obj = obj;
            best = p;
        }
    }
    best
}

/// Maximum of `Σ_i q[i + n perm(i)]` over all permutations.
pub fn max_weight_brute(q: &[u32], n: usize) -> u64 {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |p| {
        let w = p
            .iter()
            .enumerate()
            .map(|(i, &j)| q[i + n * j] as u64)
            .sum();
        best = best.max(w);
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}
