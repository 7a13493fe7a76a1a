//! Maximum-weight perfect matching via the O(n³) Hungarian algorithm
//! (potentials + shortest augmenting paths).

/// Reusable buffers for repeated solves of the same size.
#[derive(Clone, Debug)]
pub struct Hungarian {
    n: usize,
    u: Vec<i64>,
    v: Vec<i64>,
    p: Vec<usize>,
    way: Vec<usize>,
    minv: Vec<i64>,
    used: Vec<bool>,
}

impl Hungarian {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            u: vec![0; n + 1],
            v: vec![0; n + 1],
            p: vec![0; n + 1],
            way: vec![0; n + 1],
            minv: vec![0; n + 1],
            used: vec![false; n + 1],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Finds `perm` maximizing `Σ_i weight(i, perm[i])`, writing it into
    /// `perm` (row `i` is matched to column `perm[i]`).
    ///
    /// Ties are broken by the fixed scan order; all-equal weights give the
    /// identity.
    pub fn solve_max<F: Fn(usize, usize) -> i64>(&mut self, weight: F, perm: &mut [usize]) {
        let n = self.n;
        assert_eq!(perm.len(), n);
        const INF: i64 = i64::MAX / 4;
        self.u.fill(0);
        self.v.fill(0);
        self.p.fill(0);
        self.way.fill(0);
        // Minimize the negated weights; rows and columns are 1-based here,
        // with index 0 as the virtual root.
        let cost = |i: usize, j: usize| -weight(i - 1, j - 1);
        for i in 1..=n {
            self.p[0] = i;
            let mut j0 = 0;
            self.minv.fill(INF);
            self.used.fill(false);
            loop {
                self.used[j0] = true;
                let i0 = self.p[j0];
                let mut delta = INF;
                let mut j1 = 0;
                for j in 1..=n {
                    if !self.used[j] {
                        let cur = cost(i0, j) - self.u[i0] - self.v[j];
                        if cur < self.minv[j] {
                            self.minv[j] = cur;
                            self.way[j] = j0;
                        }
                        if self.minv[j] < delta {
                            delta = self.minv[j];
                            j1 = j;
                        }
                    }
                }
                for j in 0..=n {
                    if self.used[j] {
                        self.u[self.p[j]] += delta;
                        self.v[j] -= delta;
                    } else {
                        self.minv[j] -= delta;
                    }
                }
                j0 = j1;
                if self.p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = self.way[j0];
                self.p[j0] = self.p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        for j in 1..=n {
            perm[self.p[j] - 1] = j - 1;
        }
    }
}
