//! Sparse direct linear solves and L1 condition-number estimation.
//!
//! Systems are solved by banded LU with partial pivoting after a reverse
//! Cuthill-McKee reordering; at the mesh sizes used here (<= 4800 unknowns)
//! that is fast, deterministic, and keeps iteration counts free of inner
//! solver tolerance effects.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix must be square and non-empty")]
    NotSquare,
    #[error("entry ({row},{col}) outside {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("dimension mismatch: matrix is {n}x{n}, vector has length {len}")]
    DimensionMismatch { n: usize, len: usize },
    #[error("matrix is singular (pivot {pivot:.3e} at elimination step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("non-finite matrix entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
}

/// Square sparse matrix in compressed-row form with sorted, duplicate-free
/// column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, LinalgError> {
        if n == 0 {
            return Err(LinalgError::NotSquare);
        }
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(LinalgError::IndexOutOfRange { row: r, col: c, n });
            }
            if !v.is_finite() {
                return Err(LinalgError::NonFinite { row: r, col: c });
            }
        }
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { n, row_ptr, col_idx, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut col_sums = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                col_sums[j] += v.abs();
            }
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }
}

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns perm with perm[new] = old.
fn rcm_ordering(a: &SparseMatrix) -> Vec<usize> {
    let n = a.dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut nodes_by_degree: Vec<usize> = (0..n).collect();
    nodes_by_degree.sort_by_key(|&i| degree[i]);

    for &start in &nodes_by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            next.sort_by_key(|&v| degree[v]);
            for v in next {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Banded LU factorization (partial pivoting) of a symmetrically permuted
/// copy of the matrix. LAPACK-style band storage with kl fill rows.
pub struct LuFactors {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>, // column-major: ab[col * ldab + offset]
    ipiv: Vec<usize>,
    perm: Vec<usize>, // perm[new] = old
}

pub fn factorize(a: &SparseMatrix) -> Result<LuFactors, LinalgError> {
    let n = a.dim();
    let perm = rcm_ordering(a);
    let mut perm_inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        perm_inv[old] = new;
    }

    let (mut kl, mut ku) = (0usize, 0usize);
    for i in 0..n {
        let pi = perm_inv[i];
        for (j, _) in a.row(i) {
            let pj = perm_inv[j];
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
    }

    let kv = kl + ku; // superdiagonals of U including pivoting fill
    let ldab = 2 * kl + ku + 1;
    let mut ab = vec![0.0; ldab * n];
    for i in 0..n {
        let pi = perm_inv[i];
        for (j, v) in a.row(i) {
            let pj = perm_inv[j];
            ab[pj * ldab + (kv + pi - pj)] += v;
        }
    }

    let mut ipiv = vec![0usize; n];
    // rightmost column touched by pivoting so far; row swaps and updates
    // must extend this far because earlier pivots spread fill rightward
    let mut ju = 0usize;
    for j in 0..n {
        let km = kl.min(n - 1 - j);
        // pivot search among rows j..=j+km of column j
        let (mut jp, mut best) = (0usize, 0.0f64);
        for p in 0..=km {
            let v = ab[j * ldab + kv + p].abs();
            if v > best {
                best = v;
                jp = p;
            }
        }
        ipiv[j] = j + jp;
        let pivot = ab[j * ldab + kv + jp];
        if pivot.abs() < 1e-300 {
            return Err(LinalgError::Singular { step: j, pivot });
        }
        ju = ju.max((j + ku + jp).min(n - 1));
        if jp != 0 {
            for col in j..=ju {
                ab.swap(col * ldab + kv + j + jp - col, col * ldab + kv + j - col);
            }
        }
        if km > 0 {
            let inv = 1.0 / ab[j * ldab + kv];
            for p in 1..=km {
                ab[j * ldab + kv + p] *= inv;
            }
            for col in j + 1..=ju {
                let u = ab[col * ldab + kv + j - col];
                if u != 0.0 {
                    let (mult, rest) = ab.split_at_mut(col * ldab);
                    let mcol = &mult[j * ldab + kv..j * ldab + kv + km + 1];
                    let ucol = &mut rest[kv + j - col..kv + j - col + km + 1];
                    for p in 1..=km {
                        ucol[p] -= mcol[p] * u;
                    }
                }
            }
        }
    }

    Ok(LuFactors { n, kl, ku, ldab, ab, ipiv, perm })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch { n: self.n, len: b.len() });
        }
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        let mut y: Vec<f64> = (0..n).map(|r| b[self.perm[r]]).collect();
        for j in 0..n.saturating_sub(1) {
            let jp = self.ipiv[j];
            if jp != j {
                y.swap(j, jp);
            }
            let km = kl.min(n - 1 - j);
            let yj = y[j];
            if yj != 0.0 {
                for p in 1..=km {
                    y[j + p] -= self.ab[j * ldab + kv + p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let yj = y[j] / self.ab[j * ldab + kv];
            y[j] = yj;
            let lo = j.saturating_sub(kv);
            if yj != 0.0 {
                for i in lo..j {
                    y[i] -= self.ab[j * ldab + kv + i - j] * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }

    /// Solves A^T x = b; used by the 1-norm estimator.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch { n: self.n, len: b.len() });
        }
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        let mut y: Vec<f64> = (0..n).map(|r| b[self.perm[r]]).collect();
        // U^T y = b (forward)
        for j in 0..n {
            let lo = j.saturating_sub(kv);
            let mut s = y[j];
            for i in lo..j {
                s -= self.ab[j * ldab + kv + i - j] * y[i];
            }
            y[j] = s / self.ab[j * ldab + kv];
        }
        // L^T with interleaved row swaps, in reverse
        for j in (0..n.saturating_sub(1)).rev() {
            let km = kl.min(n - 1 - j);
            let mut s = y[j];
            for p in 1..=km {
                s -= self.ab[j * ldab + kv + p] * y[j + p];
            }
            y[j] = s;
            let jp = self.ipiv[j];
            if jp != j {
                y.swap(j, jp);
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }
}

/// Direct solve with the residual guarantee of LU with partial pivoting.
pub fn solve_direct(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    factorize(a)?.solve(b)
}

fn norm1_vec(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// How cond1 computes the inverse norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CondMode {
    /// Exact column sweep up to dimension 2000, estimator above.
    #[default]
    Auto,
    ForceExact,
    ForceEstimate,
}

const COND_EXACT_LIMIT: usize = 2000;

/// L1 condition number ||A||_1 ||A^-1||_1. Singular matrices yield +infinity.
pub fn cond1(a: &SparseMatrix) -> f64 {
    cond1_mode(a, CondMode::Auto)
}

pub fn cond1_mode(a: &SparseMatrix, mode: CondMode) -> f64 {
    let factors = match factorize(a) {
        Ok(f) => f,
        Err(_) => return f64::INFINITY,
    };
    cond1_with_factors(a, &factors, mode)
}

/// Same as cond1 but reuses an existing factorization of `a`.
pub fn cond1_with_factors(a: &SparseMatrix, factors: &LuFactors, mode: CondMode) -> f64 {
    let norm_a = a.norm1();
    let n = a.dim();
    let exact = match mode {
        CondMode::Auto => n <= COND_EXACT_LIMIT,
        CondMode::ForceExact => true,
        CondMode::ForceEstimate => false,
    };
    let norm_inv = if exact {
        let mut best: f64 = 0.0;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            match factors.solve(&e) {
                Ok(x) => best = best.max(norm1_vec(&x)),
                Err(_) => return f64::INFINITY,
            }
            e[j] = 0.0;
        }
        best
    } else {
        onenormest_inverse(factors)
    };
    if !norm_inv.is_finite() {
        return f64::INFINITY;
    }
    norm_a * norm_inv
}

/// Hager/Higham style estimate of ||A^-1||_1 from a handful of solves with
/// A and A^T.
fn onenormest_inverse(f: &LuFactors) -> f64 {
    let n = f.dim();
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    let mut prev_sign: Vec<f64> = Vec::new();
    for iter in 0..5 {
        let y = match f.solve(&x) {
            Ok(y) => y,
            Err(_) => return f64::INFINITY,
        };
        est = norm1_vec(&y);
        let sign: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        if sign == prev_sign {
            break;
        }
        let z = match f.solve_transpose(&sign) {
            Ok(z) => z,
            Err(_) => return f64::INFINITY,
        };
        let (mut jmax, mut zmax) = (0usize, 0.0f64);
        for (j, &v) in z.iter().enumerate() {
            if v.abs() > zmax {
                zmax = v.abs();
                jmax = j;
            }
        }
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if iter > 0 && zmax <= ztx.abs() {
            break;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        x[jmax] = 1.0;
        prev_sign = sign;
    }
    // alternating test vector guards against underestimates
    let b: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        })
        .collect();
    if let Ok(y) = f.solve(&b) {
        est = est.max(2.0 * norm1_vec(&y) / (3.0 * n as f64));
    }
    est
}

/// Running average of condition numbers over the solves of one simulation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CondStats {
    sum: f64,
    count: usize,
}

impl CondStats {
    pub fn record(&mut self, value: f64) {
        self.sum += value;
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn average(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    pub fn merge(&mut self, other: &CondStats) {
        self.sum += other.sum;
        self.count += other.count;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dominant(n: usize, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            let mut offdiag = 0.0;
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    offdiag += v.abs();
                    t.push((i, j, v));
                }
            }
            t.push((i, i, offdiag + rng.gen_range(1.0..2.0)));
        }
        SparseMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn identity_solve() {
        let a = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let x = solve_direct(&a, &[3.0, -1.0, 2.5]).unwrap();
        assert_eq!(x, vec![3.0, -1.0, 2.5]);
    }

    #[test]
    fn diagonal_solve() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let x = solve_direct(&a, &[2.0, 4.0]).unwrap();
        assert_relative_eq!(x[0], 1.0);
        assert_relative_eq!(x[1], 1.0);
    }

    #[test]
    fn random_system_residual_within_contract() {
        let a = random_dominant(50, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solve_direct(&a, &b).unwrap();
        let r = a.matvec(&x);
        let res_inf = r.iter().zip(&b).map(|(ri, bi)| (ri - bi).abs()).fold(0.0, f64::max);
        let x_inf = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let b_inf = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(res_inf <= 1e-10 * (a.norm1() * x_inf + b_inf));
    }

    #[test]
    fn solve_matches_dense_oracle() {
        let a = random_dominant(40, 3);
        let mut dense = nalgebra::DMatrix::<f64>::zeros(40, 40);
        for i in 0..40 {
            for (j, v) in a.row(i) {
                dense[(i, j)] += v;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solve_direct(&a, &b).unwrap();
        let xo = dense.clone().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        for i in 0..40 {
            assert_relative_eq!(x[i], xo[i], max_relative = 1e-9, epsilon = 1e-11);
        }
        // transpose solve against dense oracle
        let f = factorize(&a).unwrap();
        let xt = f.solve_transpose(&b).unwrap();
        let xto = dense.transpose().lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..40 {
            assert_relative_eq!(xt[i], xto[i], max_relative = 1e-9, epsilon = 1e-11);
        }
    }

    #[test]
    fn singular_matrix_reported() {
        let a =
            SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)])
                .unwrap();
        assert!(matches!(solve_direct(&a, &[1.0, 1.0]), Err(LinalgError::Singular { .. })));
        assert_eq!(cond1(&a), f64::INFINITY);
    }

    #[test]
    fn cond1_identity_and_diag() {
        let eye = SparseMatrix::from_triplets(4, &(0..4).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
            .unwrap();
        assert_relative_eq!(cond1(&eye), 1.0);
        let d = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert_relative_eq!(cond1(&d), 2.0);
    }

    #[test]
    fn cond1_scale_invariant_and_at_least_one() {
        let a = random_dominant(30, 5);
        let scaled = {
            let t: Vec<(usize, usize, f64)> =
                (0..30).flat_map(|i| a.row(i).map(move |(j, v)| (i, j, 7.5 * v))).collect();
            SparseMatrix::from_triplets(30, &t).unwrap()
        };
        let c = cond1(&a);
        assert!(c >= 1.0);
        assert_relative_eq!(cond1(&scaled), c, max_relative = 1e-12);
    }

    #[test]
    fn estimator_within_factor_three_of_exact() {
        for seed in 0..8 {
            let a = random_dominant(120, 100 + seed);
            let exact = cond1_mode(&a, CondMode::ForceExact);
            let est = cond1_mode(&a, CondMode::ForceEstimate);
            assert!(
                est <= exact * 1.0000001 && est >= exact / 3.0,
                "estimate {est} vs exact {exact} (seed {seed})"
            );
        }
    }

    #[test]
    fn cond_stats_average() {
        let mut s = CondStats::default();
        assert_eq!(s.average(), None);
        s.record(2.0);
        s.record(4.0);
        assert_relative_eq!(s.average().unwrap(), 3.0);
        assert_eq!(s.count(), 2);
    }

    #[test]
    fn from_triplets_merges_duplicates_and_sorts() {
        let a = SparseMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 0, 2.0), (0, 1, 3.0), (1, 1, 1.0)])
            .unwrap();
        let row0: Vec<(usize, f64)> = a.row(0).collect();
        assert_eq!(row0, vec![(0, 2.0), (1, 4.0)]);
    }

    #[test]
    fn banded_structure_survives_permutation() {
        // tridiagonal system solved exactly
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, &t).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&xs);
        let x = solve_direct(&a, &b).unwrap();
        for i in 0..n {
            assert_relative_eq!(x[i], xs[i], max_relative = 1e-8, epsilon = 1e-10);
        }
    }
}
