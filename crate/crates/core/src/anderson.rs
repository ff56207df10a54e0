//! Anderson acceleration AA(m) for fixed-point iterations x = g(x).
//!
//! The accelerated iterate is the combination sum_i alpha_i g(x_i) over the
//! last m_k+1 iterates, with alpha minimizing the combined residual norm
//! under the constraint sum alpha_i = 1. AA(0) reproduces the plain
//! iteration. The damping parameter is fixed at 1.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

/// History and depth of one accelerated loop. Use one state per loop
/// instance and reset it at every new time step or sub-solve.
#[derive(Debug, Clone)]
pub struct AndersonState {
    m: usize,
    k: usize,
    gs: VecDeque<Vec<f64>>,
    fs: VecDeque<Vec<f64>>,
    last_alpha: Option<Vec<f64>>,
}

impl AndersonState {
    pub fn new(m: usize) -> Self {
        AndersonState {
            m,
            k: 0,
            gs: VecDeque::with_capacity(m + 2),
            fs: VecDeque::with_capacity(m + 2),
            last_alpha: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.m
    }

    /// Number of (iterate, residual) pairs currently stored.
    pub fn history_len(&self) -> usize {
        self.fs.len()
    }

    /// Weights used by the most recent step.
    pub fn last_alpha(&self) -> Option<&[f64]> {
        self.last_alpha.as_deref()
    }

    /// Clears history and counter; the depth is retained.
    pub fn reset(&mut self) {
        self.k = 0;
        self.gs.clear();
        self.fs.clear();
        self.last_alpha = None;
    }

    /// Consumes the pair (x_k, g(x_k)) and returns the next iterate.
    ///
    /// With m = 0, or on the first call, this is g(x_k) unchanged. The
    /// constrained least-squares problem is solved through the residual
    /// difference reformulation, which satisfies the sum constraint exactly;
    /// rank-deficient histories fall back to the smallest-norm solution via
    /// a truncated SVD.
    pub fn step(&mut self, x_k: &[f64], gx_k: &[f64]) -> Vec<f64> {
        assert_eq!(x_k.len(), gx_k.len());
        let f_k: Vec<f64> = gx_k.iter().zip(x_k).map(|(g, x)| g - x).collect();
        self.gs.push_back(gx_k.to_vec());
        self.fs.push_back(f_k);
        while self.fs.len() > self.m + 1 {
            self.fs.pop_front();
            self.gs.pop_front();
        }
        self.k += 1;

        let cols = self.fs.len();
        if cols == 1 || self.m == 0 {
            self.last_alpha = Some(vec![1.0]);
            return gx_k.to_vec();
        }

        let n = x_k.len();
        let mk = cols - 1;
        let f_last = DVector::from_column_slice(&self.fs[mk]);
        let mut df = DMatrix::zeros(n, mk);
        for c in 0..mk {
            for r in 0..n {
                df[(r, c)] = self.fs[c + 1][r] - self.fs[c][r];
            }
        }
        let svd = df.svd(true, true);
        let gamma = svd
            .solve(&f_last, 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE))
            .unwrap_or_else(|_| DVector::zeros(mk));

        let mut alpha = vec![0.0; cols];
        alpha[0] = gamma[0];
        for i in 1..mk {
            alpha[i] = gamma[i] - gamma[i - 1];
        }
        alpha[mk] = 1.0 - gamma[mk - 1];

        let mut x_next = vec![0.0; n];
        for (i, g) in self.gs.iter().enumerate() {
            let a = alpha[i];
            if a != 0.0 {
                for r in 0..n {
                    x_next[r] += a * g[r];
                }
            }
        }
        self.last_alpha = Some(alpha);
        x_next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn depth_zero_is_plain_iteration() {
        let mut aa = AndersonState::new(0);
        let out = aa.step(&[0.5, 1.0], &[0.7, 0.9]);
        assert_eq!(out, vec![0.7, 0.9]);
        let out = aa.step(&[0.7, 0.9], &[0.8, 0.85]);
        assert_eq!(out, vec![0.8, 0.85]);
    }

    #[test]
    fn scalar_affine_example() {
        // g(x) = x/2 + 1 with fixed point 2
        let g = |x: f64| 0.5 * x + 1.0;
        let mut aa = AndersonState::new(1);
        let x0 = 0.0;
        let x1 = aa.step(&[x0], &[g(x0)]);
        assert_eq!(x1[0], 1.0);
        let x2 = aa.step(&x1, &[g(x1[0])]);
        let alpha = aa.last_alpha().unwrap();
        assert_relative_eq!(alpha[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(alpha[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(x2[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn affine_maps_reach_fixed_point_in_dim_plus_one_steps() {
        for dim in 1..=5usize {
            let mut rng = ChaCha8Rng::seed_from_u64(10 + dim as u64);
            // contractive affine map g(x) = Ax + b
            let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.gen_range(-0.4..0.4));
            let b = DVector::<f64>::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            let exact = (DMatrix::identity(dim, dim) - &a).lu().solve(&b).unwrap();

            let mut aa = AndersonState::new(dim);
            let mut x = DVector::<f64>::zeros(dim);
            let mut reached = false;
            for _ in 0..=dim + 1 {
                let gx = &a * &x + &b;
                let next = aa.step(x.as_slice(), gx.as_slice());
                x = DVector::from_vec(next);
                if (&x - &exact).amax() <= 1e-10 {
                    reached = true;
                    break;
                }
            }
            assert!(reached, "dim {dim} did not reach the fixed point");
        }
    }

    #[test]
    fn converged_iterate_is_fixed() {
        let mut aa = AndersonState::new(3);
        let x = vec![0.3, -0.2, 1.0];
        aa.step(&[0.0, 0.0, 0.0], &[0.5, 0.5, 0.5]);
        aa.step(&[0.5, 0.5, 0.5], &[0.4, 0.1, 0.8]);
        let out = aa.step(&x, &x); // g(x) = x: residual zero
        for i in 0..3 {
            assert_relative_eq!(out[i], x[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn alpha_sums_to_one_and_history_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut aa = AndersonState::new(3);
        let mut x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..20 {
            let gx: Vec<f64> = x.iter().map(|v| 0.3 * v + 0.1 + rng.gen_range(-0.01..0.01)).collect();
            x = aa.step(&x, &gx);
            let sum: f64 = aa.last_alpha().unwrap().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            assert!(aa.history_len() <= 4);
        }
    }

    #[test]
    fn reset_behaves_like_fresh_state() {
        let mut aa = AndersonState::new(2);
        aa.step(&[1.0], &[2.0]);
        aa.step(&[2.0], &[2.5]);
        aa.reset();
        assert_eq!(aa.depth(), 2);
        assert_eq!(aa.history_len(), 0);
        let mut fresh = AndersonState::new(2);
        assert_eq!(aa.step(&[1.0], &[2.0]), fresh.step(&[1.0], &[2.0]));
        aa.reset();
        aa.reset(); // idempotent
        assert_eq!(aa.history_len(), 0);
    }
}
