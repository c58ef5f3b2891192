//! Real symmetric sparse operators and Lanczos propagation `exp(-i H dt) psi`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

/// Rows above which matrix-vector products are split across the thread pool.
const PARALLEL_ROWS: usize = 1 << 14;

/// Compressed-row real symmetric matrix.
#[derive(Clone, Debug)]
pub struct SparseSymmetric {
    dim: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl SparseSymmetric {
    /// Assemble from per-row `(column, value)` lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in r {
                if last == Some(c) {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(c);
                    val.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col.len());
        }
        SparseSymmetric { dim, row_ptr, col, val }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&j) {
            Ok(k) => self.val[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Largest `|H_ij - H_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                worst = worst.max((self.val[k] - self.get(self.col[k], i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col[k])] += self.val[k];
            }
        }
        m
    }

    fn row_dot(&self, i: usize, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::default();
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            acc += x[self.col[k]] * self.val[k];
        }
        acc
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        if self.dim >= PARALLEL_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    /// `<x|H|x>`, real for a symmetric matrix.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut y = vec![Complex64::default(); self.dim];
        self.apply(x, &mut y);
        dot(x, &y).re
    }
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Maximum Krylov subspace dimension.
    pub subspace: usize,
    /// Target error per step.
    pub tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            subspace: 30,
            tol: 1e-9,
        }
    }
}

/// Lanczos propagator with reusable basis storage.
pub struct Krylov {
    opts: KrylovOptions,
    basis: Vec<Vec<Complex64>>,
    w: Vec<Complex64>,
}

impl Krylov {
    pub fn new(dim: usize, opts: KrylovOptions) -> Self {
        let m = opts.subspace.max(2);
        Krylov {
            opts,
            basis: vec![vec![Complex64::default(); dim]; m + 1],
            w: vec![Complex64::default(); dim],
        }
    }

    /// Advance `psi` by `exp(-i H dt)`, halving the step until the a-posteriori error
    /// estimate is below tolerance. Returns the number of substeps taken.
    pub fn propagate(&mut self, h: &SparseSymmetric, psi: &mut [Complex64], dt: f64) -> usize {
        let mut remaining = dt;
        let mut step = dt;
        let mut substeps = 0;
        while remaining.abs() > 0.0 {
            if step.abs() > remaining.abs() {
                step = remaining;
            }
            if self.try_step(h, psi, step) {
                remaining -= step;
                substeps += 1;
                // try to grow back after a success
                step = (step * 2.0).clamp(-dt.abs(), dt.abs());
            } else {
                step *= 0.5;
                assert!(step.abs() > 1e-300, "Krylov step underflow");
            }
        }
        substeps
    }

    fn try_step(&mut self, h: &SparseSymmetric, psi: &mut [Complex64], dt: f64) -> bool {
        let beta0 = norm(psi);
        if beta0 == 0.0 {
            return true;
        }
        let m_max = self.opts.subspace.max(2).min(h.dim());
        let inv = 1.0 / beta0;
        for (b, p) in self.basis[0].iter_mut().zip(psi.iter()) {
            *b = p * inv;
        }
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        let mut m = m_max;
        let mut residual = 0.0;
        for j in 0..m_max {
            h.apply(&self.basis[j], &mut self.w);
            let a = dot(&self.basis[j], &self.w).re;
            alpha.push(a);
            // full reorthogonalisation against the whole basis
            for k in 0..=j {
                let c = dot(&self.basis[k], &self.w);
                for (w, v) in self.w.iter_mut().zip(&self.basis[k]) {
                    *w -= c * v;
                }
            }
            let b = norm(&self.w);
            if b < 1e-12 * (a.abs() + 1.0) {
                // invariant subspace: the projection is exact
                m = j + 1;
                residual = 0.0;
                break;
            }
            residual = b;
            if j + 1 < m_max {
                beta.push(b);
                let inv = 1.0 / b;
                for (v, w) in self.basis[j + 1].iter_mut().zip(&self.w) {
                    *v = w * inv;
                }
            }
        }

        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        // c = exp(-i T dt) e1
        let mut c = vec![Complex64::default(); m];
        for k in 0..m {
            let q0 = eig.eigenvectors[(0, k)];
            let ph = Complex64::from_polar(1.0, -eig.eigenvalues[k] * dt);
            for (i, ci) in c.iter_mut().enumerate() {
                *ci += eig.eigenvectors[(i, k)] * q0 * ph;
            }
        }
        let err = beta0 * residual * c[m - 1].norm();
        if err > self.opts.tol && m == m_max && m < h.dim() {
            return false;
        }
        psi.iter_mut().for_each(|p| *p = Complex64::default());
        for (k, ck) in c.iter().enumerate() {
            let s = ck * beta0;
            for (p, v) in psi.iter_mut().zip(&self.basis[k]) {
                *p += s * v;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_evolve(h: &SparseSymmetric, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let eig = SymmetricEigen::new(h.to_dense());
        let n = h.dim();
        let mut out = vec![Complex64::default(); n];
        for k in 0..n {
            let mut overlap = Complex64::default();
            for i in 0..n {
                overlap += psi[i] * eig.eigenvectors[(i, k)];
            }
            let ph = Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
            for i in 0..n {
                out[i] += eig.eigenvectors[(i, k)] * overlap * ph;
            }
        }
        out
    }

    fn random_sparse(n: usize) -> SparseSymmetric {
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            for j in i..n {
                if (i * 31 + j * 17) % 5 == 0 || i == j {
                    let v = ((i * 7 + j * 13) % 11) as f64 / 5.0 - 1.0;
                    rows[i].push((j, v));
                    if i != j {
                        rows[j].push((i, v));
                    }
                }
            }
        }
        SparseSymmetric::from_rows(rows)
    }

    #[test]
    fn matches_dense_exponential() {
        let h = random_sparse(60);
        assert_eq!(h.asymmetry(), 0.0);
        let mut psi: Vec<Complex64> = (0..60)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let n0 = norm(&psi);
        psi.iter_mut().for_each(|p| *p /= n0);
        let want = dense_evolve(&h, &psi, 3.0);
        let mut k = Krylov::new(
            60,
            KrylovOptions {
                subspace: 12,
                tol: 1e-11,
            },
        );
        k.propagate(&h, &mut psi, 3.0);
        for (a, b) in psi.iter().zip(&want) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_operator_leaves_state() {
        let h = SparseSymmetric::from_rows(vec![Vec::new(); 5]);
        let mut psi = vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
        ];
        let before = psi.clone();
        Krylov::new(5, KrylovOptions::default()).propagate(&h, &mut psi, 1.0);
        assert_eq!(psi, before);
    }
}
