//! Sparse complex matrices, dense Hermitian eigendecomposition, a Lanczos
//! ground-state solver and matrix exponentials.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Compressed sparse row matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        Self::from_triplets(diag.len(), diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut t: Vec<(usize, usize, Complex64)> = triplets.into_iter().collect();
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows_of.into_iter().zip(col_idx).zip(values) {
            if v != Complex64::zero() {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, col_idx: keep_cols, values: keep_vals }
    }

    /// Builds column by column: `column(j)` lists the nonzeros `(row, value)`
    /// of column `j`.
    pub fn from_columns(nrows: usize, ncols: usize, mut column: impl FnMut(usize) -> Vec<(usize, Complex64)>) -> Self {
        let mut triplets = Vec::new();
        for j in 0..ncols {
            triplets.extend(column(j).into_iter().map(|(i, v)| (i, j, v)));
        }
        Self::from_triplets(nrows, ncols, triplets)
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != Complex64::zero() {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => Complex64::zero(),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols, "matrix-vector dimension mismatch");
        let mut y = vec![Complex64::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = Complex64::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: Complex64, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch");
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().chain(other.triplets().map(|(r, c, v)| (r, c, alpha * v))),
        )
    }

    /// Sparse product `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "product dimension mismatch");
        let mut t = Vec::new();
        let mut acc = vec![Complex64::zero(); other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.ncols];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (mid, a) = (self.col_idx[k], self.values[k]);
                for l in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.col_idx[l];
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * other.values[l];
                }
            }
            for &c in &touched {
                t.push((r, c, acc[c]));
                acc[c] = Complex64::zero();
                mark[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry modulus of `self - other`.
    pub fn defect(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// Largest entry modulus of `self - self^†`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.defect(&self.adjoint())
    }

    /// Induced 1-norm (max column sum), an upper bound for the spectral norm
    /// together with [`Self::norm_inf`].
    pub fn norm_1(&self) -> f64 {
        let mut cols = vec![0.0; self.ncols];
        for (_, c, v) in self.triplets() {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.values[k].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a, b>`, antilinear in `a`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns) of a
/// Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn dense_hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Lowest eigenpair of a sparse Hermitian matrix.
#[derive(Debug, Clone)]
pub struct LowestEigenpair {
    pub value: f64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Settings for [`lanczos_lowest`].
#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov dimension per restart cycle.
    pub krylov_dim: usize,
    /// Maximum number of restart cycles.
    pub max_restarts: usize,
    /// Target for `||H v - E v||`.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov_dim: 80, max_restarts: 200, tol: 1e-10 }
    }
}

/// Explicitly restarted Lanczos with full reorthogonalization, started from
/// the normalized all-ones vector so the result is deterministic.
pub fn lanczos_lowest(h: &SparseMatrix, opts: LanczosOptions) -> Result<LowestEigenpair> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: h.ncols() });
    }
    let start = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut v0 = vec![start; n];
    let mut best: Option<LowestEigenpair> = None;
    let m_max = opts.krylov_dim.min(n).max(1);

    for cycle in 0..opts.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m_max);
        let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);
        basis.push(v0.clone());
        let mut w = vec![Complex64::zero(); n];
        loop {
            let j = basis.len() - 1;
            h.mul_vec_into(&basis[j], &mut w);
            let alpha = inner(&basis[j], &w).re;
            alphas.push(alpha);
            // Full reorthogonalization, applied twice for stability.
            for _ in 0..2 {
                for q in &basis {
                    let c = inner(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let beta = norm(&w);
            if basis.len() == m_max || beta < 1e-13 * alpha.abs().max(1.0) {
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|z| z / beta).collect());
        }
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = t.symmetric_eigen();
        let (k, _) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let y = eig.eigenvectors.column(k);
        let mut x = vec![Complex64::zero(); n];
        for (i, q) in basis.iter().enumerate() {
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi += qi * y[i];
            }
        }
        let nx = norm(&x);
        for xi in &mut x {
            *xi /= nx;
        }
        let hx = h.mul_vec(&x);
        let value = inner(&x, &hx).re;
        let residual = norm(&hx.iter().zip(&x).map(|(a, b)| a - b * value).collect::<Vec<_>>());
        let pair = LowestEigenpair { value, vector: x.clone(), residual, iterations: cycle + 1 };
        if residual <= opts.tol {
            return Ok(pair);
        }
        best = Some(pair);
        v0 = x;
    }
    let defect = best.map(|b| b.residual).unwrap_or(f64::INFINITY);
    Err(Error::NonConvergent { what: "Lanczos ground-state iteration", defect })
}

/// `exp(a)` for a dense matrix by scaling and squaring with a Taylor series
/// truncated once terms fall below `1e-16` relative.
pub fn expm_dense(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm1 * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = a.scale(scale);
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..64 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
        let tn: f64 = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if tn < 1e-17 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(t * a) v` without forming the exponential: the interval is split so
/// each step has `||t a|| / steps <= 1`, and each step's Taylor series runs
/// until the term norm drops below `1e-16 ||v||`.
pub fn expm_apply(a: &SparseMatrix, t: Complex64, v: &[Complex64]) -> Vec<Complex64> {
    let bound = a.norm_1().min(a.norm_inf()) * t.norm();
    let steps = (bound.ceil() as usize).max(1);
    let dt = t / steps as f64;
    let mut x = v.to_vec();
    let scale = norm(v).max(f64::MIN_POSITIVE);
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for k in 1..200 {
            let next = a.mul_vec(&term);
            let factor = dt / k as f64;
            term = next.into_iter().map(|z| z * factor).collect();
            for (s, z) in acc.iter_mut().zip(&term) {
                *s += z;
            }
            if norm(&term) < 1e-17 * scale {
                break;
            }
        }
        x = acc;
    }
    x
}
