//! Eigendecomposition of the PMI matrix and the rank-k embedding `E = U·√Σ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pmi::PmiMatrix;

/// Eigenpairs sorted by descending eigenvalue.
///
/// A spectrum from [`eigendecompose`] is complete (`len() == n()`); one from
/// [`eigendecompose_top_k`] holds only the leading pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// `n × len()`, column `c` pairs with `eigenvalues[c]`.
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// Sorts the pairs descending and fixes eigenvector signs so that the
    /// largest-magnitude component is positive (lowest index on ties).
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        if eigenvectors.ncols() != eigenvalues.len() || eigenvalues.len() > eigenvectors.nrows() {
            return Err(Error::Argument(format!(
                "{} eigenvalues do not match a {}x{} eigenvector block",
                eigenvalues.len(),
                eigenvectors.nrows(),
                eigenvectors.ncols()
            )));
        }
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let n = eigenvectors.nrows();
        let mut vectors = DMatrix::zeros(n, order.len());
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eigenvectors.column(src).into_owned();
            let mut pivot = 0;
            for i in 1..n {
                if col[i].abs() > col[pivot].abs() {
                    pivot = i;
                }
            }
            if n > 0 && col[pivot] < 0.0 {
                col.neg_mut();
            }
            vectors.set_column(dst, &col);
        }
        Ok(Self {
            eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
            eigenvectors: vectors,
        })
    }

    /// Dimension of the decomposed matrix.
    pub fn n(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Number of eigenpairs held.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.len() == self.n()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `U·diag(λ)·Uᵗ` over the held pairs, with eigenvalues below zero
    /// replaced by zero when `clamp` is set.
    pub fn reconstruct(&self, clamp: bool) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (c, &l) in self.eigenvalues.iter().enumerate() {
            let l = if clamp { l.max(0.0) } else { l };
            scaled.column_mut(c).scale_mut(l);
        }
        scaled * self.eigenvectors.transpose()
    }
}

/// Full dense eigendecomposition of the PMI matrix.
pub fn eigendecompose(m: &PmiMatrix) -> Result<Spectrum> {
    eigendecompose_dense(m.to_dense())
}

const DENSE_MAX_ITER: usize = 10_000;

/// Full eigendecomposition of a dense symmetric matrix.
pub fn eigendecompose_dense(m: DMatrix<f64>) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::Argument(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, DENSE_MAX_ITER).ok_or(Error::NoConvergence {
        iterations: DENSE_MAX_ITER,
        residual: f64::NAN,
    })?;
    Spectrum::new(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Converged when every wanted Ritz residual is below `tol · max(1, |λ₁|)`.
    pub tol: f64,
    /// Start-vector seed.
    pub seed: u64,
    /// Iterations between convergence checks.
    pub check_every: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            seed: 0x5eed,
            check_every: 4,
        }
    }
}

/// Leading `k` eigenpairs by Lanczos iteration with full reorthogonalization.
///
/// The Krylov basis grows until the `k` largest Ritz pairs converge; on
/// breakdown the iteration restarts from a fresh random vector orthogonal to
/// the basis, so in the worst case the basis spans the whole space and the
/// result is exact.
pub fn eigendecompose_top_k(m: &PmiMatrix, k: usize, options: LanczosOptions) -> Result<Spectrum> {
    let n = m.n();
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k={k} must lie in [1, {n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut alpha: Vec<f64> = Vec::with_capacity(n);
    let mut beta: Vec<f64> = Vec::with_capacity(n);
    let mut w = vec![0.0; n];

    let mut v = random_orthogonal(&mut rng, &basis, n).expect("empty basis always admits a start vector");
    let mut last_residual = f64::INFINITY;
    loop {
        m.mul_vec(&v, &mut w);
        let a = dot(&w, &v);
        if let Some(prev) = basis.last() {
            let b = *beta.last().unwrap_or(&0.0);
            axpy(-b, prev, &mut w);
        }
        axpy(-a, &v, &mut w);
        basis.push(v);
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm(&w);
        let size = basis.len();
        let full = size == n;
        let scale = alpha.iter().fold(1.0f64, |acc, a| acc.max(a.abs()));
        let breakdown = b <= 1e-13 * scale;

        if full || (size >= k && (size.is_multiple_of(options.check_every.max(1)) || breakdown)) {
            let (ritz_values, ritz_vectors) = tridiagonal_eigen(&alpha, &beta)?;
            let mut order: Vec<usize> = (0..size).collect();
            order.sort_by(|&x, &y| ritz_values[y].total_cmp(&ritz_values[x]));
            let coupling = if breakdown { 0.0 } else { b };
            let lead = ritz_values[order[0]].abs().max(1.0);
            last_residual = order[..k]
                .iter()
                .map(|&c| (coupling * ritz_vectors[(size - 1, c)]).abs())
                .fold(0.0, f64::max);
            if full || last_residual <= options.tol * lead {
                let mut vectors = DMatrix::zeros(n, k);
                let mut values = Vec::with_capacity(k);
                for (dst, &c) in order[..k].iter().enumerate() {
                    let mut col = DVector::zeros(n);
                    for (j, q) in basis.iter().enumerate() {
                        let s = ritz_vectors[(j, c)];
                        for (x, qi) in col.iter_mut().zip(q) {
                            *x += s * qi;
                        }
                    }
                    let len = col.norm();
                    col /= len;
                    vectors.set_column(dst, &col);
                    values.push(ritz_values[c]);
                }
                return Spectrum::new(values, vectors);
            }
        }

        if breakdown {
            beta.push(0.0);
            match random_orthogonal(&mut rng, &basis, n) {
                Some(next) => v = next,
                None => {
                    return Err(Error::NoConvergence {
                        iterations: size,
                        residual: last_residual,
                    })
                }
            }
        } else {
            beta.push(b);
            v = w.iter().map(|x| x / b).collect();
        }
    }
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let size = alpha.len();
    let mut t = DMatrix::zeros(size, size);
    for i in 0..size {
        t[(i, i)] = alpha[i];
        if i + 1 < size {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::try_new(t, f64::EPSILON, DENSE_MAX_ITER).ok_or(Error::NoConvergence {
        iterations: DENSE_MAX_ITER,
        residual: f64::NAN,
    })?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, basis: &[Vec<f64>], n: usize) -> Option<Vec<f64>> {
    if basis.len() >= n {
        return None;
    }
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..2 {
            for q in basis {
                let c = dot(&v, q);
                axpy(-c, q, &mut v);
            }
        }
        let len = norm(&v);
        if len > 1e-8 {
            v.iter_mut().for_each(|x| *x /= len);
            return Some(v);
        }
    }
    None
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Dense `N × k` class embeddings, one row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    k: usize,
    /// Row-major `n × k`.
    rows: Vec<f64>,
    retained_eigenvalues: Vec<f64>,
    clamped_count: usize,
}

impl EmbeddingMatrix {
    /// Assembles an embedding from row-major values, e.g. when loading a file.
    /// Retained eigenvalues must already be clamped (non-negative).
    pub fn from_rows(n: usize, k: usize, rows: Vec<f64>, retained_eigenvalues: Vec<f64>, clamped_count: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::Argument(format!("embedding shape {n}x{k} is empty")));
        }
        if rows.len() != n * k || retained_eigenvalues.len() != k {
            return Err(Error::Argument(format!(
                "expected {} values and {k} eigenvalues, got {} and {}",
                n * k,
                rows.len(),
                retained_eigenvalues.len()
            )));
        }
        if rows.iter().chain(&retained_eigenvalues).any(|v| !v.is_finite()) {
            return Err(Error::Argument("embedding contains non-finite values".into()));
        }
        if retained_eigenvalues.iter().any(|&l| l < 0.0) {
            return Err(Error::Argument("retained eigenvalues must be non-negative".into()));
        }
        Ok(Self {
            n,
            k,
            rows,
            retained_eigenvalues,
            clamped_count,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.rows.chunks_exact(self.k)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rows
    }

    pub fn retained_eigenvalues(&self) -> &[f64] {
        &self.retained_eigenvalues
    }

    /// Number of top-k eigenvalues that were negative and clamped to zero.
    pub fn clamped_count(&self) -> usize {
        self.clamped_count
    }

    /// Classes whose row is exactly zero (no positive spectral mass).
    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.row(i).iter().all(|&v| v == 0.0)).collect()
    }

    /// `E·Eᵗ`.
    pub fn gram(&self) -> DMatrix<f64> {
        let e = DMatrix::from_row_slice(self.n, self.k, &self.rows);
        &e * e.transpose()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.k, &self.rows)
    }

    pub(crate) fn with_appended_row(&self, row: &[f64]) -> Self {
        debug_assert_eq!(row.len(), self.k);
        let mut rows = self.rows.clone();
        rows.extend_from_slice(row);
        Self {
            n: self.n + 1,
            k: self.k,
            rows,
            retained_eigenvalues: self.retained_eigenvalues.clone(),
            clamped_count: self.clamped_count,
        }
    }
}

/// `E^k[i][c] = U[i][c]·√max(λ_c, 0)` for the leading `k` eigenpairs.
pub fn build_embedding(spectrum: &Spectrum, k: usize) -> Result<EmbeddingMatrix> {
    let n = spectrum.n();
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k={k} must lie in [1, {n}]")));
    }
    if k > spectrum.len() {
        return Err(Error::Argument(format!(
            "k={k} exceeds the {} eigenpairs available",
            spectrum.len()
        )));
    }
    let retained: Vec<f64> = spectrum.eigenvalues()[..k].iter().map(|&l| l.max(0.0)).collect();
    let clamped_count = spectrum.eigenvalues()[..k].iter().filter(|&&l| l < 0.0).count();
    let roots: Vec<f64> = retained.iter().map(|l| l.sqrt()).collect();
    let u = spectrum.eigenvectors();
    let mut rows = Vec::with_capacity(n * k);
    for i in 0..n {
        rows.extend((0..k).map(|c| u[(i, c)] * roots[c]));
    }
    EmbeddingMatrix::from_rows(n, k, rows, retained, clamped_count)
}

/// Share of squared (clamped) spectral mass kept by the leading `k` pairs.
/// An all-zero clamped spectrum yields 1.
pub fn explained_variance(spectrum: &Spectrum, k: usize) -> Result<f64> {
    let n = spectrum.n();
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k={k} must lie in [1, {n}]")));
    }
    if !spectrum.is_complete() {
        return Err(Error::Argument("explained variance needs the complete spectrum".into()));
    }
    let squared = |l: &f64| l.max(0.0).powi(2);
    let total: f64 = spectrum.eigenvalues().iter().map(squared).sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    let kept: f64 = spectrum.eigenvalues()[..k].iter().map(squared).sum();
    Ok((kept / total).clamp(0.0, 1.0))
}
