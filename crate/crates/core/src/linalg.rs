//! Dense row-major matrices and a column-pivoted Householder least-squares solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative threshold on `|R_jj| / |R_00|` below which a column counts as dependent.
pub const RANK_RCOND: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} values for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    /// `X b`
    pub fn matvec(&self, b: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), b)).collect()
    }

    /// `Xᵀ v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += x * vi;
            }
        }
        out
    }

    /// The matrix with a leading column of ones.
    pub fn with_intercept(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for i in 0..self.rows {
            data.push(1.0);
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: self.rows, cols: self.cols + 1, data }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// A solved least-squares problem `min ‖y − X b‖₂` with `X P = Q R`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta: Vec<f64>,
    /// `R` in pivoted column order, `p×p` row-major upper triangle.
    r: Vec<f64>,
    perm: Vec<usize>,
    p: usize,
}

impl LeastSquares {
    /// Leverage `h = xᵀ (XᵀX)⁻¹ x` of a row `x`.
    pub fn leverage(&self, x: &[f64]) -> f64 {
        // solve Rᵀ z = Pᵀ x by forward substitution
        let p = self.p;
        let mut z = vec![0.0; p];
        for k in 0..p {
            let mut s = x[self.perm[k]];
            for j in 0..k {
                s -= self.r[j * p + k] * z[j];
            }
            z[k] = s / self.r[k * p + k];
        }
        dot(&z, &z)
    }
}

/// Solve the (optionally row-weighted) least-squares problem by Householder QR
/// with column pivoting. Fails when the numerical rank is below `X.cols()`.
pub fn least_squares(x: &Matrix, y: &[f64], sqrt_w: Option<&[f64]>) -> Result<LeastSquares> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::DimensionMismatch(alloc::format!("{} responses for {} rows", y.len(), n)));
    }
    if p == 0 {
        return Ok(LeastSquares { beta: Vec::new(), r: Vec::new(), perm: Vec::new(), p });
    }
    if n < p {
        return Err(Error::RankDeficient { deficient: p - n, cols: p });
    }
    // column-major working copy
    let mut a = vec![0.0; n * p];
    let mut b = y.to_vec();
    for i in 0..n {
        let w = sqrt_w.map_or(1.0, |w| w[i]);
        for j in 0..p {
            a[j * n + i] = x.get(i, j) * w;
        }
        b[i] *= w;
    }
    let mut perm: Vec<usize> = (0..p).collect();
    let mut norms: Vec<f64> = (0..p).map(|j| dot(&a[j * n..(j + 1) * n], &a[j * n..(j + 1) * n])).collect();
    let mut r00 = 0.0;
    for k in 0..p {
        // pivot: largest remaining column norm
        let mut best = k;
        for j in k + 1..p {
            if norms[j] > norms[best] {
                best = j;
            }
        }
        if best != k {
            for i in 0..n {
                a.swap(k * n + i, best * n + i);
            }
            norms.swap(k, best);
            perm.swap(k, best);
        }
        let col = &mut a[k * n..(k + 1) * n];
        let alpha = libm::sqrt(dot(&col[k..], &col[k..]));
        if k == 0 {
            r00 = alpha;
        }
        if alpha <= RANK_RCOND * r00 || alpha == 0.0 {
            return Err(Error::RankDeficient { deficient: p - k, cols: p });
        }
        let sign = if col[k] >= 0.0 { 1.0 } else { -1.0 };
        let v0 = col[k] + sign * alpha;
        col[k] = v0;
        // v = col[k..] with v[0] = v0; H = I - 2 v vᵀ / (vᵀ v)
        let vnorm2 = dot(&col[k..], &col[k..]);
        let v: Vec<f64> = col[k..].to_vec();
        // R_kk = -sign * alpha
        a[k * n + k] = -sign * alpha;
        for i in k + 1..n {
            a[k * n + i] = 0.0;
        }
        for j in k + 1..p {
            let cj = &mut a[j * n + k..(j + 1) * n];
            let f = 2.0 * dot(&v, cj) / vnorm2;
            for (c, vi) in cj.iter_mut().zip(&v) {
                *c -= f * vi;
            }
            norms[j] = dot(&cj[1..], &cj[1..]);
        }
        let bk = &mut b[k..];
        let f = 2.0 * dot(&v, bk) / vnorm2;
        for (c, vi) in bk.iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }
    let mut r = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            r[i * p + j] = a[j * n + i];
        }
    }
    // back substitution R z = (Qᵀ b)[..p]
    let mut z = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = b[i];
        for j in i + 1..p {
            s -= r[i * p + j] * z[j];
        }
        z[i] = s / r[i * p + i];
    }
    let mut beta = vec![0.0; p];
    for (k, &c) in perm.iter().enumerate() {
        beta[c] = z[k];
    }
    Ok(LeastSquares { beta, r, perm, p })
}
