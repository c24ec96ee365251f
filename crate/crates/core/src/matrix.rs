//! Dense and bidiagonal matrix containers.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::house::house;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Rectangular identity: ones on the main diagonal.
    pub fn identity(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(m, n, rows.concat())
    }

    pub fn from_columns(rows: usize, cols: &[Vec<f64>]) -> Self {
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = *x;
        }
    }

    /// The leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    /// Copy with the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimension");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn tmatmul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "tmatmul row dimension");
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = other.row(k);
            for (i, a) in arow.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec length");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn tmatvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tmatvec length");
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self += alpha * b cᵀ`.
    pub fn add_outer(&mut self, alpha: f64, b: &[f64], c: &[f64]) {
        assert_eq!(b.len(), self.rows);
        assert_eq!(c.len(), self.cols);
        for (i, bi) in b.iter().enumerate() {
            let f = alpha * bi;
            if f == 0.0 {
                continue;
            }
            for (v, cj) in self.row_mut(i).iter_mut().zip(c) {
                *v += f * cj;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `‖selfᵀ self − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let g = self.tmatmul(self);
        let mut s = 0.0;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let d = g[(i, j)] - if i == j { 1.0 } else { 0.0 };
                s += d * d;
            }
        }
        s.sqrt()
    }

    /// Householder thin QR. Returns `Q` (m×k), `R` (k×k) with `k = min(m, n)`
    /// and the numerical rank read off the diagonal of `R`.
    pub fn thin_qr(&self, rank_tol: f64) -> (Self, Self, usize) {
        let (m, n) = self.shape();
        let k = m.min(n);
        let mut a = self.clone();
        let mut refl = Vec::with_capacity(k);
        for j in 0..k {
            let col = a.column(j);
            let (_, y) = house(&col, j).expect("offset within column");
            for c in j..n {
                let mut v = a.column(c);
                y.apply(&mut v);
                a.set_column(c, &v);
            }
            refl.push(y);
        }
        let r = Self::from_fn(k, k, |i, j| if j >= i { a[(i, j)] } else { 0.0 });
        let mut q = Self::identity(m, k);
        for c in 0..k {
            let mut v = q.column(c);
            for y in refl.iter().rev() {
                y.apply(&mut v);
            }
            q.set_column(c, &v);
        }
        let dmax = (0..k).fold(0.0f64, |s, i| s.max(r[(i, i)].abs()));
        let rank = (0..k)
            .filter(|&i| r[(i, i)].abs() > rank_tol * dmax.max(f64::MIN_POSITIVE))
            .count();
        (q, r, rank)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Upper bidiagonal matrix of logical shape m×n, stored as its diagonal
/// (`alphas`, length `min(m, n)`) and superdiagonal (`betas`, one shorter).
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagonalMatrix {
    pub m: usize,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl BidiagonalMatrix {
    pub fn new(m: usize, n: usize, alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Dimension(format!("empty bidiagonal {m}x{n}")));
        }
        let t = m.min(n);
        if alphas.len() != t || betas.len() != t - 1 {
            return Err(Error::Dimension(format!(
                "bidiagonal {m}x{n} needs {t} diagonal and {} superdiagonal entries, got {} and {}",
                t - 1,
                alphas.len(),
                betas.len()
            )));
        }
        Ok(Self {
            m,
            n,
            alphas,
            betas,
        })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        let t = m.min(n);
        Self {
            m,
            n,
            alphas: vec![0.0; t],
            betas: vec![0.0; t.saturating_sub(1)],
        }
    }

    /// Number of diagonal entries, `min(m, n)`.
    pub fn order(&self) -> usize {
        self.alphas.len()
    }

    /// Superdiagonal entry above diagonal `i`, with the convention `β₀ = 0`
    /// (so `beta_before(0) = 0`).
    pub fn beta_before(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.betas[i - 1]
        }
    }

    /// `αᵢ² + βᵢ₋₁²`, the energy of column `i`.
    pub fn pair_energy(&self, i: usize) -> f64 {
        self.alphas[i].powi(2) + self.beta_before(i).powi(2)
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.alphas.iter().chain(&self.betas).map(|v| v * v).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.m, self.n);
        for (i, a) in self.alphas.iter().enumerate() {
            d[(i, i)] = *a;
        }
        for (i, b) in self.betas.iter().enumerate() {
            d[(i, i + 1)] = *b;
        }
        d
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.m];
        for (i, a) in self.alphas.iter().enumerate() {
            y[i] = a * x[i];
        }
        for (i, b) in self.betas.iter().enumerate() {
            y[i] += b * x[i + 1];
        }
        y
    }

    pub fn tmatvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.m);
        let mut y = vec![0.0; self.n];
        for (i, a) in self.alphas.iter().enumerate() {
            y[i] = a * x[i];
        }
        for (i, b) in self.betas.iter().enumerate() {
            y[i + 1] += b * x[i];
        }
        y
    }

    pub fn is_finite(&self) -> bool {
        self.alphas.iter().chain(&self.betas).all(|v| v.is_finite())
    }
}

/// Matrix with (nearly) orthonormal columns and its cached drift
/// `‖QᵀQ − I‖_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalFactor {
    mat: DenseMatrix,
    drift: f64,
}

impl OrthogonalFactor {
    pub fn new(mat: DenseMatrix) -> Self {
        let drift = mat.orthogonality_defect();
        Self { mat, drift }
    }

    pub fn identity(rows: usize, cols: usize) -> Self {
        Self {
            mat: DenseMatrix::identity(rows, cols),
            drift: 0.0,
        }
    }

    /// Wraps without recomputing the drift.
    pub fn with_drift(mat: DenseMatrix, drift: f64) -> Self {
        Self { mat, drift }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.mat
    }

    pub fn matrix_mut(&mut self) -> &mut DenseMatrix {
        &mut self.mat
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.mat
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn cols(&self) -> usize {
        self.mat.cols()
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn refresh_drift(&mut self) -> f64 {
        self.drift = self.mat.orthogonality_defect();
        self.drift
    }
}

/// Singular value decomposition `A = U diag(sigma) Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub u: OrthogonalFactor,
    pub sigma: Vec<f64>,
    pub v: OrthogonalFactor,
}

impl SvdTriple {
    /// `U_r Σ_r V_rᵀ` using the leading `r` triplets.
    pub fn reconstruct(&self, r: usize) -> DenseMatrix {
        let u = self.u.matrix();
        let v = self.v.matrix();
        let mut out = DenseMatrix::zeros(u.rows(), v.rows());
        for k in 0..r.min(self.sigma.len()) {
            let uk = u.column(k);
            let vk = v.column(k);
            out.add_outer(self.sigma[k], &uk, &vk);
        }
        out
    }
}

/// Product `Q B Pᵀ` for a bidiagonal middle factor.
pub fn compose(q: &DenseMatrix, b: &BidiagonalMatrix, p: &DenseMatrix) -> DenseMatrix {
    assert_eq!(q.cols(), b.m, "left factor width");
    assert_eq!(p.cols(), b.n, "right factor width");
    let mut qb = DenseMatrix::zeros(q.rows(), b.n);
    for i in 0..q.rows() {
        for (k, a) in b.alphas.iter().enumerate() {
            qb[(i, k)] += q[(i, k)] * a;
        }
        for (k, bt) in b.betas.iter().enumerate() {
            qb[(i, k + 1)] += q[(i, k)] * bt;
        }
    }
    let mut out = DenseMatrix::zeros(q.rows(), p.rows());
    for i in 0..q.rows() {
        for j in 0..p.rows() {
            out[(i, j)] = qb.row(i).iter().zip(p.row(j)).map(|(x, y)| x * y).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bidiagonal_shape_checked() {
        assert!(BidiagonalMatrix::new(3, 3, vec![1.0; 3], vec![1.0; 2]).is_ok());
        assert!(BidiagonalMatrix::new(3, 3, vec![1.0; 3], vec![1.0; 3]).is_err());
        assert!(BidiagonalMatrix::new(5, 2, vec![1.0; 2], vec![1.0]).is_ok());
    }

    #[test]
    fn bidiagonal_densify_and_products() {
        let b = BidiagonalMatrix::new(4, 3, vec![1.0, 2.0, 3.0], vec![4.0, 5.0]).unwrap();
        let d = b.to_dense();
        for i in 0..4 {
            for j in 0..3 {
                let nz = j == i || j == i + 1;
                assert_eq!(d[(i, j)] != 0.0, nz);
            }
        }
        let x = [0.5, -1.0, 2.0];
        assert_eq!(b.matvec(&x), d.matvec(&x));
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(b.tmatvec(&y), d.tmatvec(&y));
    }

    #[test]
    fn thin_qr_reconstructs() {
        let a = DenseMatrix::from_fn(7, 4, |i, j| {
            ((i * 3 + j * 5) % 7) as f64 - 3.0 + (i == j) as u8 as f64
        });
        let (q, r, rank) = a.thin_qr(1e-12);
        assert_eq!(rank, 4);
        assert!(q.matmul(&r).sub(&a).frob_norm() < 1e-12 * a.frob_norm());
        assert!(q.orthogonality_defect() < 1e-13);
    }

    #[test]
    fn thin_qr_detects_rank() {
        let a = DenseMatrix::from_fn(6, 3, |i, j| (i + 1) as f64 * (j + 1) as f64);
        let (_, _, rank) = a.thin_qr(1e-10);
        assert_eq!(rank, 1);
    }

    #[test]
    fn tmatmul_matches_transpose() {
        let a = DenseMatrix::from_fn(5, 3, |i, j| (i as f64 - j as f64).sin());
        let b = DenseMatrix::from_fn(5, 2, |i, j| (i * j) as f64 + 0.5);
        assert!(a.tmatmul(&b).sub(&a.transpose().matmul(&b)).max_abs() < 1e-14);
    }
}
