//! Householder bidiagonalization of a dense matrix, `Qᵀ A P = B`.

use crate::house::{house, HouseholderVector};
use crate::matrix::{BidiagonalMatrix, DenseMatrix, OrthogonalFactor};

/// Result of [`bidiagonalize_dense`].
#[derive(Debug, Clone)]
pub struct DenseBidiagonalization {
    pub q: OrthogonalFactor,
    pub b: BidiagonalMatrix,
    pub p: OrthogonalFactor,
    /// Multiplications spent on the reduction itself, excluding factor accumulation.
    pub mults: u64,
}

/// Full Householder reduction; `Q` is m×m and `P` is n×n.
pub fn bidiagonalize_dense(a: &DenseMatrix) -> DenseBidiagonalization {
    let (b, q, p, mults) = reduce(a, true);
    let q = OrthogonalFactor::new(q.expect("accumulated"));
    let p = OrthogonalFactor::new(p.expect("accumulated"));
    DenseBidiagonalization { q, b, p, mults }
}

/// Band only, skipping factor accumulation. Returns the band and the
/// multiplication count.
pub fn bidiagonal_values(a: &DenseMatrix) -> (BidiagonalMatrix, u64) {
    let (b, _, _, mults) = reduce(a, false);
    (b, mults)
}

fn reduce(
    a: &DenseMatrix,
    accumulate: bool,
) -> (
    BidiagonalMatrix,
    Option<DenseMatrix>,
    Option<DenseMatrix>,
    u64,
) {
    let (m, n) = a.shape();
    let mut mults = 0u64;
    if m >= n {
        let mut w = a.clone();
        let mut q = accumulate.then(|| DenseMatrix::identity(m, m));
        let mut p = accumulate.then(|| DenseMatrix::identity(n, n));
        let b = reduce_tall(&mut w, q.as_mut(), p.as_mut(), &mut mults);
        return (b, q, p, mults);
    }
    // Wide: compress the columns first so that A P0 = [L 0], then reduce L.
    let mut w = a.clone();
    let mut p0 = accumulate.then(|| DenseMatrix::identity(n, n));
    for k in 0..m {
        let row = w.row(k).to_vec();
        let (alpha, y) = house(&row, k).expect("row slice non-empty");
        apply_right(&mut w, &y, k + 1, &mut mults);
        w[(k, k)] = alpha;
        for j in k + 1..n {
            w[(k, j)] = 0.0;
        }
        if let Some(p0) = p0.as_mut() {
            apply_right(p0, &y, 0, &mut 0);
        }
    }
    let mut l = w.leading_columns(m);
    let mut q = accumulate.then(|| DenseMatrix::identity(m, m));
    let mut p2 = accumulate.then(|| DenseMatrix::identity(m, m));
    let sq = reduce_tall(&mut l, q.as_mut(), p2.as_mut(), &mut mults);
    let b = BidiagonalMatrix {
        m,
        n,
        alphas: sq.alphas,
        betas: sq.betas,
    };
    let p = match (p0, p2) {
        (Some(p0), Some(p2)) => {
            let mut full = DenseMatrix::identity(n, n);
            for i in 0..m {
                for j in 0..m {
                    full[(i, j)] = p2[(i, j)];
                }
            }
            Some(p0.matmul(&full))
        }
        _ => None,
    };
    (b, q, p, mults)
}

/// Reduces a matrix with `rows >= cols` in place.
fn reduce_tall(
    w: &mut DenseMatrix,
    mut q: Option<&mut DenseMatrix>,
    mut p: Option<&mut DenseMatrix>,
    mults: &mut u64,
) -> BidiagonalMatrix {
    let (m, n) = w.shape();
    let mut alphas = vec![0.0; n];
    let mut betas = vec![0.0; n.saturating_sub(1)];
    for k in 0..n {
        if k < m - 1 || m > n {
            let col = w.column(k);
            let (alpha, y) = house(&col, k).expect("column slice non-empty");
            apply_left(w, &y, k + 1, mults);
            for i in k + 1..m {
                w[(i, k)] = 0.0;
            }
            w[(k, k)] = alpha;
            if let Some(q) = q.as_deref_mut() {
                apply_right(q, &y, 0, &mut 0);
            }
        }
        alphas[k] = w[(k, k)];
        if k + 1 < n {
            if k + 2 < n {
                let row = w.row(k).to_vec();
                let (beta, y) = house(&row, k + 1).expect("row slice non-empty");
                apply_right(w, &y, k + 1, mults);
                w[(k, k + 1)] = beta;
                for j in k + 2..n {
                    w[(k, j)] = 0.0;
                }
                if let Some(p) = p.as_deref_mut() {
                    apply_right(p, &y, 0, &mut 0);
                }
            }
            betas[k] = w[(k, k + 1)];
        }
    }
    BidiagonalMatrix {
        m,
        n,
        alphas,
        betas,
    }
}

/// `W[.., first_col..] ← (I − 2yyᵀ) W[.., first_col..]` over the reflector's rows.
fn apply_left(w: &mut DenseMatrix, y: &HouseholderVector, first_col: usize, mults: &mut u64) {
    let n = w.cols();
    if first_col >= n {
        return;
    }
    let o = y.offset;
    let mut acc = vec![0.0; n - first_col];
    for i in o..w.rows() {
        let yi = y.essential[i];
        if yi == 0.0 {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(&w.row(i)[first_col..]) {
            *a += yi * v;
        }
    }
    for i in o..w.rows() {
        let f = y.tau * y.essential[i];
        if f == 0.0 {
            continue;
        }
        for (v, a) in w.row_mut(i)[first_col..].iter_mut().zip(&acc) {
            *v -= f * a;
        }
    }
    *mults += 2 * ((w.rows() - o) * (n - first_col)) as u64;
}

/// `W[first_row.., ..] ← W[first_row.., ..] (I − 2yyᵀ)`.
fn apply_right(w: &mut DenseMatrix, y: &HouseholderVector, first_row: usize, mults: &mut u64) {
    let o = y.offset;
    let tail = &y.essential[o..];
    for i in first_row..w.rows() {
        let row = &mut w.row_mut(i)[o..];
        let d: f64 = row.iter().zip(tail).map(|(a, b)| a * b).sum();
        let f = y.tau * d;
        if f == 0.0 {
            continue;
        }
        for (v, t) in row.iter_mut().zip(tail) {
            *v -= f * t;
        }
    }
    *mults += 2 * ((w.rows().saturating_sub(first_row)) * tail.len()) as u64;
}
