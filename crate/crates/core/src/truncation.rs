//! Truncated bidiagonal approximations and their errors.
//!
//! Indices are 0-based: index `i` refers to the pair `(αᵢ, βᵢ₋₁)`, i.e.
//! column `i` of `B`.

use crate::error::{Error, Result};
use crate::matrix::{BidiagonalMatrix, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationMode {
    /// The leading `r` columns.
    Prefix,
    /// The `r` columns of largest `αᵢ² + βᵢ₋₁²`.
    BestPairs,
}

/// Picks the `r` columns kept by a rank-`r` truncation, sorted ascending.
pub fn select_truncation(
    b: &BidiagonalMatrix,
    r: usize,
    mode: TruncationMode,
) -> Result<Vec<usize>> {
    let t = b.order();
    if r == 0 || r > t {
        return Err(Error::InvalidArgument(format!(
            "truncation rank {r} outside 1..={t}"
        )));
    }
    match mode {
        TruncationMode::Prefix => Ok((0..r).collect()),
        TruncationMode::BestPairs => {
            let mut idx: Vec<usize> = (0..t).collect();
            // stable sort keeps the smaller index first among ties
            idx.sort_by(|&x, &y| b.pair_energy(y).total_cmp(&b.pair_energy(x)));
            let mut keep = idx[..r].to_vec();
            keep.sort_unstable();
            Ok(keep)
        }
    }
}

fn check_indices(b: &BidiagonalMatrix, indices: &[usize]) -> Result<()> {
    let t = b.order();
    match indices.iter().find(|&&i| i >= t) {
        Some(&i) => Err(Error::IndexOutOfRange { index: i, limit: t }),
        None => Ok(()),
    }
}

/// `Σ_{i ∈ indices} (αᵢ qᵢ + βᵢ₋₁ qᵢ₋₁) pᵢᵀ`.
pub fn reconstruct_truncated(
    q: &DenseMatrix,
    b: &BidiagonalMatrix,
    p: &DenseMatrix,
    indices: &[usize],
) -> Result<DenseMatrix> {
    check_indices(b, indices)?;
    let t = b.order();
    if q.cols() < t || p.cols() < t {
        return Err(Error::Dimension(format!(
            "factors with {} and {} columns for a band of order {t}",
            q.cols(),
            p.cols()
        )));
    }
    let mut out = DenseMatrix::zeros(q.rows(), p.rows());
    for &i in indices {
        let mut left = q.column(i);
        for x in &mut left {
            *x *= b.alphas[i];
        }
        if i > 0 {
            let beta = b.betas[i - 1];
            for (x, qp) in left.iter_mut().zip(q.column(i - 1)) {
                *x += beta * qp;
            }
        }
        out.add_outer(1.0, &left, &p.column(i));
    }
    Ok(out)
}

/// Squared Frobenius error of keeping `indices`: the energy of the excluded
/// columns of `B`.
pub fn bd_truncation_error_sq(b: &BidiagonalMatrix, indices: &[usize]) -> Result<f64> {
    check_indices(b, indices)?;
    let mut keep = vec![false; b.order()];
    for &i in indices {
        keep[i] = true;
    }
    Ok((0..b.order())
        .filter(|&i| !keep[i])
        .map(|i| b.pair_energy(i))
        .sum())
}

/// `Σ_{i ≥ r} σᵢ²` (0-based), the rank-`r` SVD truncation error.
pub fn svd_truncation_error_sq(sigma: &[f64], r: usize) -> Result<f64> {
    if r > sigma.len() {
        return Err(Error::InvalidArgument(format!(
            "rank {r} exceeds {}",
            sigma.len()
        )));
    }
    Ok(sigma[r..].iter().map(|s| s * s).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(alphas: &[f64], betas: &[f64]) -> BidiagonalMatrix {
        let t = alphas.len();
        BidiagonalMatrix::new(t, t, alphas.to_vec(), betas.to_vec()).unwrap()
    }

    #[test]
    fn best_pairs_examples() {
        let b = band(&[3.0, 2.0, 1.0], &[0.0, 0.0]);
        assert_eq!(
            select_truncation(&b, 2, TruncationMode::BestPairs).unwrap(),
            vec![0, 1]
        );
        let b = band(&[1.0, 1.0, 5.0], &[0.0, 0.0]);
        assert_eq!(
            select_truncation(&b, 1, TruncationMode::BestPairs).unwrap(),
            vec![2]
        );
    }

    #[test]
    fn ties_prefer_smaller_index() {
        let b = band(&[1.0, 1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]);
        assert_eq!(
            select_truncation(&b, 2, TruncationMode::BestPairs).unwrap(),
            vec![0, 1]
        );
    }

    #[test]
    fn rank_range_checked() {
        let b = band(&[1.0, 2.0], &[0.5]);
        assert!(select_truncation(&b, 0, TruncationMode::Prefix).is_err());
        assert!(select_truncation(&b, 3, TruncationMode::Prefix).is_err());
        assert!(bd_truncation_error_sq(&b, &[2]).is_err());
    }

    #[test]
    fn error_formula_examples() {
        let b = band(&[2.0, 1.0], &[1.0]);
        assert_eq!(bd_truncation_error_sq(&b, &[0]).unwrap(), 2.0);
        assert_eq!(bd_truncation_error_sq(&b, &[0, 1]).unwrap(), 0.0);
        assert_eq!(svd_truncation_error_sq(&[3.0, 2.0, 1.0], 2).unwrap(), 1.0);
        assert_eq!(svd_truncation_error_sq(&[3.0, 2.0, 1.0], 3).unwrap(), 0.0);
    }

    #[test]
    fn empty_selection_is_zero() {
        let b = band(&[2.0, 1.0], &[1.0]);
        let q = DenseMatrix::identity(2, 2);
        let z = reconstruct_truncated(&q, &b, &q, &[]).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let full = reconstruct_truncated(&q, &b, &q, &[0, 1]).unwrap();
        assert_eq!(full, b.to_dense());
    }
}
