//! Distance between the rank-r SVD and rank-r bidiagonal approximations.
//!
//! All quantities are squared Frobenius norms. Index `r` counts kept
//! columns, so `r = t` keeps everything.

use crate::error::{Error, Result};
use crate::jacobi::{jacobi_svd, DEFAULT_TOL};
use crate::matrix::{BidiagonalMatrix, DenseMatrix};

/// Lower and upper bounds on `‖A_r^SVD − A_r^BD‖²_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffBounds {
    pub lower: f64,
    pub upper: f64,
    /// Upper bound summed over the kept range.
    pub upper_head: f64,
    /// Upper bound summed over the discarded range.
    pub upper_tail: f64,
}

fn check_rank(b: &BidiagonalMatrix, r: usize) -> Result<()> {
    let t = b.order();
    if r == 0 || r > t {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={t}")));
    }
    Ok(())
}

/// Bounds from the singular values of `B` and its band.
pub fn diff_bounds(sigma: &[f64], b: &BidiagonalMatrix, r: usize) -> Result<DiffBounds> {
    check_rank(b, r)?;
    let t = b.order();
    if sigma.len() != t {
        return Err(Error::Dimension(format!(
            "{} singular values for order {t}",
            sigma.len()
        )));
    }
    let head_gap: f64 = (0..r).map(|i| sigma[i] * sigma[i] - b.pair_energy(i)).sum();
    let upper_head: f64 = (0..r).map(|i| sigma[i] * sigma[i] + b.pair_energy(i)).sum();
    let upper_tail: f64 = (r..t).map(|i| sigma[i] * sigma[i] + b.pair_energy(i)).sum();
    Ok(DiffBounds {
        lower: head_gap.max(0.0),
        upper: upper_head.min(upper_tail),
        upper_head,
        upper_tail,
    })
}

/// Leading t×t block of `B` as a dense matrix.
fn square_block(b: &BidiagonalMatrix) -> DenseMatrix {
    let t = b.order();
    let sq = BidiagonalMatrix {
        m: t,
        n: t,
        alphas: b.alphas.clone(),
        betas: b.betas.clone(),
    };
    sq.to_dense()
}

/// Exact `‖A_r^SVD − A_r^BD‖²_F`, using the right singular vectors of `B`.
pub fn exact_diff_sq(b: &BidiagonalMatrix, r: usize) -> Result<f64> {
    check_rank(b, r)?;
    let svd = jacobi_svd(&square_block(b), DEFAULT_TOL)?;
    Ok(exact_diff_sq_with(&svd.sigma, svd.v.matrix(), b, r))
}

/// [`exact_diff_sq`] given a precomputed SVD `B = U diag(sigma) Vᵀ`.
pub fn exact_diff_sq_with(sigma: &[f64], v: &DenseMatrix, b: &BidiagonalMatrix, r: usize) -> f64 {
    let t = b.order();
    let head: f64 = (0..r).map(|i| sigma[i] * sigma[i] - b.pair_energy(i)).sum();
    let mut cross = 0.0;
    for j in r..t {
        let w: f64 = (0..r).map(|i| v[(i, j)] * v[(i, j)]).sum();
        cross += sigma[j] * sigma[j] * w;
    }
    (head + 2.0 * cross).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_band_has_zero_gap() {
        let b = BidiagonalMatrix::new(3, 3, vec![3.0, 2.0, 1.0], vec![0.0, 0.0]).unwrap();
        for r in 1..=3 {
            let d = diff_bounds(&[3.0, 2.0, 1.0], &b, r).unwrap();
            assert_eq!(d.lower, 0.0);
            assert!(exact_diff_sq(&b, r).unwrap() < 1e-24);
        }
    }

    #[test]
    fn full_rank_bounds_vanish() {
        let b = BidiagonalMatrix::new(3, 3, vec![1.0, 2.0, 0.5], vec![0.3, -1.0]).unwrap();
        let s = jacobi_svd(&square_block(&b), DEFAULT_TOL).unwrap();
        let d = diff_bounds(&s.sigma, &b, 3).unwrap();
        assert!(d.lower < 1e-12 && d.upper == 0.0);
        assert!(exact_diff_sq(&b, 3).unwrap() < 1e-12);
    }

    #[test]
    fn rank_checked() {
        let b = BidiagonalMatrix::new(2, 2, vec![1.0, 2.0], vec![0.3]).unwrap();
        assert!(diff_bounds(&[2.0, 1.0], &b, 0).is_err());
        assert!(exact_diff_sq(&b, 3).is_err());
    }
}
