//! One-sided (Hestenes) Jacobi SVD for small and medium dense matrices.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, OrthogonalFactor, SvdTriple};

pub const MAX_SWEEPS: usize = 60;
pub const DEFAULT_TOL: f64 = 1e-12;

/// Singular value decomposition by one-sided Jacobi rotations.
///
/// Fails with [`Error::NoConvergence`] after [`MAX_SWEEPS`] sweeps; use
/// [`jacobi_svd_iterate`] to obtain the last iterate regardless.
pub fn jacobi_svd(a: &DenseMatrix, tol: f64) -> Result<SvdTriple> {
    let (svd, sweeps, off) = jacobi_svd_iterate(a, tol);
    if sweeps > MAX_SWEEPS {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            off,
        });
    }
    Ok(svd)
}

/// Runs the iteration and returns `(svd, sweeps_used, final_off_diagonal)`.
/// `sweeps_used > MAX_SWEEPS` signals non-convergence.
pub fn jacobi_svd_iterate(a: &DenseMatrix, tol: f64) -> (SvdTriple, usize, f64) {
    if a.rows() < a.cols() {
        let (s, sweeps, off) = jacobi_svd_iterate(&a.transpose(), tol);
        return (
            SvdTriple {
                u: s.v,
                sigma: s.sigma,
                v: s.u,
            },
            sweeps,
            off,
        );
    }
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    // rotate down to roundoff level so the columns come out orthogonal to
    // working precision even when `tol` is looser
    let threshold = tol.min(f64::EPSILON * m as f64);
    let mut sweeps = 0;
    let mut off = 0.0f64;
    let mut polished = false;
    loop {
        if sweeps == MAX_SWEEPS {
            sweeps += 1;
            break;
        }
        sweeps += 1;
        let mut rotated = false;
        off = 0.0;
        let floor = cols.iter().map(|c| norm(c)).fold(0.0f64, f64::max) * NEGLIGIBLE;
        for i in 0..n {
            for j in i + 1..n {
                let (alpha, beta, gamma) = gram(&cols[i], &cols[j]);
                if alpha.sqrt() <= floor || beta.sqrt() <= floor {
                    continue;
                }
                let rel = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                off = off.max(rel);
                if rel <= threshold {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut vcols, i, j, c, s);
            }
        }
        if !rotated || (off <= tol && polished) {
            break;
        }
        polished = off <= tol;
    }
    let mut sigma: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));
    sigma = order.iter().map(|&k| sigma[k]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (pos, &k) in order.iter().enumerate() {
        let s = sigma[pos];
        if !negligible(s, smax) {
            ucols.push(cols[k].iter().map(|v| v / s).collect());
        } else {
            ucols.push(vec![0.0; m]);
        }
    }
    complete_basis(&mut ucols, m, &sigma, smax);
    let vsorted: Vec<Vec<f64>> = order.iter().map(|&k| vcols[k].clone()).collect();
    let u = OrthogonalFactor::new(DenseMatrix::from_columns(m, &ucols));
    let v = OrthogonalFactor::new(DenseMatrix::from_columns(n, &vsorted));
    (SvdTriple { u, sigma, v }, sweeps, off)
}

fn gram(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut g = 0.0;
    for (p, q) in x.iter().zip(y) {
        a += p * p;
        b += q * q;
        g += p * q;
    }
    (a, b, g)
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (p, q) = (*x, *y);
        *x = c * p - s * q;
        *y = s * p + c * q;
    }
}

/// Columns this far below the largest are treated as exact zeros; rotating
/// them near the subnormal range never settles.
const NEGLIGIBLE: f64 = 1e-150;

fn negligible(s: f64, smax: f64) -> bool {
    s == 0.0 || s <= smax * NEGLIGIBLE
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Replaces left vectors of negligible singular values by an orthonormal
/// completion.
fn complete_basis(ucols: &mut [Vec<f64>], m: usize, sigma: &[f64], smax: f64) {
    let mut next_unit = 0;
    for k in 0..ucols.len() {
        if !negligible(sigma[k], smax) {
            continue;
        }
        loop {
            let mut v = vec![0.0; m];
            v[next_unit % m] = 1.0;
            next_unit += 1;
            for _ in 0..2 {
                for (l, u) in ucols.iter().enumerate() {
                    if l == k || (negligible(sigma[l], smax) && l > k) {
                        continue;
                    }
                    let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= d * ui;
                    }
                }
            }
            let nv = norm(&v);
            if nv > 1e-8 {
                ucols[k] = v.iter().map(|x| x / nv).collect();
                break;
            }
            if next_unit > 2 * m {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gaussian_matrix;

    #[test]
    fn diagonal_sorted() {
        let a = DenseMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let s = jacobi_svd(&a, DEFAULT_TOL).unwrap();
        assert_eq!(s.sigma, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn orthogonal_input_has_unit_values() {
        let q = crate::synth::orthonormal_columns(6, 6, 3);
        let s = jacobi_svd(&q, DEFAULT_TOL).unwrap();
        assert!(s.sigma.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn random_reconstruction() {
        for &(m, n) in &[(20, 15), (15, 20), (1, 4), (7, 7)] {
            let a = gaussian_matrix(m, n, (m + 100 * n) as u64);
            let s = jacobi_svd(&a, DEFAULT_TOL).unwrap();
            let t = m.min(n);
            let rec = s.reconstruct(t);
            assert!(rec.sub(&a).frob_norm() <= DEFAULT_TOL * a.frob_norm());
            assert!(s.u.drift() < 1e-12 && s.v.drift() < 1e-12);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_basis_completed() {
        let a = DenseMatrix::from_fn(5, 3, |i, j| (i + 1) as f64 * (j + 2) as f64);
        let s = jacobi_svd(&a, DEFAULT_TOL).unwrap();
        assert!(s.u.drift() < 1e-10);
        assert!(s.reconstruct(3).sub(&a).frob_norm() < 1e-12 * a.frob_norm());
    }
}
