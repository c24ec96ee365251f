//! Seeded generators for test problems and benchmark corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{BidiagonalMatrix, DenseMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..len).map(|_| r.sample(StandardNormal)).collect()
}

pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
    DenseMatrix::new(m, n, gaussian_vector(m * n, seed)).expect("nonempty")
}

/// Upper bidiagonal m×n with standard normal band.
pub fn gaussian_bidiagonal(m: usize, n: usize, seed: u64) -> BidiagonalMatrix {
    let t = m.min(n);
    let v = gaussian_vector(2 * t, seed);
    BidiagonalMatrix::new(m, n, v[..t].to_vec(), v[t..2 * t - 1].to_vec()).expect("valid shape")
}

/// Sparse matrix with roughly `density·m·n` standard normal entries.
pub fn sparse_matrix(m: usize, n: usize, density: f64, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    DenseMatrix::from_fn(m, n, |_, _| {
        if r.random::<f64>() < density {
            r.sample(StandardNormal)
        } else {
            0.0
        }
    })
}

/// Random orthonormal columns via QR of a Gaussian matrix.
pub fn orthonormal_columns(m: usize, k: usize, seed: u64) -> DenseMatrix {
    let (q, _, _) = gaussian_matrix(m, k, seed).thin_qr(0.0);
    q
}

/// `U diag(sigma) Vᵀ` with random orthonormal `U`, `V`.
pub fn with_spectrum(m: usize, n: usize, sigma: &[f64], seed: u64) -> DenseMatrix {
    let k = sigma.len();
    let u = orthonormal_columns(m, k, seed);
    let v = orthonormal_columns(n, k, seed.wrapping_add(0x9e37_79b9));
    let mut us = u;
    for i in 0..m {
        for (j, s) in sigma.iter().enumerate() {
            us[(i, j)] *= s;
        }
    }
    us.matmul(&v.transpose())
}
