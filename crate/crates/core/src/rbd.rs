//! Randomized bidiagonal decomposition: sketch the column space, then
//! bidiagonalize the small projected matrix.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dense::bidiagonalize_dense;
use crate::error::{Error, Result};
use crate::gkb::LinearOperator;
use crate::jacobi::{jacobi_svd, DEFAULT_TOL};
use crate::matrix::{BidiagonalMatrix, DenseMatrix, OrthogonalFactor, SvdTriple};
use crate::synth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchKind {
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SketchConfig {
    pub kind: SketchKind,
    pub rank: usize,
    pub oversample: usize,
    pub seed: u64,
}

impl SketchConfig {
    pub const DEFAULT_OVERSAMPLE: usize = 5;

    pub fn new(rank: usize, seed: u64) -> Self {
        Self {
            kind: SketchKind::Gaussian,
            rank,
            oversample: Self::DEFAULT_OVERSAMPLE,
            seed,
        }
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.rank == 0 || self.rank > m.min(n) {
            return Err(Error::InvalidArgument(format!(
                "rank {} outside 1..={}",
                self.rank,
                m.min(n)
            )));
        }
        if self.rank + self.oversample > n {
            return Err(Error::InvalidArgument(format!(
                "rank {} plus oversampling {} exceeds {n} columns",
                self.rank, self.oversample
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RbdResult {
    pub q: OrthogonalFactor,
    pub b: BidiagonalMatrix,
    pub p: OrthogonalFactor,
    /// Set when the sketch had numerical rank below the requested rank;
    /// the factors then have that smaller width.
    pub rank_deficient: bool,
}

impl RbdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        crate::matrix::compose(self.q.matrix(), &self.b, self.p.matrix())
    }
}

/// Test matrix `S` (n×l) drawn from the seeded stream in row-major order.
pub fn sketch_matrix(n: usize, l: usize, kind: SketchKind, seed: u64) -> DenseMatrix {
    let mut rng = synth::rng(seed);
    DenseMatrix::from_fn(n, l, |_, _| match kind {
        SketchKind::Gaussian => rng.sample(StandardNormal),
        SketchKind::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
    })
}

const SKETCH_RANK_TOL: f64 = 1e-12;

pub fn rbd(a: &dyn LinearOperator, cfg: &SketchConfig) -> Result<RbdResult> {
    let (m, n) = (a.rows(), a.cols());
    cfg.validate(m, n)?;
    let l = (cfg.rank + cfg.oversample).min(m);
    let s = sketch_matrix(n, l, cfg.kind, cfg.seed);
    let ycols: Vec<Vec<f64>> = (0..l).map(|j| a.apply(&s.column(j))).collect();
    let y = DenseMatrix::from_columns(m, &ycols);
    if !y.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let (qy, _, sketch_rank) = y.thin_qr(SKETCH_RANK_TOL);
    let rank = cfg.rank.min(sketch_rank).max(1);
    let zrows: Vec<Vec<f64>> = (0..qy.cols())
        .map(|i| a.apply_transpose(&qy.column(i)))
        .collect();
    let z = DenseMatrix::from_rows(&zrows)?;
    let dz = bidiagonalize_dense(&z);
    let qz = dz.q.matrix().leading_columns(rank);
    let q = qy.matmul(&qz);
    let p = dz.p.matrix().leading_columns(rank);
    let b = BidiagonalMatrix::new(
        rank,
        rank,
        dz.b.alphas[..rank].to_vec(),
        dz.b.betas[..rank - 1].to_vec(),
    )?;
    Ok(RbdResult {
        q: OrthogonalFactor::new(q),
        b,
        p: OrthogonalFactor::new(p),
        rank_deficient: sketch_rank < cfg.rank,
    })
}

/// SVD of the rank-r approximation `Q B Pᵀ` from the small SVD of `B`.
pub fn rbd_to_rsvd(
    b: &BidiagonalMatrix,
    q: &OrthogonalFactor,
    p: &OrthogonalFactor,
) -> Result<SvdTriple> {
    if q.cols() != b.m || p.cols() != b.n {
        return Err(Error::Dimension(
            "factor widths do not match the band".into(),
        ));
    }
    let small = jacobi_svd(&b.to_dense(), DEFAULT_TOL)?;
    let u = q.matrix().matmul(small.u.matrix());
    let v = p.matrix().matmul(small.v.matrix());
    Ok(SvdTriple {
        u: OrthogonalFactor::new(u),
        sigma: small.sigma,
        v: OrthogonalFactor::new(v),
    })
}
