//! Golub–Kahan–Lanczos bidiagonalization driven by matrix-vector products.

use crate::error::{Error, Result};
use crate::matrix::{BidiagonalMatrix, DenseMatrix, OrthogonalFactor};

/// Something that can be multiplied by a vector from either side.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `A x` for `x` of length `cols`.
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    /// `Aᵀ y` for `y` of length `rows`.
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64>;
}

impl LinearOperator for DenseMatrix {
    fn rows(&self) -> usize {
        DenseMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        DenseMatrix::cols(self)
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.tmatvec(y)
    }
}

impl LinearOperator for BidiagonalMatrix {
    fn rows(&self) -> usize {
        self.m
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.tmatvec(y)
    }
}

/// Operator given as a pair of closures.
pub struct FnOperator<F, G> {
    pub rows: usize,
    pub cols: usize,
    pub forward: F,
    pub adjoint: G,
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.forward)(x)
    }
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        (self.adjoint)(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reorth {
    None,
    /// Both Q and P columns against all previous ones.
    Full,
    /// P columns only.
    ShortSpace,
}

#[derive(Debug, Clone)]
pub struct GkbResult {
    pub q: OrthogonalFactor,
    pub b: BidiagonalMatrix,
    pub p: OrthogonalFactor,
    /// Set when a recurrence coefficient fell below the breakdown tolerance.
    pub breakdown: bool,
}

/// Relative breakdown tolerance against the running norm estimate.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// Runs `steps` Lanczos steps from the unit vector `p1`.
pub fn gkb(op: &dyn LinearOperator, p1: &[f64], steps: usize, reorth: Reorth) -> Result<GkbResult> {
    let (m, n) = (op.rows(), op.cols());
    if p1.len() != n {
        return Err(Error::Dimension(format!(
            "start vector of length {} for {n} columns",
            p1.len()
        )));
    }
    if steps == 0 || steps > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "steps {steps} outside 1..={}",
            m.min(n)
        )));
    }
    let pn = norm(p1);
    if (pn - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "start vector norm {pn} is not 1"
        )));
    }
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut ps: Vec<Vec<f64>> = vec![p1.to_vec()];
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    let mut estimate = 0.0f64;
    let mut breakdown = false;
    for k in 0..steps {
        let mut r = op.apply(&ps[k]);
        if k > 0 {
            let beta = betas[k - 1];
            for (x, q) in r.iter_mut().zip(&qs[k - 1]) {
                *x -= beta * q;
            }
        }
        if reorth == Reorth::Full {
            orthogonalize(&mut r, &qs);
        }
        let alpha = norm(&r);
        if !alpha.is_finite() {
            return Err(Error::NonFinite { step: k });
        }
        estimate = estimate.max(alpha);
        if alpha <= BREAKDOWN_TOL * estimate || alpha == 0.0 {
            breakdown = true;
            ps.truncate(k);
            break;
        }
        qs.push(r.iter().map(|x| x / alpha).collect());
        alphas.push(alpha);
        if k + 1 == steps {
            break;
        }
        let mut s = op.apply_transpose(&qs[k]);
        for (x, p) in s.iter_mut().zip(&ps[k]) {
            *x -= alpha * p;
        }
        if reorth != Reorth::None {
            orthogonalize(&mut s, &ps);
        }
        let beta = norm(&s);
        estimate = estimate.max(beta);
        if beta <= BREAKDOWN_TOL * estimate {
            breakdown = true;
            break;
        }
        ps.push(s.iter().map(|x| x / beta).collect());
        betas.push(beta);
    }
    let k = alphas.len();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "start vector lies in the null space".into(),
        ));
    }
    ps.truncate(k);
    betas.truncate(k - 1);
    let q = OrthogonalFactor::new(DenseMatrix::from_columns(m, &qs));
    let p = OrthogonalFactor::new(DenseMatrix::from_columns(n, &ps));
    let b = BidiagonalMatrix::new(k, k, alphas, betas)?;
    Ok(GkbResult { q, b, p, breakdown })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Modified Gram–Schmidt against `basis`, applied twice.
fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let d: f64 = b.iter().zip(x.iter()).map(|(u, v)| u * v).sum();
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= d * bi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::compose;
    use crate::synth::sparse_matrix;

    fn e1(n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        v
    }

    #[test]
    fn diagonal_breaks_down_after_one_step() {
        let a = DenseMatrix::from_fn(4, 4, |i, j| if i == j { (i + 2) as f64 } else { 0.0 });
        let r = gkb(&a, &e1(4), 4, Reorth::None).unwrap();
        assert!(r.breakdown);
        assert_eq!(r.b.alphas, vec![2.0]);
        assert!(r.b.betas.is_empty());
    }

    #[test]
    fn full_reorth_reconstructs_sparse() {
        let a = sparse_matrix(100, 60, 0.1, 7);
        let r = gkb(&a, &e1(60), 60, Reorth::Full).unwrap();
        assert!(!r.breakdown);
        let rec = compose(r.q.matrix(), &r.b, r.p.matrix());
        assert!(rec.sub(&a).frob_norm() <= 1e-8 * a.frob_norm());
        assert!(r.q.drift() <= 1e-10 && r.p.drift() <= 1e-10);
    }

    #[test]
    fn closures_work_as_operator() {
        let a = crate::synth::gaussian_matrix(8, 5, 1);
        let at = a.clone();
        let op = FnOperator {
            rows: 8,
            cols: 5,
            forward: move |x: &[f64]| a.matvec(x),
            adjoint: move |y: &[f64]| at.tmatvec(y),
        };
        let r = gkb(&op, &e1(5), 5, Reorth::ShortSpace).unwrap();
        assert_eq!(r.b.order(), 5);
    }

    #[test]
    fn bad_arguments() {
        let a = DenseMatrix::identity(3, 3);
        assert!(gkb(&a, &[1.0, 0.0], 2, Reorth::None).is_err());
        assert!(gkb(&a, &[2.0, 0.0, 0.0], 2, Reorth::None).is_err());
        assert!(gkb(&a, &e1(3), 4, Reorth::None).is_err());
    }
}
